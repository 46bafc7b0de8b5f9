import json
import sys

import numpy as np

from agrip.cli import main
from agrip.fields import make_field
from agrip.constructions import devore
from agrip.matrix import read_sparse, write_sparse


def run_cli(*argv):
    return main(list(argv))


def test_construct_devore_matches_library(tmp_path):
    out = tmp_path / "d.agrip"
    assert run_cli("construct", "--family", "devore", "--field", "3",
                   "--r", "2", "--out", str(out)) == 0
    M = read_sparse(out)
    assert M == devore(make_field(3), 2)
    sidecar = json.loads((tmp_path / "d.agrip.json").read_text())
    assert sidecar["family"] == "devore"
    assert sidecar["n"] == 9 and sidecar["N"] == 9
    manifest = json.loads((tmp_path / "d.agrip.manifest.json").read_text())
    assert manifest["subcommand"] == "construct"
    assert str(out) in manifest["outputs"]


def test_missing_required_family_argument_exits_1(tmp_path, capsys):
    code = run_cli("construct", "--family", "devore", "--field", "3",
                   "--out", str(tmp_path / "x.agrip"))
    assert code == 1


def test_missing_flag_exits_1(tmp_path):
    assert run_cli("construct", "--family", "devore", "--field", "3") == 1


def test_composite_field_exits_2(tmp_path):
    code = run_cli("construct", "--family", "devore", "--field", "4",
                   "--r", "2", "--out", str(tmp_path / "x.agrip"))
    assert code == 2


def test_cap_exceeded_exits_3(tmp_path):
    code = run_cli("construct", "--family", "planecurve", "--field", "5",
                   "--r", "3", "--out", str(tmp_path / "x.agrip"))
    assert code == 3


def test_analyze_devore(tmp_path, capsys):
    out = tmp_path / "d.agrip"
    run_cli("construct", "--family", "devore", "--field", "3", "--r", "2",
            "--out", str(out))
    report_path = tmp_path / "report.json"
    assert run_cli("analyze", "--in", str(out), "--out", str(report_path)) == 0
    report = json.loads(report_path.read_text())
    assert report["mu"] == {"num": 1, "den": 3, "decimal": "0.333333333333"}
    assert report["strong_coherence"]["cond1"] is False


def test_analyze_identity_strong_coherent(tmp_path, capsys):
    from tests.test_matrix import identity_matrix
    path = tmp_path / "id.agrip"
    write_sparse(identity_matrix(3), path)
    assert run_cli("analyze", "--in", str(path)) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["mu"]["num"] == 0
    assert report["orthonormal"] is True
    assert report["sparsity_bound"] == 3
    assert report["strong_coherence"]["cond1"] is True
    assert report["strong_coherence"]["cond2"] is True


def test_analyze_truncated_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.agrip"
    bad.write_text("AGRIP-SPARSE 1 3 3 5\n0 0 1\n1 0 1\n")
    assert run_cli("analyze", "--in", str(bad)) == 2
    err = capsys.readouterr().err
    assert "line" in err


def test_sign_balanced_round_trip(tmp_path):
    out = tmp_path / "d.agrip"
    run_cli("construct", "--family", "devore", "--field", "5", "--r", "2",
            "--out", str(out))
    signed = tmp_path / "b.agrip"
    assert run_cli("sign", "--scheme", "balanced", "--in", str(out),
                   "--design", str(tmp_path / "d.agrip.json"),
                   "--out", str(signed)) == 0
    Mb = read_sparse(signed)
    vals = np.concatenate([Mb.column(j)[1] for j in range(Mb.N)])
    assert set(np.unique(vals)) <= {-1, 1}
    sidecar = json.loads((tmp_path / "b.agrip.json").read_text())
    assert sidecar["sign_scheme"]["kind"] == "balanced"


def test_sign_random_reproducible(tmp_path):
    out = tmp_path / "d.agrip"
    run_cli("construct", "--family", "devore", "--field", "3", "--r", "2",
            "--out", str(out))
    s1, s2 = tmp_path / "s1.agrip", tmp_path / "s2.agrip"
    for s in (s1, s2):
        assert run_cli("sign", "--scheme", "random:99", "--in", str(out),
                       "--design", str(tmp_path / "d.agrip.json"),
                       "--out", str(s)) == 0
    assert s1.read_bytes() == s2.read_bytes()


def test_verify_coherence_jsonl(tmp_path, capsys):
    out = tmp_path / "d.agrip"
    run_cli("construct", "--family", "devore", "--field", "3", "--r", "2",
            "--out", str(out))
    assert run_cli("verify", "--check", "coherence", "--in", str(out)) == 0
    line = json.loads(capsys.readouterr().out.strip())
    assert line["agree"] is True
    assert line["oracle_value"] == {"num": 1, "den": 3}


def test_verify_diff_trick(tmp_path, capsys):
    out = tmp_path / "m.agrip"
    run_cli("construct", "--family", "projspace", "--field", "3", "--dim", "2",
            "--r", "1", "--out", str(out))
    assert run_cli("verify", "--check", "diff-trick",
                   "--design", str(tmp_path / "m.agrip.json")) == 0
    line = json.loads(capsys.readouterr().out.strip())
    assert line["agree"] is True


def test_verify_curves_and_fermat(capsys):
    assert run_cli("verify", "--check", "curves", "--field", "3", "--r", "2") == 0
    lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert lines[0]["oracle_value"] == 468
    assert run_cli("verify", "--check", "fermat", "--field", "2^2") == 0
    line = json.loads(capsys.readouterr().out.strip())
    assert line["oracle_value"] == 9 and line["fast_value"] == 3
    assert line["agree"] is False  # min exceeds the bound; not an equality check


def test_recover_cli(tmp_path):
    out = tmp_path / "d.agrip"
    run_cli("construct", "--family", "devore", "--field", "7", "--r", "2",
            "--out", str(out))
    rep = tmp_path / "rec.json"
    assert run_cli("recover", "--matrix", str(out), "--k", "1..2",
                   "--trials", "20", "--seed", "5", "--out", str(rep)) == 0
    report = json.loads(rep.read_text())
    assert report["support_recovery_rate"]["1"] == 1.0
    assert report["support_recovery_rate"]["2"] == 1.0


def test_pipeline_and_replay_byte_identical(tmp_path):
    outdir = tmp_path / "run1"
    assert run_cli("pipeline", "--family", "devore", "--field", "3", "--r", "2",
                   "--sign-scheme", "balanced", "--analyze",
                   "--recover-k", "1..2", "--trials", "10",
                   "--seed", "3", "--out-dir", str(outdir)) == 0
    manifest = json.loads((outdir / "pipeline.manifest.json").read_text())
    assert set(manifest["outputs"])
    replay_dir = tmp_path / "run2"
    assert run_cli("replay", "--manifest", str(outdir / "pipeline.manifest.json"),
                   "--out-dir", str(replay_dir)) == 0
    for name in ("matrix.agrip", "signed.agrip", "report.json", "recovery.json"):
        assert (outdir / name).read_bytes() == (replay_dir / name).read_bytes()


def test_construct_toric_case2_flags(tmp_path):
    out = tmp_path / "t2.agrip"
    assert run_cli("construct", "--family", "toric", "--field", "5",
                   "--case", "2", "--d", "1", "--e", "1", "--rr", "1",
                   "--out", str(out)) == 0
    M = read_sparse(out)
    assert (M.n, M.N) == (80, 5 ** 5)


def test_field_descriptor_with_modulus(tmp_path):
    out = tmp_path / "f9.agrip"
    assert run_cli("construct", "--family", "devore", "--field", "3^2/1,0,1",
                   "--r", "2", "--out", str(out)) == 0
    sidecar = json.loads((tmp_path / "f9.agrip.json").read_text())
    assert sidecar["field"] == "3^2/1,0,1"


def test_replay_detects_tampering(tmp_path, capsys):
    out = tmp_path / "m.agrip"
    run_cli("construct", "--family", "devore", "--field", "3", "--r", "2",
            "--out", str(out))
    manifest_path = tmp_path / "m.agrip.manifest.json"
    manifest = json.loads(manifest_path.read_text())
    victim = str(out)
    manifest["outputs"][victim] = "0" * 64  # falsify the recorded digest
    manifest_path.write_text(json.dumps(manifest))
    assert run_cli("replay", "--manifest", str(manifest_path)) == 2
    assert "digest mismatch" in capsys.readouterr().err


def test_replay_construct_manifest(tmp_path):
    out = tmp_path / "a" / "m.agrip"
    out.parent.mkdir()
    run_cli("construct", "--family", "devore", "--field", "5", "--r", "2",
            "--out", str(out))
    replay_dir = tmp_path / "b"
    assert run_cli("replay", "--manifest", str(tmp_path / "a" / "m.agrip.manifest.json"),
                   "--out-dir", str(replay_dir)) == 0
    assert (replay_dir / "m.agrip").read_bytes() == out.read_bytes()


def test_pipeline_balanced_devore_reproduces_certification_facts(tmp_path):
    outdir = tmp_path / "bal"
    assert run_cli("pipeline", "--family", "devore", "--field", "5", "--r", "2",
                   "--sign-scheme", "balanced", "--analyze",
                   "--out-dir", str(outdir)) == 0
    report = json.loads((outdir / "report.json").read_text())
    assert report["mu"] == {"num": 1, "den": 5, "decimal": "0.2"}
    assert report["omega_signed"]["num"] == 1
    assert report["omega_signed"]["den"] == 30
    assert report["strong_coherence"]["cond1"] is False
    cert = report["strong_coherence_certificate"]
    assert cert["condition_a"] is True
    assert cert["sufficient_ok"] is False  # condition b fails at q = 5
    assert cert["ground_truth"]["cond1"] is False
