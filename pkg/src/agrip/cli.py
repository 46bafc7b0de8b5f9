"""Command-line surface: construct, sign, analyze, verify, recover, pipeline.

Conventions:

* data goes to files (or stdout for verify); diagnostics go to stderr;
* exit codes: 0 success, 1 usage, 2 precondition/data error, 3 cap exceeded;
* every writing command emits a manifest (<out>.manifest.json) holding the
  resolved arguments, seeds, tool version and sha256 digests of inputs and
  outputs; `agrip replay` re-runs a manifest and verifies byte-identity;
* a matrix file <out> is accompanied by a sidecar <out>.json carrying the
  construction metadata needed to rebuild its design (the `sign` and
  `pipeline` commands read it back; unknown keys are rejected).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import AgripError, PreconditionError
from .fields import parse_descriptor
from . import constructions as cons
from . import matrix as mx
from . import recovery as rec
from . import signs as sg
from . import verification as ver

_SIDECAR_KEYS = {"format", "family", "params", "field", "n", "N",
                 "sign_scheme", "column_support", "bound_on_zeros",
                 "tuple_count", "class_count", "surface_points",
                 "coherence_bound"}
_MANIFEST_KEYS = {"format", "tool_version", "subcommand", "arguments",
                  "seeds", "inputs", "outputs"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _dump_json(obj, path):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _check_keys(obj, allowed, what):
    unknown = set(obj) - allowed
    if unknown:
        raise PreconditionError(
            f"unknown keys {sorted(unknown)} in {what} (strict schema)")


def _write_manifest(subcommand, args_dict, inputs, outputs, manifest_path):
    manifest = {
        "format": "agrip-manifest/1",
        "tool_version": __version__,
        "subcommand": subcommand,
        "arguments": args_dict,
        "seeds": [v for k, v in sorted(args_dict.items()) if k == "seed"
                  and v is not None],
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    _dump_json(manifest, manifest_path)
    return manifest


def _sidecar_for(matrix_path) -> str:
    return str(matrix_path) + ".json"


def _manifest_for(path) -> str:
    return str(path) + ".manifest.json"


def _load_sidecar(path) -> dict:
    with open(path) as fh:
        sidecar = json.load(fh)
    _check_keys(sidecar, _SIDECAR_KEYS, f"sidecar {path}")
    return sidecar


# -- construct ----------------------------------------------------------------


def _build_matrix(args) -> "mx.MeasurementMatrix":
    field = parse_descriptor(args.field)
    family = args.family
    if family == "devore":
        _require(args, "r")
        return cons.devore(field, args.r)
    if family == "consta-poles":
        _require(args, "poles", "points")
        return cons.construction_a_simple_poles(
            field, _parse_points(args.poles), _parse_points(args.points))
    if family == "consta-point":
        _require(args, "t", "points")
        return cons.construction_a_single_point(
            field, args.t, _parse_points(args.points))
    if family == "planecurve":
        _require(args, "r")
        return cons.plane_curve_matrix(field, args.r)
    if family == "fermat":
        return cons.fermat_hyperplane_matrix(field)
    if family in ("projspace", "ruled", "toric"):
        design = _build_design_from_args(field, args)
        return cons.evaluation_matrix(design)
    raise PreconditionError(f"unknown family {family!r}")


def _build_design_from_args(field, args):
    if args.family == "projspace":
        _require(args, "dim", "r")
        return cons.projective_space_design(field, args.dim, args.r)
    if args.family == "ruled":
        _require(args, "d1", "d2")
        return cons.ruled_surface_design(field, args.d1, args.d2)
    if args.family == "toric":
        _require(args, "case", "d")
        return cons.toric_design(field, args.case, args.d, args.e, args.rr)
    raise PreconditionError(f"family {args.family!r} has no evaluation design")


def _require(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_"), None) is None]
    if missing:
        raise SystemExit(_usage_error(
            f"family {args.family!r} requires --{', --'.join(missing)}"))


def _usage_error(message) -> int:
    print(f"agrip: error: {message}", file=sys.stderr)
    return 1


def _parse_points(text):
    return [p.strip() for p in text.split(",") if p.strip() != ""]


def _matrix_sidecar(M) -> dict:
    sidecar = {"format": "agrip-sidecar/1", "n": M.n, "N": M.N}
    for key in ("family", "params", "field", "sign_scheme", "column_support",
                "bound_on_zeros", "tuple_count", "class_count",
                "surface_points", "coherence_bound"):
        if key in M.meta:
            sidecar[key] = M.meta[key]
    return sidecar


def cmd_construct(args) -> int:
    M = _build_matrix(args)
    out = Path(args.out)
    mx.write_sparse(M, out)
    _dump_json(_matrix_sidecar(M), _sidecar_for(out))
    _write_manifest("construct", _args_dict(args), [],
                    [out, _sidecar_for(out)], _manifest_for(out))
    print(f"wrote {out} ({M.n} x {M.N}, nnz {M.nnz})", file=sys.stderr)
    return 0


# -- sign ----------------------------------------------------------------------


def _apply_scheme(M, scheme_text, sidecar):
    if scheme_text == "ones":
        return M, {"kind": "all_ones"}
    if scheme_text.startswith("random:"):
        seed = int(scheme_text.split(":", 1)[1])
        signed = sg.randomize_signs(M, seed)
        return signed, signed.meta["sign_scheme"]
    if scheme_text == "balanced":
        field = parse_descriptor(sidecar["field"])
        design = cons.build_design(sidecar["family"], field, sidecar["params"])
        signed = sg.balanced_matrix(design)
        return signed, signed.meta["sign_scheme"]
    raise PreconditionError(f"unknown sign scheme {scheme_text!r}")


def cmd_sign(args) -> int:
    sidecar = _load_sidecar(args.design)
    M = mx.read_sparse(args.infile, meta={k: sidecar.get(k) for k in
                                          ("family", "params", "field")})
    signed, scheme = _apply_scheme(M, args.scheme, sidecar)
    out = Path(args.out)
    mx.write_sparse(signed, out)
    new_sidecar = dict(sidecar)
    new_sidecar["sign_scheme"] = scheme
    _dump_json(new_sidecar, _sidecar_for(out))
    _write_manifest("sign", _args_dict(args), [args.infile, args.design],
                    [out, _sidecar_for(out)], _manifest_for(out))
    print(f"wrote {out}", file=sys.stderr)
    return 0


# -- analyze ---------------------------------------------------------------------


def _certificate_if_balanced(M, meta, log_base, pair_cap):
    sign_kind = (meta.get("sign_scheme") or {}).get("kind")
    if sign_kind != "balanced":
        return None
    if meta.get("family") not in ("devore", "projspace", "ruled", "toric"):
        return None
    field = parse_descriptor(meta["field"])
    design = cons.build_design(meta["family"], field, meta["params"])
    cert = sg.certify_strong_coherence(M, design, log_base=log_base,
                                       pair_cap=max(pair_cap, M.N))
    return cert.to_dict()


def cmd_analyze(args) -> int:
    meta = {}
    sidecar_path = _sidecar_for(args.infile)
    if os.path.exists(sidecar_path):
        sidecar = _load_sidecar(sidecar_path)
        meta = {k: sidecar.get(k) for k in ("family", "params", "field",
                                            "sign_scheme")}
    M = mx.read_sparse(args.infile, meta=meta)
    report = mx.coherence_report(M, log_base=args.log_base,
                                 omega_mode=args.omega_mode,
                                 pair_cap=args.pair_cap)
    payload = report.to_dict()
    if meta.get("sign_scheme") is not None:
        payload["sign_scheme"] = meta["sign_scheme"]
    certificate = _certificate_if_balanced(M, meta, args.log_base, args.pair_cap)
    if certificate is not None:
        payload["strong_coherence_certificate"] = certificate
    if args.out:
        _dump_json(payload, args.out)
        _write_manifest("analyze", _args_dict(args), [args.infile],
                        [args.out], _manifest_for(args.out))
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


# -- verify -----------------------------------------------------------------------


def cmd_verify(args) -> int:
    results = []
    if args.check == "coherence":
        if not args.infile:
            raise SystemExit(_usage_error("--check coherence needs --in"))
        M = mx.read_sparse(args.infile)
        oracle = ver.brute_force_coherence(M)
        fast = mx.coherence(M)
        results.append(ver.OracleResult("coherence", args.infile, oracle, fast))
    elif args.check == "diff-trick":
        if not args.design:
            raise SystemExit(_usage_error("--check diff-trick needs --design"))
        sidecar = _load_sidecar(args.design)
        field = parse_descriptor(sidecar["field"])
        design = cons.build_design(sidecar["family"], field, sidecar["params"])
        oracle = ver.coherence_via_differences(design)
        fast = None
        if design.num_columns <= mx.DEFAULT_PAIR_CAP:
            fast = mx.coherence(cons.evaluation_matrix(design))
        results.append(ver.OracleResult("coherence_via_differences",
                                        args.design, oracle, fast))
    elif args.check == "rip":
        if not args.infile or args.k is None:
            raise SystemExit(_usage_error("--check rip needs --in and --k"))
        M = mx.read_sparse(args.infile)
        delta = ver.brute_force_rip_delta(M, args.k)
        results.append(ver.OracleResult(f"delta_{args.k}", args.infile, delta))
    elif args.check == "curves":
        if not args.field or args.r is None:
            raise SystemExit(_usage_error("--check curves needs --field and --r"))
        census = ver.count_smooth_plane_curves(parse_descriptor(args.field), args.r)
        results.append(ver.OracleResult(
            "smooth_curve_tuples", f"q={census.q},r={census.r}",
            census.tuple_count,
            census.lower_bound if not census.bound_vacuous else None))
        results.append(ver.OracleResult(
            "smooth_curve_classes", f"q={census.q},r={census.r}",
            census.class_count))
    elif args.check == "fermat":
        if not args.field:
            raise SystemExit(_usage_error("--check fermat needs --field"))
        report = ver.fermat_section_counts(parse_descriptor(args.field),
                                           t=args.t if args.t else 1)
        results.append(ver.OracleResult(
            "fermat_min_section", f"q={report.q},t={report.t}",
            report.min_count, report.lower_bound))
    else:
        raise SystemExit(_usage_error(f"unknown check {args.check!r}"))
    for r in results:
        json.dump(r.to_dict(), sys.stdout, sort_keys=True)
        print()
    return 0


# -- recover --------------------------------------------------------------------


def _parse_k_range(text):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(k) for k in text.split(",")]


def cmd_recover(args) -> int:
    M = mx.read_sparse(args.matrix)
    report = rec.run_experiment(M, _parse_k_range(args.k), args.trials,
                                sigma=args.sigma, seed=args.seed,
                                algorithm=args.algorithm)
    _dump_json(report.to_dict(), args.out)
    _write_manifest("recover", _args_dict(args), [args.matrix], [args.out],
                    _manifest_for(args.out))
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


# -- pipeline ---------------------------------------------------------------------


def cmd_pipeline(args) -> int:
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    matrix_path = outdir / "matrix.agrip"
    construct_args = argparse.Namespace(**{**vars(args), "out": str(matrix_path)})
    M = _build_matrix(construct_args)
    mx.write_sparse(M, matrix_path)
    _dump_json(_matrix_sidecar(M), _sidecar_for(matrix_path))
    artifacts = [matrix_path, Path(_sidecar_for(matrix_path))]

    current = matrix_path
    if args.sign_scheme and args.sign_scheme != "ones":
        signed_path = outdir / "signed.agrip"
        sidecar = _load_sidecar(_sidecar_for(matrix_path))
        signed, scheme = _apply_scheme(
            mx.read_sparse(matrix_path, meta=_matrix_sidecar(M)),
            args.sign_scheme, sidecar)
        mx.write_sparse(signed, signed_path)
        new_sidecar = dict(sidecar)
        new_sidecar["sign_scheme"] = scheme
        _dump_json(new_sidecar, _sidecar_for(signed_path))
        artifacts += [signed_path, Path(_sidecar_for(signed_path))]
        current = signed_path

    if args.analyze:
        report_path = outdir / "report.json"
        sidecar = _load_sidecar(_sidecar_for(current))
        Mc = mx.read_sparse(current, meta={k: sidecar.get(k) for k in
                                           ("family", "params", "field",
                                            "sign_scheme")})
        report = mx.coherence_report(Mc, log_base=args.log_base,
                                     omega_mode=args.omega_mode,
                                     pair_cap=args.pair_cap)
        payload = report.to_dict()
        if sidecar.get("sign_scheme") is not None:
            payload["sign_scheme"] = sidecar["sign_scheme"]
        certificate = _certificate_if_balanced(Mc, sidecar, args.log_base,
                                               args.pair_cap)
        if certificate is not None:
            payload["strong_coherence_certificate"] = certificate
        _dump_json(payload, report_path)
        artifacts.append(report_path)

    if args.recover_k:
        recover_path = outdir / "recovery.json"
        Mc = mx.read_sparse(current)
        report = rec.run_experiment(Mc, _parse_k_range(args.recover_k),
                                    args.trials, sigma=args.sigma,
                                    seed=args.seed, algorithm=args.algorithm)
        _dump_json(report.to_dict(), recover_path)
        artifacts.append(recover_path)

    manifest_path = outdir / "pipeline.manifest.json"
    _write_manifest("pipeline", _args_dict(args), [], artifacts, manifest_path)
    print(f"pipeline artifacts in {outdir}", file=sys.stderr)
    return 0


# -- replay -----------------------------------------------------------------------


def cmd_replay(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    _check_keys(manifest, _MANIFEST_KEYS, f"manifest {args.manifest}")
    sub = manifest["subcommand"]
    stored = dict(manifest["arguments"])
    if args.out_dir:
        # re-root every output path into the replay directory
        outdir = Path(args.out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        mapping = {}
        for old in manifest["outputs"]:
            new = outdir / Path(old).name
            mapping[old] = str(new)
        for key in ("out", "out_dir"):
            if stored.get(key) in mapping:
                stored[key] = mapping[stored[key]]
        if sub == "pipeline":
            stored["out_dir"] = str(outdir)
            mapping = {old: str(outdir / Path(old).name)
                       for old in manifest["outputs"]}
    else:
        mapping = {old: old for old in manifest["outputs"]}
    ns = argparse.Namespace(**stored)
    handler = {"construct": cmd_construct, "sign": cmd_sign,
               "analyze": cmd_analyze, "recover": cmd_recover,
               "pipeline": cmd_pipeline}.get(sub)
    if handler is None:
        raise PreconditionError(f"manifest subcommand {sub!r} cannot be replayed")
    handler(ns)
    mismatches = []
    for old, digest in manifest["outputs"].items():
        new = mapping[old]
        actual = _sha256(new)
        if actual != digest:
            mismatches.append((new, digest, actual))
    if mismatches:
        for path, want, got in mismatches:
            print(f"digest mismatch for {path}: recorded {want}, got {got}",
                  file=sys.stderr)
        return 2
    print("replay verified: all output digests match", file=sys.stderr)
    return 0


# -- parser ------------------------------------------------------------------------


def _args_dict(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def build_parser() -> _Parser:
    parser = _Parser(prog="agrip",
                     description="deterministic measurement matrices from "
                                 "finite geometry, with exact verification")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_family_options(p):
        p.add_argument("--family", required=True,
                       choices=["devore", "consta-poles", "consta-point",
                                "planecurve", "fermat", "projspace", "ruled",
                                "toric"])
        p.add_argument("--field", required=True,
                       help='field descriptor: "p", "p^s" or "p^s/c0,c1,..."')
        p.add_argument("--r", type=int, help="degree (devore/planecurve/projspace)")
        p.add_argument("--t", type=int, help="pole order (consta-point)")
        p.add_argument("--poles", help="comma list of pole points (consta-poles)")
        p.add_argument("--points", help="comma list of evaluation points")
        p.add_argument("--dim", type=int, help="ambient dimension (projspace)")
        p.add_argument("--d1", type=int, help="first bidegree (ruled)")
        p.add_argument("--d2", type=int, help="second bidegree (ruled)")
        p.add_argument("--case", type=int, choices=[1, 2, 3], help="toric case")
        p.add_argument("--d", type=int, help="toric degree")
        p.add_argument("--e", type=int, help="toric case-2 parameter e")
        p.add_argument("--rr", type=int, help="toric case-2 parameter r")

    p = sub.add_parser("construct", help="build a matrix family instance")
    add_family_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("sign", help="apply a sign scheme to a binary matrix")
    p.add_argument("--scheme", required=True,
                   help="ones | random:SEED | balanced")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--design", required=True, help="design sidecar JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("analyze", help="exact coherence report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--log-base", default="natural",
                   choices=["natural", "base2", "base10"])
    p.add_argument("--omega-mode", default="signed",
                   choices=["signed", "absolute"])
    p.add_argument("--pair-cap", type=int, default=mx.DEFAULT_PAIR_CAP)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="independent brute-force oracles")
    p.add_argument("--check", required=True,
                   choices=["coherence", "diff-trick", "rip", "curves", "fermat"])
    p.add_argument("--in", dest="infile")
    p.add_argument("--design")
    p.add_argument("--field")
    p.add_argument("--r", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("recover", help="seeded sparse-recovery experiments")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", required=True, help='sweep, e.g. "1..4" or "1,2,3"')
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithm", default="omp", choices=["omp", "ost"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("pipeline", help="construct -> sign -> analyze -> recover")
    add_family_options(p)
    p.add_argument("--sign-scheme", default="ones",
                   help="ones | random:SEED | balanced")
    p.add_argument("--analyze", action="store_true")
    p.add_argument("--log-base", default="natural",
                   choices=["natural", "base2", "base10"])
    p.add_argument("--omega-mode", default="signed",
                   choices=["signed", "absolute"])
    p.add_argument("--pair-cap", type=int, default=mx.DEFAULT_PAIR_CAP)
    p.add_argument("--recover-k", help='recovery sweep, e.g. "1..3"')
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithm", default="omp", choices=["omp", "ost"])
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("replay", help="re-run a manifest and verify digests")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    except AgripError as exc:
        print(f"agrip: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"agrip: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
