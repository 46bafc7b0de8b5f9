import numpy as np
import pytest

from agrip.errors import PreconditionError
from agrip.fields import make_field
from agrip.constructions import devore, ruled_surface_design
from agrip.signs import balanced_matrix
from agrip.recovery import (
    SparseSignal,
    measure,
    normalized_operator,
    omp,
    one_step_thresholding,
    run_experiment,
)
from tests.test_matrix import dense_to_matrix, identity_matrix


def test_sparse_signal_validation():
    SparseSignal(5, (1, 3), (1.0, -2.0))
    with pytest.raises(PreconditionError):
        SparseSignal(5, (3, 1), (1.0, 1.0))
    with pytest.raises(PreconditionError):
        SparseSignal(5, (1,), (0.0,))
    with pytest.raises(PreconditionError):
        SparseSignal(2, (4,), (1.0,))


def test_measure_zero_signal():
    M = devore(make_field(3), 2)
    x = SparseSignal(M.N, (), ())
    assert np.allclose(measure(M, x), 0)


def test_measure_unit_vector_extracts_normalized_column():
    M = devore(make_field(3), 2)
    x = SparseSignal(M.N, (4,), (1.0,))
    y = measure(M, x)
    phi = normalized_operator(M)
    col = np.asarray(phi[:, [4]].todense()).ravel()
    assert np.allclose(y, col)
    assert abs(np.linalg.norm(y) - 1.0) < 1e-12


def test_measure_noise_deterministic():
    M = devore(make_field(3), 2)
    x = SparseSignal(M.N, (2,), (1.5,))
    y1 = measure(M, x, sigma=0.1, seed=9)
    y2 = measure(M, x, sigma=0.1, seed=9)
    y3 = measure(M, x, sigma=0.1, seed=10)
    assert np.array_equal(y1, y2)
    assert not np.array_equal(y1, y3)


def test_omp_single_atom():
    M = devore(make_field(3), 2)
    for j in (0, 5, 8):
        y = measure(M, SparseSignal(M.N, (j,), (1.0,)))
        result = omp(M, y, 1)
        assert result.estimate.support == (j,)
        assert abs(result.estimate.values[0] - 1.0) < 1e-10
        assert not result.singular_subproblem


def test_omp_exact_recovery_in_guarantee_regime():
    M = devore(make_field(7), 2)  # mu = 1/7, guarantee up to k = 3
    rng = np.random.default_rng(0)
    for k in (1, 2, 3):
        for _ in range(25):
            support = tuple(sorted(rng.choice(M.N, size=k, replace=False).tolist()))
            values = tuple(float(v) for v in
                           (rng.integers(0, 2, k) * 2 - 1) * rng.uniform(1, 2, k))
            x = SparseSignal(M.N, support, values)
            result = omp(M, measure(M, x), k)
            assert result.estimate.support == support


def test_omp_singular_subproblem_flagged():
    arr = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1]])  # duplicated column
    M = dense_to_matrix(arr)
    y = np.array([1.0, 1.0, 0.0])
    result = omp(M, y, 2)
    assert result.singular_subproblem
    assert len(result.estimate.support) <= 1


def test_one_step_thresholding_identity():
    M = identity_matrix(4)
    y = measure(M, SparseSignal(4, (2,), (1.0,)))
    result = one_step_thresholding(M, y, 1)
    assert result.estimate.support == (2,)


def test_one_step_thresholding_degenerate_k_equals_n():
    arr = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    M = dense_to_matrix(arr)
    y = np.array([1.0, 0.5, 0.25])
    result = one_step_thresholding(M, y, 3)
    assert result.singular_subproblem  # duplicated columns: rank-deficient refit


def test_run_experiment_empty_and_deterministic():
    M = devore(make_field(3), 2)
    empty = run_experiment(M, [1, 2], trials=0, seed=4)
    assert empty.support_recovery_rate == {1: None, 2: None}
    r1 = run_experiment(M, [1, 2], trials=10, seed=4)
    r2 = run_experiment(M, [1, 2], trials=10, seed=4)
    assert r1.to_dict() == r2.to_dict()
    r3 = run_experiment(M, [1, 2], trials=10, seed=5)
    assert r1.to_dict() != r3.to_dict()


def test_run_experiment_noiseless_sweep_k1_always_recovers():
    M = devore(make_field(5), 2)
    report = run_experiment(M, [1], trials=50, seed=1)
    assert report.support_recovery_rate[1] == 1.0
    assert report.mean_relative_error[1] < 1e-10


def test_recovery_rate_declines_beyond_guarantee():
    M = devore(make_field(3), 2)  # mu = 1/3: guarantee only k <= 2
    report = run_experiment(M, [1, 2, 3, 4, 5, 6], trials=30, seed=2)
    rates = report.support_recovery_rate
    assert rates[1] == 1.0
    assert min(rates.values()) < 1.0  # failure appears somewhere in the sweep


def test_recovery_trend_degrades_over_the_sweep():
    # monotone-degrading on average over the sweep: the first-half mean rate
    # is at least the second-half mean (a trend, not a per-pair assertion)
    M = devore(make_field(5), 2)
    report = run_experiment(M, [1, 2, 3, 4, 5, 6], trials=40, seed=8)
    rates = [report.support_recovery_rate[k] for k in (1, 2, 3, 4, 5, 6)]
    assert np.mean(rates[:3]) >= np.mean(rates[3:])


def test_one_step_thresholding_on_balanced_matrix():
    design = ruled_surface_design(make_field(7), 1, 0)
    Mb = balanced_matrix(design)
    report = run_experiment(Mb, [1], trials=30, sigma=0.01, seed=3,
                            algorithm="ost")
    assert report.support_recovery_rate[1] >= 0.9
