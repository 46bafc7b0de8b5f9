"""Sparse-recovery experiments on the constructed matrices.

Recovery operates on the column-normalized view of a matrix (coherence is
defined on normalized columns); the integer matrix is left untouched.  Two
solvers: orthogonal matching pursuit for the noiseless mu(2k-1) < 1 regime,
and one-step thresholding (keep the k largest correlations, then refit) for
noisy measurements.

Determinism: every trial draws from numpy substreams keyed by
(seed, k, trial), so reports are reproducible and independent of execution
order.  The amplitude model is uniform +-1 signs with magnitudes uniform in
[1, 2], recorded in the report.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .errors import PreconditionError
from .matrix import MeasurementMatrix

AMPLITUDE_MODEL = "signs +-1 uniform, magnitudes uniform in [1, 2]"
_EXACT_REFIT_MAX = 4
_AMPLITUDE_TOL = 1e-10


@dataclass
class SparseSignal:
    """A k-sparse vector: sorted support indices and their nonzero values."""

    length: int
    support: tuple
    values: tuple

    def __post_init__(self):
        if len(self.support) != len(self.values):
            raise PreconditionError("support and values disagree in length")
        if any(v == 0 for v in self.values):
            raise PreconditionError("values on the support must be nonzero")
        if list(self.support) != sorted(set(self.support)):
            raise PreconditionError("support must be sorted and duplicate-free")
        if self.support and not (0 <= self.support[0] <= self.support[-1] < self.length):
            raise PreconditionError("support indices out of range")

    @property
    def k(self) -> int:
        return len(self.support)

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.length)
        x[list(self.support)] = self.values
        return x


@dataclass
class RecoveryResult:
    estimate: SparseSignal
    singular_subproblem: bool = False


def normalized_operator(M: MeasurementMatrix) -> sp.csc_matrix:
    """Unit-column float view of the matrix."""
    A = M.to_csc().astype(np.float64)
    norms = np.sqrt(M.sqnorms().astype(np.float64))
    return A @ sp.diags(1.0 / norms)


def measure(M: MeasurementMatrix, x: SparseSignal, sigma: float = 0.0,
            seed=None, _phi=None) -> np.ndarray:
    """y = Phi_normalized x + sigma * g with seeded Gaussian g."""
    if x.length != M.N:
        raise PreconditionError(f"signal length {x.length} != N = {M.N}")
    phi = normalized_operator(M) if _phi is None else _phi
    y = np.zeros(M.n)
    for idx, val in zip(x.support, x.values):
        col = phi[:, [idx]]
        y[col.indices] += val * col.data
    if sigma:
        rng = seed if isinstance(seed, np.random.Generator) \
            else np.random.default_rng(seed)
        y = y + sigma * rng.standard_normal(M.n)
    return y


def _refit(cols: np.ndarray, y: np.ndarray):
    """Least squares on the selected columns.

    Tiny systems go through exact rational normal equations (float inputs
    converted exactly), larger ones through numpy lstsq.  Returns
    (coefficients, singular_flag).
    """
    k = cols.shape[1]
    gram = cols.T @ cols
    rhs = cols.T @ y
    if k <= _EXACT_REFIT_MAX:
        G = [[Fraction(float(gram[i, j])) for j in range(k)] for i in range(k)]
        b = [Fraction(float(v)) for v in rhs]
        sol, singular = _solve_fraction_system(G, b)
        if not singular:
            return np.array([float(v) for v in sol]), False
        # fall through to lstsq on genuinely rank-deficient systems
    try:
        beta, _, rank, _ = np.linalg.lstsq(cols, y, rcond=None)
        return beta, rank < k
    except np.linalg.LinAlgError:
        return np.zeros(k), True


def _solve_fraction_system(G, b):
    k = len(b)
    aug = [row[:] + [b[i]] for i, row in enumerate(G)]
    for c in range(k):
        piv = next((r for r in range(c, k) if aug[r][c]), None)
        if piv is None:
            return None, True
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for r in range(k):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[c])]
    return [aug[r][k] for r in range(k)], False


def _signal_from(support, beta, N) -> SparseSignal:
    pairs = [(int(i), float(v)) for i, v in zip(support, beta) if v != 0.0]
    pairs.sort()
    return SparseSignal(N, tuple(i for i, _ in pairs),
                        tuple(v for _, v in pairs))


def omp(M: MeasurementMatrix, y: np.ndarray, k: int,
        _phi=None) -> RecoveryResult:
    """Orthogonal matching pursuit: k greedy max-correlation selections with
    a least-squares refit after each; ties break to the lowest column index."""
    if k > M.n:
        raise PreconditionError("k must be <= n")
    phi = normalized_operator(M) if _phi is None else _phi
    dense_cache = {}
    residual = y.astype(np.float64).copy()
    selected: list[int] = []
    singular = False
    beta = np.zeros(0)
    for _ in range(k):
        corr = np.abs(phi.T @ residual)
        if selected:
            corr[selected] = -1.0
        idx = int(np.argmax(corr))
        selected.append(idx)
        for i in selected:
            if i not in dense_cache:
                dense_cache[i] = np.asarray(phi[:, [i]].todense()).ravel()
        cols = np.column_stack([dense_cache[i] for i in selected])
        beta, singular = _refit(cols, y)
        if singular:
            selected.pop()
            beta, _ = _refit(cols[:, :-1], y) if selected else (np.zeros(0), False)
            break
        residual = y - cols @ beta
    return RecoveryResult(_signal_from(selected, beta, M.N), singular)


def one_step_thresholding(M: MeasurementMatrix, y: np.ndarray, k: int,
                          _phi=None) -> RecoveryResult:
    """Keep the k largest |<phi_i, y>| and refit; degenerate refits flagged."""
    if k > M.n:
        raise PreconditionError("k must be <= n")
    phi = normalized_operator(M) if _phi is None else _phi
    corr = np.abs(phi.T @ y)
    order = np.lexsort((np.arange(M.N), -corr))  # stable: value then index
    support = sorted(int(i) for i in order[:k])
    cols = np.column_stack(
        [np.asarray(phi[:, [i]].todense()).ravel() for i in support])
    beta, singular = _refit(cols, y)
    return RecoveryResult(_signal_from(support, beta, M.N), singular)


@dataclass
class ExperimentReport:
    """Seeded sweep statistics; reproducible from the seed."""

    family: str
    params: dict
    n: int
    N: int
    algorithm: str
    k_values: tuple
    trials: int
    sigma: float
    seed: int
    support_recovery_rate: dict
    mean_relative_error: dict
    amplitude_model: str = AMPLITUDE_MODEL

    def to_dict(self) -> dict:
        return {
            "family": self.family, "params": self.params,
            "n": self.n, "N": self.N,
            "algorithm": self.algorithm,
            "k_values": list(self.k_values),
            "trials": self.trials,
            "sigma": self.sigma,
            "seed": self.seed,
            "support_recovery_rate": {str(k): v for k, v in
                                      self.support_recovery_rate.items()},
            "mean_relative_error": {str(k): v for k, v in
                                    self.mean_relative_error.items()},
            "amplitude_model": self.amplitude_model,
        }


def _draw_signal(rng: np.random.Generator, N: int, k: int) -> SparseSignal:
    support = np.sort(rng.choice(N, size=k, replace=False))
    signs = rng.integers(0, 2, size=k) * 2 - 1
    mags = rng.uniform(1.0, 2.0, size=k)
    return SparseSignal(N, tuple(int(i) for i in support),
                        tuple(float(v) for v in signs * mags))


def run_experiment(M: MeasurementMatrix, k_values, trials: int,
                   sigma: float = 0.0, seed: int = 0,
                   algorithm: str = "omp") -> ExperimentReport:
    """Per-k support-recovery rate and mean relative l2 error."""
    if algorithm not in ("omp", "ost"):
        raise PreconditionError(f"unknown algorithm {algorithm!r}")
    if not isinstance(seed, int) or seed < 0:
        raise PreconditionError("seed must be a nonnegative integer")
    solver = omp if algorithm == "omp" else one_step_thresholding
    phi = normalized_operator(M)
    k_values = tuple(int(k) for k in k_values)
    rates, errors = {}, {}
    for k in k_values:
        hits = 0
        rel_errs = []
        for t in range(trials):
            rng = np.random.default_rng([seed, k, t])
            x = _draw_signal(rng, M.N, k)
            y = measure(M, x, sigma=sigma, seed=rng, _phi=phi)
            result = solver(M, y, k, _phi=phi)
            est = result.estimate
            exact_support = est.support == x.support
            if exact_support and sigma == 0.0:
                # amplitudes must match too in the noiseless regime
                exact_support = all(
                    abs(a - b) <= _AMPLITUDE_TOL
                    for a, b in zip(est.values, x.values))
            hits += exact_support
            xd = x.to_dense()
            rel_errs.append(float(np.linalg.norm(est.to_dense() - xd)
                                  / np.linalg.norm(xd)))
        rates[k] = hits / trials if trials else None
        errors[k] = float(np.mean(rel_errs)) if rel_errs else None
    return ExperimentReport(
        family=M.meta.get("family", "unknown"),
        params=M.meta.get("params", {}),
        n=M.n, N=M.N, algorithm=algorithm,
        k_values=k_values, trials=trials, sigma=sigma, seed=seed,
        support_recovery_rate=rates, mean_relative_error=errors)
