"""Measurement-matrix data model and exact coherence metrics.

A MeasurementMatrix stores sparse signed-integer columns.  All metrics are
computed in exact integer/rational arithmetic; floating point appears only in
candidate screening (verified exactly afterwards) and in decimal renderings.

Coherence of a pair is |<phi_i, phi_j>| / sqrt(c_i * c_j) with integer inner
products and integer squared norms, so every value is either a Fraction or a
single-radicand SurdSum; average coherence over columns with mixed norms is a
general SurdSum.

The pairwise scan is capped (default 20000 columns).  Above the cap the exact
coherence must come from the function-space difference trick in
``agrip.verification``; the scan refuses to run rather than blow up at O(N^2).

On-disk format AGRIP-SPARSE, bit-exact:
    line 1: "AGRIP-SPARSE 1 <n> <N> <nnz>"
    then one line per nonzero: "<col> <row> <value>", sorted by (col, row),
    0-based indices, decimal integers, "\\n" line endings.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateShape,
    FormatError,
    PairScanCapExceeded,
    PreconditionError,
    SingleColumn,
    ZeroCoherence,
)
from .exact import (
    SurdSum,
    as_exact,
    exact_decimal,
    exact_ratio_sqrt,
    floor_reciprocal,
    leq_reciprocal_log,
)

DEFAULT_PAIR_CAP = 20_000
_BLOCK = 1024
FORMAT_NAME = "AGRIP-SPARSE"
FORMAT_VERSION = 1


def worker_count() -> int:
    """Worker cap from AGRIP_THREADS, defaulting to the CPU count."""
    env = os.environ.get("AGRIP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise PreconditionError(f"AGRIP_THREADS={env!r} is not an integer")
    return os.cpu_count() or 1


class MeasurementMatrix:
    """Sparse signed-integer column matrix with provenance metadata.

    Immutable after construction.  Columns are (row_indices, values) pairs
    with strictly increasing row indices and nonzero integer values.
    """

    __slots__ = ("n", "N", "_cols", "meta", "_csc", "_sqnorms")

    def __init__(self, n: int, N: int, columns, meta=None, validate: bool = True):
        self.n = int(n)
        self.N = int(N)
        cols = []
        for rows, vals in columns:
            r = np.asarray(rows, dtype=np.int64)
            v = np.asarray(vals, dtype=np.int64)
            cols.append((r, v))
        self._cols = cols
        self.meta = dict(meta or {})
        self._csc = None
        self._sqnorms = None
        if validate:
            self._validate()

    def _validate(self):
        if self.N < 1 or self.n < 1:
            raise PreconditionError("matrix must have at least one row and column")
        if len(self._cols) != self.N:
            raise PreconditionError(f"expected {self.N} columns, got {len(self._cols)}")
        for j, (rows, vals) in enumerate(self._cols):
            if rows.shape != vals.shape or rows.ndim != 1:
                raise PreconditionError(f"column {j}: malformed arrays")
            if rows.size == 0:
                raise PreconditionError(f"column {j} is zero")
            if np.any(vals == 0):
                raise PreconditionError(f"column {j} stores a zero entry")
            if np.any(rows[:-1] >= rows[1:]):
                raise PreconditionError(f"column {j}: row indices not strictly increasing")
            if rows[0] < 0 or rows[-1] >= self.n:
                raise PreconditionError(f"column {j}: row index out of range")

    # -- views ------------------------------------------------------------

    def column(self, j: int):
        """(rows, values) arrays of column j.  Do not mutate."""
        return self._cols[j]

    @property
    def nnz(self) -> int:
        return sum(r.size for r, _ in self._cols)

    def sqnorms(self) -> np.ndarray:
        if self._sqnorms is None:
            self._sqnorms = np.array(
                [int((v.astype(np.int64) ** 2).sum()) for _, v in self._cols],
                dtype=np.int64)
        return self._sqnorms

    def is_binary(self) -> bool:
        return all(np.all(v == 1) for _, v in self._cols)

    def constant_support(self):
        """Common nonzero count per column, or None if it varies."""
        sizes = {r.size for r, _ in self._cols}
        return sizes.pop() if len(sizes) == 1 else None

    def to_csc(self) -> sp.csc_matrix:
        if self._csc is None:
            indptr = np.zeros(self.N + 1, dtype=np.int64)
            for j, (r, _) in enumerate(self._cols):
                indptr[j + 1] = indptr[j] + r.size
            indices = np.concatenate([r for r, _ in self._cols])
            data = np.concatenate([v for _, v in self._cols])
            self._csc = sp.csc_matrix((data, indices, indptr),
                                      shape=(self.n, self.N))
        return self._csc

    def to_dense(self) -> np.ndarray:
        return np.asarray(self.to_csc().todense())

    def __eq__(self, other):
        if not isinstance(other, MeasurementMatrix):
            return NotImplemented
        if (self.n, self.N) != (other.n, other.N):
            return False
        return all(np.array_equal(r1, r2) and np.array_equal(v1, v2)
                   for (r1, v1), (r2, v2) in zip(self._cols, other._cols))

    def __repr__(self):
        fam = self.meta.get("family", "?")
        return f"MeasurementMatrix({self.n}x{self.N}, nnz={self.nnz}, family={fam})"


# -- exact Gram machinery ---------------------------------------------------


def _gram_block(A: sp.csc_matrix, j0: int, j1: int) -> np.ndarray:
    """Exact int64 Gram block A[:, j0:j1].T @ A."""
    G = (A[:, j0:j1].T @ A).toarray()
    return G.astype(np.int64, copy=False)


def _iter_blocks(N: int, block: int):
    for j0 in range(0, N, block):
        yield j0, min(j0 + block, N)


def _map_blocks(fn, N, block):
    blocks = list(_iter_blocks(N, block))
    workers = min(worker_count(), len(blocks))
    if workers <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, blocks))


def coherence(M: MeasurementMatrix, pair_cap: int = DEFAULT_PAIR_CAP,
              block: int = _BLOCK):
    """Exact coherence max_{i<j} |<phi_i,phi_j>| / (||phi_i|| ||phi_j||).

    Returns a Fraction when the value is rational (always the case when all
    columns share a squared norm), else a single-radicand SurdSum.
    """
    if M.N < 2:
        raise SingleColumn("coherence needs at least two columns")
    if M.N > pair_cap:
        raise PairScanCapExceeded(
            f"{M.N} columns exceed the pairwise cap {pair_cap}; use the "
            "difference-trick path or raise the cap explicitly")
    A = M.to_csc()
    c = M.sqnorms()

    if np.unique(c).size == 1:
        cc = int(c[0])

        def scan_const(bounds):
            j0, j1 = bounds
            G = _gram_block(A, j0, j1)
            np.abs(G, out=G)
            G[np.arange(j1 - j0), np.arange(j0, j1)] = -1
            return int(G.max())

        best_ip = max(_map_blocks(scan_const, M.N, block))
        if best_ip <= 0:
            return Fraction(0)
        return Fraction(best_ip, cc)

    cf = c.astype(np.float64)

    def scan(bounds):
        j0, j1 = bounds
        G = _gram_block(A, j0, j1)
        num2 = G.astype(np.float64) ** 2
        den = cf[j0:j1, None] * cf[None, :]
        ratio = num2 / den
        ratio[np.arange(j1 - j0), np.arange(j0, j1)] = -1.0  # mask the diagonal
        bm = ratio.max()
        if bm <= 0:
            return []
        rows, cols = np.nonzero(ratio >= bm * (1 - 1e-9))
        triples = np.stack([np.abs(G[rows, cols]),
                            c[j0 + rows], c[cols]], axis=1)
        return [tuple(int(x) for x in t) for t in np.unique(triples, axis=0)]

    best = None  # (ip, ci, cj); ratios compared by integer cross-multiplication
    for cands in _map_blocks(scan, M.N, block):
        for ip, ci, cj in cands:
            if best is None or ip * ip * best[1] * best[2] > best[0] ** 2 * ci * cj:
                best = (ip, ci, cj)
    if best is None or best[0] == 0:
        return Fraction(0)
    return exact_ratio_sqrt(best[0], best[1] * best[2])


def average_coherence(M: MeasurementMatrix, mode: str = "absolute",
                      pair_cap: int = DEFAULT_PAIR_CAP, block: int = _BLOCK):
    """Exact average coherence.

    absolute: (1/(N-1)) max_i sum_{j != i} |<phi_i,phi_j>| / (||phi_i|| ||phi_j||)
    signed:   (1/(N-1)) max_i |sum_{j != i} <phi_i,phi_j>  / (||phi_i|| ||phi_j||)|

    The display definition puts the absolute value inside the sum; cancellation
    arguments need it outside.  Both are provided and tagged in reports.
    """
    if mode not in ("absolute", "signed"):
        raise PreconditionError(f"unknown average-coherence mode {mode!r}")
    if M.N < 2:
        raise SingleColumn("average coherence needs at least two columns")
    if M.N > pair_cap:
        raise PairScanCapExceeded(
            f"{M.N} columns exceed the pairwise cap {pair_cap}")
    A = M.to_csc()
    c = M.sqnorms()
    values = np.unique(c)
    groups = [np.nonzero(c == v)[0] for v in values]

    def scan(bounds):
        j0, j1 = bounds
        G = _gram_block(A, j0, j1)
        body = np.abs(G) if mode == "absolute" else G
        S = np.empty((j1 - j0, len(values)), dtype=np.int64)
        for gi, cols in enumerate(groups):
            S[:, gi] = body[:, cols].sum(axis=1)
        # remove the diagonal term from its own norm group
        for r in range(j1 - j0):
            i = j0 + r
            gi = int(np.searchsorted(values, c[i]))
            S[r, gi] -= int(c[i])  # |G_ii| = G_ii = c_i
        return S

    S = np.vstack(_map_blocks(scan, M.N, block))

    if len(values) == 1:
        cc = int(values[0])
        scores = np.abs(S[:, 0]) if mode == "signed" else S[:, 0]
        return Fraction(int(scores.max()), cc * (M.N - 1))

    # mixed norms: score_i = sum_v S[i,v] / sqrt(v * c_i); select candidates
    # by float, then compare the few finalists exactly
    inv_sqrt = 1.0 / np.sqrt(values.astype(np.float64))
    approx = (S.astype(np.float64) * inv_sqrt[None, :]).sum(axis=1)
    approx /= np.sqrt(c.astype(np.float64))
    if mode == "signed":
        approx = np.abs(approx)
    bm = approx.max()
    cand = np.nonzero(approx >= bm - max(abs(bm), 1.0) * 1e-9)[0]

    def exact_score(i):
        total = SurdSum()
        for gi, v in enumerate(values):
            total = total + SurdSum.ratio_sqrt(int(S[i, gi]), int(v) * int(c[i]))
        return abs(total) if mode == "signed" else total

    best = None
    for i in cand:
        sc = exact_score(int(i))
        if best is None or sc > best:
            best = sc
    return as_exact(best / (M.N - 1))


def welch_bound(n: int, N: int) -> float:
    """sqrt(N / (n (N - n))), the universal coherence lower bound."""
    if N <= n:
        raise DegenerateShape(f"Welch bound needs N > n, got n={n}, N={N}")
    if n < 1:
        raise DegenerateShape("n must be >= 1")
    return float(np.sqrt(N / (n * (N - n))))


def welch_bound_squared(n: int, N: int) -> Fraction:
    """Exact square of the Welch bound, for bit-exact comparisons."""
    if N <= n:
        raise DegenerateShape(f"Welch bound needs N > n, got n={n}, N={N}")
    return Fraction(N, n * (N - n))


def sparsity_order_bound(mu, n: int | None = None) -> int:
    """floor(1/mu) + 1 with exact rational/surd floor.

    mu == 0 means orthonormal columns and a vacuous bound; the convention is
    k = n, so n must be supplied in that case (else ZeroCoherence is raised).
    """
    exact = as_exact(mu)
    if not exact:
        if n is None:
            raise ZeroCoherence("orthonormal columns: bound vacuous, pass n")
        return n
    return floor_reciprocal(exact) + 1


@dataclass
class StrongCoherenceVerdict:
    """Outcome of the two strong-coherence inequalities."""

    cond1: bool          # mu <= 1 / (160 log N)
    cond2: bool          # omega <= mu / sqrt(n)
    log_base: str
    omega_mode: str

    @property
    def satisfied(self) -> bool:
        return self.cond1 and self.cond2

    def to_dict(self):
        return {"cond1": self.cond1, "cond2": self.cond2,
                "log_base": self.log_base, "omega_mode": self.omega_mode}


def strong_coherence_check(M: MeasurementMatrix, log_base: str = "natural",
                           omega_mode: str = "signed",
                           pair_cap: int = DEFAULT_PAIR_CAP,
                           _mu=None, _omega=None) -> StrongCoherenceVerdict:
    """Evaluate mu <= 1/(160 log N) and omega <= mu/sqrt(n), both exact."""
    if M.N < 2:
        raise SingleColumn("strong coherence check needs at least two columns")
    mu = coherence(M, pair_cap=pair_cap) if _mu is None else _mu
    omega = (average_coherence(M, mode=omega_mode, pair_cap=pair_cap)
             if _omega is None else _omega)
    cond1 = leq_reciprocal_log(mu, M.N, 160, log_base)
    mu_surd = mu if isinstance(mu, SurdSum) else SurdSum.from_fraction(mu)
    rhs = mu_surd.times_sqrt(M.n) / M.n  # mu / sqrt(n)
    omega_surd = omega if isinstance(omega, SurdSum) else SurdSum.from_fraction(omega)
    cond2 = omega_surd <= rhs
    return StrongCoherenceVerdict(cond1, cond2, log_base, omega_mode)


# -- reports ------------------------------------------------------------------


def _exact_json(value) -> dict:
    exact = as_exact(value)
    out = {"num": None, "den": None, "decimal": exact_decimal(exact)}
    if isinstance(exact, Fraction):
        out["num"] = exact.numerator
        out["den"] = exact.denominator
        return out
    sq = exact.squared()
    if isinstance(sq, Fraction):
        # single-radicand value: the square is an exact fraction
        out["squared"] = {"num": sq.numerator, "den": sq.denominator}
    out["surd_terms"] = [
        {"radicand": int(r), "num": c.numerator, "den": c.denominator}
        for r, c in exact.terms()]
    return out


@dataclass
class CoherenceReport:
    """Exact mu, both omegas, Welch bound, sparsity bound, strong-coherence verdict."""

    family: str
    params: dict
    n: int
    N: int
    mu: object
    omega_signed: object
    omega_absolute: object
    welch: float | None
    sparsity_bound: int
    orthonormal: bool
    strong_coherence: StrongCoherenceVerdict
    extras: dict = dataclass_field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "family": self.family,
            "params": self.params,
            "n": self.n,
            "N": self.N,
            "mu": _exact_json(self.mu),
            "omega_signed": _exact_json(self.omega_signed),
            "omega_absolute": _exact_json(self.omega_absolute),
            "welch": self.welch,
            "sparsity_bound": self.sparsity_bound,
            "orthonormal": self.orthonormal,
            "strong_coherence": self.strong_coherence.to_dict(),
        }
        out.update(self.extras)
        return out


def coherence_report(M: MeasurementMatrix, log_base: str = "natural",
                     omega_mode: str = "signed",
                     pair_cap: int = DEFAULT_PAIR_CAP) -> CoherenceReport:
    mu = coherence(M, pair_cap=pair_cap)
    omega_signed = average_coherence(M, "signed", pair_cap=pair_cap)
    omega_absolute = average_coherence(M, "absolute", pair_cap=pair_cap)
    welch = welch_bound(M.n, M.N) if M.N > M.n else None
    orthonormal = not as_exact(mu)
    k = sparsity_order_bound(mu, n=M.n)
    omega_for_verdict = omega_signed if omega_mode == "signed" else omega_absolute
    verdict = strong_coherence_check(M, log_base, omega_mode,
                                     pair_cap=pair_cap,
                                     _mu=mu, _omega=omega_for_verdict)
    return CoherenceReport(
        family=M.meta.get("family", "unknown"),
        params=M.meta.get("params", {}),
        n=M.n, N=M.N,
        mu=mu, omega_signed=omega_signed, omega_absolute=omega_absolute,
        welch=welch, sparsity_bound=k, orthonormal=orthonormal,
        strong_coherence=verdict)


# -- AGRIP-SPARSE io -----------------------------------------------------------


def write_sparse(M: MeasurementMatrix, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{FORMAT_NAME} {FORMAT_VERSION} {M.n} {M.N} {M.nnz}\n")
        for j in range(M.N):
            rows, vals = M.column(j)
            for r, v in zip(rows.tolist(), vals.tolist()):
                fh.write(f"{j} {r} {v}\n")


def read_sparse(path, meta=None) -> MeasurementMatrix:
    with open(path, "r", newline="") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 5 or parts[0] != FORMAT_NAME:
            raise FormatError(f"bad header {header!r}", line=1)
        try:
            version, n, N, nnz = (int(x) for x in parts[1:])
        except ValueError:
            raise FormatError(f"non-integer header fields in {header!r}", line=1)
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {version}", line=1)
        cols: list[tuple[list, list]] = [([], []) for _ in range(N)]
        last = (-1, -1)
        count = 0
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                raise FormatError("blank line inside data", line=lineno)
            try:
                col_s, row_s, val_s = line.split()
                col, row, val = int(col_s), int(row_s), int(val_s)
            except ValueError:
                raise FormatError(f"malformed entry {line.rstrip()!r}", line=lineno)
            if not (0 <= col < N):
                raise FormatError(f"column index {col} out of range", line=lineno)
            if not (0 <= row < n):
                raise FormatError(f"row index {row} out of range", line=lineno)
            if val == 0:
                raise FormatError("explicit zero entry", line=lineno)
            if (col, row) <= last:
                raise FormatError("entries not sorted by (col, row)", line=lineno)
            last = (col, row)
            cols[col][0].append(row)
            cols[col][1].append(val)
            count += 1
        if count != nnz:
            raise FormatError(f"header promises {nnz} entries, found {count}",
                              line=count + 1)
        for j, (rows, _) in enumerate(cols):
            if not rows:
                raise FormatError(f"column {j} has no entries", line=count + 1)
    return MeasurementMatrix(n, N, cols, meta=meta)
