"""Measurement-matrix families built from finite geometry.

Families:

* devore(field, r): rows (a, b) in F_q x F_q, columns the graph indicators of
  all q^r polynomials of degree <= r-1.
* construction_a_simple_poles / construction_a_single_point: function spaces
  on the projective line with pole bookkeeping rows, giving signed integer
  entries (-1 per simple pole, -deg(f) at a single point of order-t poles).
* plane_curve_matrix(field, r): incidence of P^2(F_q) points with smooth
  degree-r plane curves, one column per scalar class of smooth forms.
* fermat_hyperplane_matrix(field): incidence of the degree-(q+1) Fermat
  surface's rational points in P^3(F_{q^2}) with all hyperplanes.
* evaluation_matrix(design): rows (a, b) in F_q x B, columns the graph
  indicators of every function in a T-dimensional evaluation design;
  projective_space_design / ruled_surface_design / toric_design produce the
  designs.

Index conventions (fixed for reproducibility, used by every family):

* field elements are enumerated by ascending code;
* evaluation rows are point-major: row = point_index * q + value_code;
* column j encodes the coefficient vector by base-q digits of j, digit t
  being the coefficient of basis function t (the first basis function varies
  fastest);
* P^2 / P^3 points are the canonical first-nonzero-coordinate-1
  representatives, enumerated by level and then lexicographically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BasisCapExceeded,
    ColumnCapExceeded,
    DegreeTooLarge,
    EnumerationCapExceeded,
    PointCountMismatch,
    PoleEvalOverlap,
    PolytopeTooLarge,
    PreconditionError,
    RankDeficient,
)
from .fields import FieldElement, FieldSpec, extension_with_embedding
from .matrix import MeasurementMatrix

BASIS_CAP = 24
MATERIALIZE_CAP = 1 << 16
STREAM_CAP = 1 << 24
PLANE_ENUM_CAP = 2_000_000
FERMAT_ORDER_CAP = 25  # cap on Q = q^2

INFINITY = "inf"


def _point_code(field, x):
    if isinstance(x, FieldElement):
        return x.code
    if isinstance(x, str):
        if x == INFINITY:
            return INFINITY
        return int(x)
    code = int(x)
    if not (0 <= code < field.q):
        raise PreconditionError(f"point code {code} outside F_{field.q}")
    return code


def coefficient_digits(q: int, codes, T: int) -> np.ndarray:
    """Base-q digits of column indices: (len, T), digit t = coefficient t."""
    codes = np.atleast_1d(np.asarray(codes, dtype=np.int64))
    out = np.empty((codes.size, T), dtype=np.int64)
    rem = codes.copy()
    for t in range(T):
        out[:, t] = rem % q
        rem //= q
    return out


# ---------------------------------------------------------------------------
# evaluation designs
# ---------------------------------------------------------------------------


class EvaluationDesign:
    """A basis-evaluation table: T basis functions evaluated on points B.

    table[t][b] is the code of f_t(point b).  Invariants checked here: points
    are distinct, rows are linearly independent over F_q (so distinct
    coefficient vectors give distinct columns), and the family's bound on the
    zero count of a nonzero function is < |B|.
    """

    __slots__ = ("field", "points", "basis_names", "table",
                 "bound_on_zeros", "family", "params")

    def __init__(self, field: FieldSpec, points, basis_names, table,
                 bound_on_zeros: int, family: str = "custom", params=None):
        self.field = field
        self.points = tuple(tuple(p) for p in points)
        self.basis_names = tuple(basis_names)
        self.table = np.asarray(table, dtype=np.int64)
        self.bound_on_zeros = int(bound_on_zeros)
        self.family = family
        self.params = dict(params or {})
        self._validate()

    @property
    def T(self) -> int:
        return self.table.shape[0]

    @property
    def size(self) -> int:
        return self.table.shape[1]

    @property
    def num_columns(self) -> int:
        return self.field.q ** self.T

    def _validate(self):
        if self.table.ndim != 2:
            raise PreconditionError("table must be T x |B|")
        if self.table.shape != (len(self.basis_names), len(self.points)):
            raise PreconditionError("table shape disagrees with labels/points")
        if len(set(self.points)) != len(self.points):
            raise PreconditionError("evaluation points repeat")
        if self.T > BASIS_CAP:
            raise BasisCapExceeded(f"T = {self.T} exceeds the basis cap {BASIS_CAP}")
        if not (0 <= self.bound_on_zeros < self.size):
            raise PreconditionError(
                f"bound_on_zeros = {self.bound_on_zeros} must lie in [0, |B|)")
        if _rank_over_field(self.field, self.table) != self.T:
            raise RankDeficient("basis functions are linearly dependent on B")

    def descriptor(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "field": self.field.descriptor,
            "T": self.T,
            "num_points": self.size,
            "bound_on_zeros": self.bound_on_zeros,
            "basis": list(self.basis_names),
        }

    def __repr__(self):
        return (f"EvaluationDesign({self.family}, T={self.T}, "
                f"|B|={self.size}, N={self.num_columns})")


def _rank_over_field(field: FieldSpec, rows) -> int:
    mat = [list(map(int, r)) for r in np.asarray(rows)]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(mat)) if mat[r][c]), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = field.inv(mat[rank][c])
        mat[rank] = [field.mul(inv, x) for x in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][c]:
                f = mat[r][c]
                mat[r] = [field.sub(x, field.mul(f, y))
                          for x, y in zip(mat[r], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank


def evaluate_coefficient_block(design: EvaluationDesign,
                               coeffs: np.ndarray) -> np.ndarray:
    """Value codes of f = sum_t coeffs[:, t] f_t at every point: (k, |B|)."""
    field = design.field
    if field.s == 1:
        return (coeffs.astype(np.int64) @ design.table) % field.p
    vals = np.zeros((coeffs.shape[0], design.size), dtype=np.int64)
    for t in range(design.T):
        prod = field.np_mul(coeffs[:, t][:, None], design.table[t][None, :])
        vals = field.np_add(vals, prod)
    return vals


def evaluation_matrix(design: EvaluationDesign,
                      materialize_cap: int = MATERIALIZE_CAP,
                      chunk: int = 4096) -> MeasurementMatrix:
    """Binary matrix with rows (value, point) and one column per function."""
    q = design.field.q
    N = design.num_columns
    if N > materialize_cap:
        raise ColumnCapExceeded(
            f"q^T = {N} exceeds the materialization cap {materialize_cap}")
    B = design.size
    point_base = np.arange(B, dtype=np.int64) * q
    ones = np.ones(B, dtype=np.int64)
    cols = []
    for j0 in range(0, N, chunk):
        js = np.arange(j0, min(j0 + chunk, N), dtype=np.int64)
        digits = coefficient_digits(q, js, design.T)
        vals = evaluate_coefficient_block(design, digits)
        for row_vals in vals:
            cols.append((point_base + row_vals, ones))
    meta = {"family": design.family, "params": design.params,
            "field": design.field.descriptor, "sign_scheme": {"kind": "all_ones"},
            "column_support": B, "bound_on_zeros": design.bound_on_zeros}
    return MeasurementMatrix(q * B, N, cols, meta=meta, validate=False)


def iter_evaluation_columns(design: EvaluationDesign,
                            stream_cap: int = STREAM_CAP, chunk: int = 4096):
    """Yield (rows, values) per column without materializing the matrix."""
    q = design.field.q
    N = design.num_columns
    if N > stream_cap:
        raise ColumnCapExceeded(f"q^T = {N} exceeds the streaming cap {stream_cap}")
    B = design.size
    point_base = np.arange(B, dtype=np.int64) * q
    ones = np.ones(B, dtype=np.int64)
    for j0 in range(0, N, chunk):
        js = np.arange(j0, min(j0 + chunk, N), dtype=np.int64)
        vals = evaluate_coefficient_block(design, coefficient_digits(q, js, design.T))
        for row_vals in vals:
            yield point_base + row_vals, ones


# ---------------------------------------------------------------------------
# DeVore
# ---------------------------------------------------------------------------


def devore(field: FieldSpec, r: int,
           materialize_cap: int = MATERIALIZE_CAP) -> MeasurementMatrix:
    """q^2 x q^r graph-indicator matrix of polynomials of degree <= r-1.

    Entry 1 at row (a, b) iff f(a) = b; row index = code(a) * q + code(b).
    Each column has exactly q ones.
    """
    q = field.q
    if not (2 <= r <= q):
        raise PreconditionError(f"need 2 <= r <= q, got r={r}, q={q}")
    N = q ** r
    if N > materialize_cap:
        raise ColumnCapExceeded(f"q^r = {N} exceeds the cap {materialize_cap}")
    # powers[i, a] = a^i; distinct evaluation points make the coefficient-to-
    # values map injective for r <= q, so rank deficiency cannot occur here
    codes = np.arange(q, dtype=np.int64)
    powers = np.stack([field.np_pow(codes, i) for i in range(r)])
    point_base = codes * q
    ones = np.ones(q, dtype=np.int64)
    cols = []
    chunk = 4096
    for j0 in range(0, N, chunk):
        js = np.arange(j0, min(j0 + chunk, N), dtype=np.int64)
        digits = coefficient_digits(q, js, r)
        if field.s == 1:
            vals = (digits @ powers) % field.p
        else:
            vals = np.zeros((digits.shape[0], q), dtype=np.int64)
            for t in range(r):
                vals = field.np_add(
                    vals, field.np_mul(digits[:, t][:, None], powers[t][None, :]))
        for row_vals in vals:
            cols.append((point_base + row_vals, ones))
    meta = {"family": "devore", "params": {"r": r},
            "field": field.descriptor, "sign_scheme": {"kind": "all_ones"},
            "column_support": q, "bound_on_zeros": r - 1}
    return MeasurementMatrix(q * q, N, cols, meta=meta, validate=False)


# ---------------------------------------------------------------------------
# Construction A on the projective line
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolePattern:
    """Distinguished pole points and their mode for Construction A."""

    pole_points: tuple
    mode: str                 # "simple_poles" | "single_point_order_t"
    t: int                    # total pole degree

    def validate_against(self, eval_points):
        overlap = set(self.pole_points) & set(eval_points)
        if overlap:
            raise PoleEvalOverlap(f"points {sorted(map(str, overlap))} are "
                                  "both poles and evaluation points")


def construction_a_simple_poles(field: FieldSpec, poles, eval_points,
                                materialize_cap: int = MATERIALIZE_CAP
                                ) -> MeasurementMatrix:
    """Simple poles at t distinct points of P^1; entries +1 at values, -1 at poles.

    Function space basis: 1, then 1/(x - g) per finite pole g, plus x if the
    point at infinity is a pole.  Column norm^2 = |P| + (number of actual
    poles of the function).
    """
    q = field.q
    poles = [_point_code(field, g) for g in poles]
    evals = [_point_code(field, b) for b in eval_points]
    if len(set(poles)) != len(poles) or len(set(evals)) != len(evals):
        raise PoleEvalOverlap("repeated points")
    PolePattern(tuple(poles), "simple_poles", len(poles)).validate_against(evals)
    t = len(poles)
    if t < 1:
        raise PreconditionError("need at least one pole point")
    if not evals:
        raise PreconditionError("need at least one evaluation point")
    if t + 1 > q:
        raise PreconditionError(f"need t + 1 <= q, got t={t}, q={q}")
    T = t + 1
    N = q ** T
    if N > materialize_cap:
        raise ColumnCapExceeded(f"q^(t+1) = {N} exceeds the cap {materialize_cap}")

    # basis value table on evaluation points; basis[0] is the constant 1;
    # the disjointness check above guarantees no basis function is evaluated
    # at its own pole
    basis_rows = [[1] * len(evals)]
    for g in poles:
        if g == INFINITY:
            basis_rows.append(list(evals))  # the function x
        else:
            basis_rows.append([0 if b == INFINITY
                               else field.inv(field.sub(b, g)) for b in evals])

    points = list(poles) + list(evals)
    n = (q + 1) * len(points)
    at_row = q  # index of the @ slot inside each point block
    cols = []
    for j in range(N):
        digits = [(j // q ** i) % q for i in range(T)]
        rows, vals = [], []
        for pos, g in enumerate(poles):
            if digits[1 + pos]:
                rows.append(pos * (q + 1) + at_row)
                vals.append(-1)
        for pos, b in enumerate(evals):
            acc = digits[0]
            for i in range(1, T):
                if digits[i]:
                    acc = field.add(acc, field.mul(digits[i], basis_rows[i][pos]))
            rows.append((t + pos) * (q + 1) + acc)
            vals.append(1)
        cols.append((np.array(rows), np.array(vals)))
    meta = {"family": "consta-poles",
            "params": {"poles": [str(g) for g in poles],
                       "points": [str(b) for b in evals]},
            "field": field.descriptor, "sign_scheme": {"kind": "all_ones"},
            "column_support": None,
            "coherence_bound": [2 * t, t + len(evals)]}
    return MeasurementMatrix(n, N, cols, meta=meta)


def construction_a_single_point(field: FieldSpec, t: int, eval_points,
                                materialize_cap: int = MATERIALIZE_CAP
                                ) -> MeasurementMatrix:
    """Order-<=t poles at infinity only: L(G) = polynomials of degree <= t.

    Entry -deg(f) in the (@, infinity) slot for nonconstant f; +1 at values.
    Column norm^2 = |P| + deg(f)^2.
    """
    q = field.q
    if not (1 <= t < q):
        raise PreconditionError(f"need 1 <= t < q, got t={t}, q={q}")
    evals = [_point_code(field, b) for b in eval_points]
    if len(set(evals)) != len(evals):
        raise PoleEvalOverlap("repeated evaluation points")
    if INFINITY in evals:
        raise PoleEvalOverlap("infinity is the pole point")
    PolePattern((INFINITY,), "single_point_order_t", t).validate_against(evals)
    if not evals:
        raise PreconditionError("need at least one evaluation point")
    T = t + 1
    N = q ** T
    if N > materialize_cap:
        raise ColumnCapExceeded(f"q^(t+1) = {N} exceeds the cap {materialize_cap}")
    n = (q + 1) * (1 + len(evals))
    at_row = q
    cols = []
    for j in range(N):
        digits = [(j // q ** i) % q for i in range(T)]
        deg = max((i for i in range(T) if digits[i]), default=0)
        rows, vals = [], []
        if deg >= 1:
            rows.append(at_row)
            vals.append(-deg)
        for pos, b in enumerate(evals):
            acc = 0
            for i in reversed(range(T)):
                acc = field.add(field.mul(acc, b), digits[i])
            rows.append((1 + pos) * (q + 1) + acc)
            vals.append(1)
        cols.append((np.array(rows), np.array(vals)))
    meta = {"family": "consta-point",
            "params": {"t": t, "points": [str(b) for b in evals]},
            "field": field.descriptor, "sign_scheme": {"kind": "all_ones"},
            "column_support": None,
            "coherence_bound": [t + t * t, len(evals) + t * t]}
    return MeasurementMatrix(n, N, cols, meta=meta)


# ---------------------------------------------------------------------------
# plane curves (Construction B at r = 2, 3)
# ---------------------------------------------------------------------------


def _p2_points(field: FieldSpec):
    q = field.q
    pts = [(1, a, b) for a in range(q) for b in range(q)]
    pts += [(0, 1, b) for b in range(q)]
    pts.append((0, 0, 1))
    return pts


def _plane_monomials(r: int):
    return [(i, j, r - i - j)
            for i in range(r, -1, -1) for j in range(r - i, -1, -1)]


def _monomial_name(exps, names=("x", "y", "z")):
    parts = []
    for e, nm in zip(exps, names):
        if e == 1:
            parts.append(nm)
        elif e > 1:
            parts.append(f"{nm}^{e}")
    return "*".join(parts) if parts else "1"


def _batched_rank_modp(mats: np.ndarray, p: int) -> np.ndarray:
    """Ranks of a stack of small matrices over F_p; mats is (B, R, C)."""
    B, R, C = mats.shape
    work = (mats % p).astype(np.int32)
    inv = np.array([0] + [pow(i, p - 2, p) for i in range(1, p)], dtype=np.int32)
    pivot = np.zeros(B, dtype=np.int64)
    row_ids = np.arange(R)
    for c in range(C):
        col = work[:, :, c]
        avail = (col != 0) & (row_ids[None, :] >= pivot[:, None])
        has = avail.any(axis=1)
        if not has.any():
            continue
        sel = np.nonzero(has)[0]
        pr = np.argmax(avail[sel], axis=1)
        cur = pivot[sel]
        tmp = work[sel, cur, :].copy()
        work[sel, cur, :] = work[sel, pr, :]
        work[sel, pr, :] = tmp
        f = inv[work[sel, cur, c]]
        work[sel, cur, :] = (work[sel, cur, :] * f[:, None]) % p
        colv = work[sel, :, c].copy()
        colv[np.arange(sel.size), cur] = 0
        work[sel] = (work[sel] - colv[:, :, None] * work[sel, cur, :][:, None, :]) % p
        pivot[sel] += 1
    return pivot


def _nullspace_modp(mat: np.ndarray, p: int):
    """RREF nullspace basis over F_p for one small integer matrix."""
    work = [list(int(x) % p for x in row) for row in mat]
    ncols = len(work[0])
    pivots = []
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(work)) if work[r][c]), None)
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        inv = pow(work[rank][c], p - 2, p)
        work[rank] = [(x * inv) % p for x in work[rank]]
        for r in range(len(work)):
            if r != rank and work[r][c]:
                f = work[r][c]
                work[r] = [(x - f * y) % p for x, y in zip(work[r], work[rank])]
        pivots.append(c)
        rank += 1
        if rank == len(work):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [0] * ncols
        vec[fc] = 1
        for r, pc in enumerate(pivots):
            vec[pc] = (-work[r][fc]) % p
        basis.append(vec)
    return basis


def _mark_span_modq(mask: np.ndarray, basis, q: int):
    """Mark every F_q-combination of the basis vectors in the code mask."""
    if not basis:
        mask[0] = True
        return
    d = len(basis)
    m = len(basis[0])
    lam = coefficient_digits(q, np.arange(q ** d, dtype=np.int64), d)
    vecs = (lam @ np.asarray(basis, dtype=np.int64)) % q
    weights = q ** np.arange(m, dtype=np.int64)
    mask[vecs @ weights] = True


def _mark_singular_prime(field, r, k, mask):
    """Vectorized singular-locus marking for prime base fields."""
    p = field.p
    E, _ = extension_with_embedding(field, k)
    pts = _p2_points(E)
    X = np.array(pts, dtype=np.int64)  # (npts, 3)
    monos = _plane_monomials(r)
    m = len(monos)
    npts = X.shape[0]
    cond = np.zeros((npts, 4, m), dtype=np.int64)
    for t, (i, j, l) in enumerate(monos):
        xi = E.np_pow(X[:, 0], i)
        yj = E.np_pow(X[:, 1], j)
        zl = E.np_pow(X[:, 2], l)
        cond[:, 0, t] = E.np_mul(E.np_mul(xi, yj), zl)
        for axis, (e0, rest) in enumerate(
                [(i, (E.np_pow(X[:, 0], max(i - 1, 0)), yj, zl)),
                 (j, (xi, E.np_pow(X[:, 1], max(j - 1, 0)), zl)),
                 (l, (xi, yj, E.np_pow(X[:, 2], max(l - 1, 0))))]):
            ce = e0 % p
            if ce:
                v = E.np_mul(E.np_mul(rest[0], rest[1]), rest[2])
                cond[:, 1 + axis, t] = E.np_mul(np.int64(ce), v)
    digs = E.np_digits()[cond]                       # (npts, 4, m, k)
    rows = digs.transpose(0, 1, 3, 2).reshape(npts, 4 * k, m)
    ranks = _batched_rank_modp(rows, p)
    for idx in np.nonzero(ranks < m)[0]:
        basis = _nullspace_modp(rows[idx], p)
        _mark_span_modq(mask, basis, p)


def _subfield_coordinate_map(field, ext, emb, k):
    """Return a function giving F_q-coordinates of extension elements.

    Uses the F_q-basis 1, w, ..., w^{k-1} of the extension, where w is the
    class of x in the extension's own polynomial representation.
    """
    p, s = field.p, field.s
    n = s * k
    w = p  # code of the class of x in the extension
    w_pows = [ext.pow(w, j) for j in range(k)]
    cols = []
    for j in range(k):
        for a in range(s):
            e = ext.mul(emb[p ** a], w_pows[j])  # image of x^a times w^j
            cols.append(ext.decode(e))
    A = np.array(cols, dtype=np.int64).T % p  # (n, n): digits are rows
    # invert A mod p
    aug = np.concatenate([A, np.eye(n, dtype=np.int64)], axis=1).tolist()
    rank = 0
    for c in range(n):
        piv = next((r for r in range(rank, n) if aug[r][c] % p), None)
        if piv is None:
            raise AssertionError("subfield basis is degenerate")
        aug[rank], aug[piv] = aug[piv], aug[rank]
        inv = pow(aug[rank][c] % p, p - 2, p)
        aug[rank] = [(x * inv) % p for x in aug[rank]]
        for r2 in range(n):
            if r2 != rank and aug[r2][c] % p:
                f = aug[r2][c] % p
                aug[r2] = [(x - f * y) % p for x, y in zip(aug[r2], aug[rank])]
        rank += 1
    Ainv = np.array([row[n:] for row in aug], dtype=np.int64) % p

    def coords(code):
        digits = np.array(ext.decode(code), dtype=np.int64)
        y = (Ainv @ digits) % p
        return [int(sum(int(y[j * s + a]) * field.p ** a for a in range(s)))
                for j in range(k)]

    return coords


def _mark_singular_generic(field, r, k, mask):
    """Per-point singular-locus marking valid for any base field."""
    q = field.q
    E, emb = extension_with_embedding(field, k)
    coords = (None if k == 1 else _subfield_coordinate_map(field, E, emb, k))
    monos = _plane_monomials(r)
    m = len(monos)
    for pt in _p2_points(E):
        raw = []
        for which in range(4):
            row = []
            for (i, j, l) in monos:
                if which == 0:
                    e = (i, j, l)
                    scale = 1
                elif which == 1:
                    e, scale = (i - 1, j, l), i % field.p
                elif which == 2:
                    e, scale = (i, j - 1, l), j % field.p
                else:
                    e, scale = (i, j, l - 1), l % field.p
                if scale == 0 or min(e) < 0:
                    row.append(0)
                    continue
                v = E.mul(E.mul(E.pow(pt[0], e[0]), E.pow(pt[1], e[1])),
                          E.pow(pt[2], e[2]))
                row.append(E.mul(emb[scale], v))
            raw.append(row)
        if k == 1:
            rows = raw
        else:
            rows = []
            for row in raw:
                comp = [coords(v) for v in row]
                for j in range(k):
                    rows.append([comp[t][j] for t in range(m)])
        basis = _nullspace_over_field(field, rows)
        if basis:
            _mark_span_field(mask, basis, field)


def _nullspace_over_field(field, rows):
    mat = [list(map(int, r)) for r in rows]
    ncols = len(mat[0])
    pivots = []
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(mat)) if mat[r][c]), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = field.inv(mat[rank][c])
        mat[rank] = [field.mul(inv, x) for x in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][c]:
                f = mat[r][c]
                mat[r] = [field.sub(x, field.mul(f, y))
                          for x, y in zip(mat[r], mat[rank])]
        pivots.append(c)
        rank += 1
        if rank == len(mat):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [0] * ncols
        vec[fc] = 1
        for r, pc in enumerate(pivots):
            vec[pc] = field.neg(mat[r][fc])
        basis.append(vec)
    return basis


def _mark_span_field(mask, basis, field):
    q = field.q
    d = len(basis)
    m = len(basis[0])
    combo = np.zeros((1, m), dtype=np.int64)
    for vec in basis:
        vec = np.asarray(vec, dtype=np.int64)
        pieces = []
        for lam in range(q):
            scaled = field.np_mul(np.full(m, lam, dtype=np.int64), vec)
            pieces.append(field.np_add(combo, scaled[None, :]))
        combo = np.concatenate(pieces, axis=0)
    weights = q ** np.arange(m, dtype=np.int64)
    mask[combo @ weights] = True


def plane_singular_mask(field: FieldSpec, r: int, extension_depth: int = 3,
                        enum_cap: int = PLANE_ENUM_CAP,
                        method: str = "auto") -> np.ndarray:
    """Boolean mask over all q^m coefficient tuples: True = singular form.

    A form is singular iff it and its three partials share a projective zero
    over F_{q^k} for some k <= extension_depth; k <= 3 suffices for r <= 3.
    method: "auto" uses the batched scan on prime fields and the pointwise
    scan otherwise; "batched" / "pointwise" force one (the pointwise scan is
    valid for every field and serves as a cross-check).
    """
    if r not in (2, 3):
        raise PreconditionError(f"degree r must be 2 or 3, got {r}")
    if method not in ("auto", "batched", "pointwise"):
        raise PreconditionError(f"unknown method {method!r}")
    m = len(_plane_monomials(r))
    total = field.q ** m
    if total > enum_cap:
        raise EnumerationCapExceeded(
            f"q^{m} = {total} coefficient tuples exceed the cap {enum_cap}")
    if method == "batched" and field.s != 1:
        raise PreconditionError("the batched scan needs a prime base field")
    use_batched = field.s == 1 if method == "auto" else method == "batched"
    mask = np.zeros(total, dtype=bool)
    for k in range(1, extension_depth + 1):
        if use_batched:
            _mark_singular_prime(field, r, k, mask)
        else:
            _mark_singular_generic(field, r, k, mask)
    mask[0] = True  # the zero form is not a curve
    return mask


def _scalar_class_rep_mask(q: int, m: int) -> np.ndarray:
    """True where the first nonzero base-q digit equals 1."""
    total = q ** m
    rem = np.arange(total, dtype=np.int64)
    first = np.zeros(total, dtype=np.int64)
    found = np.zeros(total, dtype=bool)
    for _ in range(m):
        digit = rem % q
        rem //= q
        newly = (~found) & (digit != 0)
        first[newly] = digit[newly]
        found |= newly
    return found & (first == 1)


def conic_symmetric_singular_mask(field: FieldSpec) -> np.ndarray:
    """Classical cross-check for odd p: a conic is singular iff the
    determinant of its symmetric coefficient matrix vanishes."""
    if field.p == 2:
        raise PreconditionError("symmetric-matrix test fails in characteristic 2")
    q = field.q
    digits = coefficient_digits(q, np.arange(q ** 6, dtype=np.int64), 6)
    # monomial order: x^2, xy, xz, y^2, yz, z^2
    a, d, e, b, f, c = (digits[:, t] for t in range(6))
    mul, add, sub = field.np_mul, field.np_add, field.np_sub
    two = np.int64(2 % field.p)
    A2, B2, C2 = mul(two, a), mul(two, b), mul(two, c)
    # det of [[2a, d, e], [d, 2b, f], [e, f, 2c]] by cofactor expansion
    det = mul(A2, sub(mul(B2, C2), mul(f, f)))
    det = add(det, mul(d, sub(mul(f, e), mul(d, C2))))
    det = add(det, mul(e, sub(mul(d, f), mul(B2, e))))
    mask = det == 0
    mask[0] = True
    return mask


@dataclass
class PlaneCurveCensus:
    """Exhaustive smooth-curve counts with the classical lower bound."""

    q: int
    r: int
    tuple_count: int
    class_count: int
    lower_bound: int
    bound_vacuous: bool

    @property
    def meets_bound(self) -> bool:
        return self.bound_vacuous or self.tuple_count >= self.lower_bound


def plane_curve_census(field: FieldSpec, r: int, extension_depth: int = 3,
                       enum_cap: int = PLANE_ENUM_CAP) -> PlaneCurveCensus:
    q = field.q
    mask = plane_singular_mask(field, r, extension_depth, enum_cap)
    tuple_count = int((~mask).sum())
    reps = _scalar_class_rep_mask(q, len(_plane_monomials(r))) & ~mask
    class_count = int(reps.sum())
    if tuple_count != class_count * (q - 1):
        raise AssertionError("scalar classes do not partition smooth tuples")
    if r == 2:
        lower = q ** 5 - q ** 4 - 2 * q ** 3
    elif r == 3:
        lower = q ** 9 - 6 * q ** 8
    else:
        raise PreconditionError("census supports r in {2, 3}")
    return PlaneCurveCensus(q=q, r=r, tuple_count=tuple_count,
                            class_count=class_count, lower_bound=lower,
                            bound_vacuous=lower <= 0)


def plane_curve_matrix(field: FieldSpec, r: int, extension_depth: int = 3,
                       enum_cap: int = PLANE_ENUM_CAP) -> MeasurementMatrix:
    """Incidence of P^2(F_q) points with smooth degree-r curves.

    One column per scalar class of smooth forms (first nonzero coefficient
    normalized to 1, in the documented monomial order); entry 1 iff the
    point lies on the curve.
    """
    q = field.q
    monos = _plane_monomials(r)
    m = len(monos)
    mask = plane_singular_mask(field, r, extension_depth, enum_cap)
    reps = np.nonzero(_scalar_class_rep_mask(q, m) & ~mask)[0]
    pts = _p2_points(field)
    X = np.array(pts, dtype=np.int64)
    V = np.empty((len(pts), m), dtype=np.int64)
    for t, (i, j, l) in enumerate(monos):
        V[:, t] = field.np_mul(
            field.np_mul(field.np_pow(X[:, 0], i), field.np_pow(X[:, 1], j)),
            field.np_pow(X[:, 2], l))
    cols = []
    chunk = 4096
    for j0 in range(0, reps.size, chunk):
        batch = reps[j0:j0 + chunk]
        digits = coefficient_digits(q, batch, m)
        if field.s == 1:
            vals = (digits @ V.T) % field.p
        else:
            vals = np.zeros((digits.shape[0], len(pts)), dtype=np.int64)
            for t in range(m):
                vals = field.np_add(
                    vals, field.np_mul(digits[:, t][:, None], V[:, t][None, :]))
        for row_vals in vals:
            rows = np.nonzero(row_vals == 0)[0]
            cols.append((rows, np.ones(rows.size, dtype=np.int64)))
    meta = {"family": "planecurve", "params": {"r": r},
            "field": field.descriptor, "sign_scheme": {"kind": "all_ones"},
            "column_support": None,
            "tuple_count": int((~mask).sum()),
            "class_count": int(reps.size)}
    return MeasurementMatrix(len(pts), reps.size, cols, meta=meta)


# ---------------------------------------------------------------------------
# Fermat surface hyperplane matrix
# ---------------------------------------------------------------------------


def _p3_points(field: FieldSpec):
    q = field.q
    pts = [(1, a, b, c) for a in range(q) for b in range(q) for c in range(q)]
    pts += [(0, 1, b, c) for b in range(q) for c in range(q)]
    pts += [(0, 0, 1, c) for c in range(q)]
    pts.append((0, 0, 0, 1))
    return pts


def fermat_surface_points(field: FieldSpec):
    """Rational points of sum x_i^(q+1) = 0 in P^3(F_{q^2}), canonical order."""
    if field.s % 2:
        raise PreconditionError("the Fermat surface needs a square field order")
    q = field.p ** (field.s // 2)
    pts = _p3_points(field)
    X = np.array(pts, dtype=np.int64)
    total = np.zeros(X.shape[0], dtype=np.int64)
    for i in range(4):
        total = field.np_add(total, field.np_pow(X[:, i], q + 1))
    on = np.nonzero(total == 0)[0]
    expected = (q ** 3 + 1) * (q ** 2 + 1)
    if on.size != expected:
        raise PointCountMismatch(
            f"enumerated {on.size} surface points, expected {expected}")
    return [pts[i] for i in on]


def fermat_hyperplane_matrix(field: FieldSpec,
                             order_cap: int = FERMAT_ORDER_CAP
                             ) -> MeasurementMatrix:
    """Incidence of Fermat-surface points with all hyperplanes of P^3."""
    if field.s % 2:
        raise PreconditionError("the Fermat surface needs a square field order")
    if field.q > order_cap:
        raise EnumerationCapExceeded(
            f"field order {field.q} exceeds the Fermat cap {order_cap}")
    q = field.p ** (field.s // 2)
    surface = fermat_surface_points(field)
    X = np.array(surface, dtype=np.int64)
    hyperplanes = _p3_points(field)
    cols = []
    for h in hyperplanes:
        dot = np.zeros(X.shape[0], dtype=np.int64)
        for i in range(4):
            if h[i]:
                dot = field.np_add(dot, field.np_mul(np.int64(h[i]), X[:, i]))
        rows = np.nonzero(dot == 0)[0]
        cols.append((rows, np.ones(rows.size, dtype=np.int64)))
    meta = {"family": "fermat", "params": {"q": q},
            "field": field.descriptor, "sign_scheme": {"kind": "all_ones"},
            "column_support": None,
            "surface_points": len(surface)}
    return MeasurementMatrix(len(surface), len(hyperplanes), cols, meta=meta)


# ---------------------------------------------------------------------------
# Construction C designs
# ---------------------------------------------------------------------------


def projective_space_design(field: FieldSpec, n: int, r: int) -> EvaluationDesign:
    """Monomials of total degree <= r on the affine chart F_q^n.

    T = C(n+r, r); bound on zeros is the Segre-Serre-Sorensen count
    r q^{n-1} + q^{n-2} + ... + q + 1.
    """
    q = field.q
    if n < 1:
        raise PreconditionError("dimension must be >= 1")
    if not (1 <= r < q):
        raise PreconditionError(f"need 1 <= r < q, got r={r}, q={q}")
    T = math.comb(n + r, r)
    if T > BASIS_CAP:
        raise BasisCapExceeded(f"T = C({n + r},{r}) = {T} exceeds {BASIS_CAP}")
    points = list(itertools.product(range(q), repeat=n))
    exps = []
    for d in range(r + 1):
        level = [e for e in itertools.product(range(d + 1), repeat=n)
                 if sum(e) == d]
        level.sort(reverse=True)
        exps.extend(level)
    X = np.array(points, dtype=np.int64)
    table = np.empty((T, len(points)), dtype=np.int64)
    for t, e in enumerate(exps):
        acc = np.ones(len(points), dtype=np.int64)
        for i, ei in enumerate(e):
            if ei:
                acc = field.np_mul(acc, field.np_pow(X[:, i], ei))
        table[t] = acc
    bound = r * q ** (n - 1) + sum(q ** i for i in range(n - 1))
    names = [_monomial_name(e, tuple(f"x{i}" for i in range(n))) for e in exps]
    return EvaluationDesign(field, points, names, table, bound,
                            family="projspace", params={"n": n, "r": r})


def ruled_surface_design(field: FieldSpec, d1: int, d2: int) -> EvaluationDesign:
    """Bidegree-(d1, d2) monomials on the affine chart F_q x F_q of P^1 x P^1."""
    q = field.q
    if d1 < 0 or d2 < 0:
        raise PreconditionError("degrees must be nonnegative")
    if d1 + d2 >= q + 1:
        raise DegreeTooLarge(f"need d1 + d2 < q + 1, got {d1}+{d2} vs q={q}")
    T = (d1 + 1) * (d2 + 1)
    if T > BASIS_CAP:
        raise BasisCapExceeded(f"T = {T} exceeds {BASIS_CAP}")
    points = list(itertools.product(range(q), repeat=2))
    X = np.array(points, dtype=np.int64)
    exps = [(i, j) for i in range(d1 + 1) for j in range(d2 + 1)]
    table = np.empty((T, len(points)), dtype=np.int64)
    for t, (i, j) in enumerate(exps):
        table[t] = field.np_mul(field.np_pow(X[:, 0], i), field.np_pow(X[:, 1], j))
    bound = (d1 + d2) * (q + 1) - d1 * d2
    names = [_monomial_name((i, j), ("x", "y")) for i, j in exps]
    return EvaluationDesign(field, points, names, table, bound,
                            family="ruled", params={"d1": d1, "d2": d2})


def _toric_lattice_points(case: int, d: int, e: int | None, r: int | None):
    if case == 1:
        return [(m1, m2) for m1 in range(d + 1) for m2 in range(d - m1 + 1)]
    if case == 2:
        return [(m1, m2) for m1 in range(d + 1) for m2 in range(e + r * m1 + 1)]
    if case == 3:
        return [(m1, m2) for m1 in range(d + 1) for m2 in range(2 * d - 2 * m1 + 1)]
    raise PreconditionError(f"toric case must be 1, 2 or 3, got {case}")


def toric_design(field: FieldSpec, case: int, d: int, e: int | None = None,
                 r: int | None = None) -> EvaluationDesign:
    """Monomial characters on the torus (F_q^*)^2 for the three polytopes.

    Case 1: triangle (0,0),(d,0),(0,d), d < q-1.
    Case 2: quadrilateral (0,0),(d,0),(d,e+rd),(0,e); d, e, e+rd < q-1.
    Case 3: triangle (0,0),(d,0),(0,2d), 2d < q-1.
    Points are (theta^i, theta^j) ordered by (i, j); the basis function for
    lattice point (m1, m2) takes the value theta^(m1 i + m2 j) there.
    """
    q = field.q
    if d < 1:
        raise PreconditionError("d must be >= 1")
    if case == 1 and not d < q - 1:
        raise PreconditionError(f"case 1 needs d < q - 1, got d={d}, q={q}")
    if case == 2:
        if e is None or r is None:
            raise PreconditionError("case 2 needs d, e and r")
        if not (e >= 1 and r >= 1 and d < q - 1 and e < q - 1 and e + r * d < q - 1):
            raise PreconditionError("case 2 needs d, e, e + r*d all < q - 1")
    if case == 3 and not 2 * d < q - 1:
        raise PreconditionError(f"case 3 needs 2d < q - 1, got d={d}, q={q}")
    lattice = _toric_lattice_points(case, d, e, r)
    T = len(lattice)
    if T > BASIS_CAP:
        raise PolytopeTooLarge(f"{T} lattice points exceed the basis cap {BASIS_CAP}")
    # dimension formulas for the three polytopes
    if case == 1:
        expected_T = (d + 1) * (d + 2) // 2
        bound = d * (q - 1)
    elif case == 2:
        expected_T = (d + 1) * (e + 1) + r * d * (d + 1) // 2
        bound = min((d + e) * (q - 1) - d * e, (e + r * d) * (q - 1))
    else:
        expected_T = d * d + 2 * d + 1
        bound = 2 * d * (q - 1)
    if T != expected_T:
        raise AssertionError("lattice point count disagrees with the closed form")
    theta_pows = np.empty(q - 1, dtype=np.int64)
    acc = 1
    for i in range(q - 1):
        theta_pows[i] = acc
        acc = field.mul(acc, field.theta)
    exps = list(itertools.product(range(q - 1), repeat=2))  # (i, j) lex
    points = [(int(theta_pows[i]), int(theta_pows[j])) for i, j in exps]
    E = np.array(exps, dtype=np.int64)
    table = np.empty((T, len(points)), dtype=np.int64)
    for t, (m1, m2) in enumerate(lattice):
        table[t] = theta_pows[(m1 * E[:, 0] + m2 * E[:, 1]) % (q - 1)]
    names = [f"e({m1},{m2})" for m1, m2 in lattice]
    params = {"case": case, "d": d}
    if case == 2:
        params.update({"e": e, "r": r})
    return EvaluationDesign(field, points, names, table, bound,
                            family="toric", params=params)


# dispatcher used by the CLI and by sign-scheme reconstruction
def build_design(family: str, field: FieldSpec, params: dict) -> EvaluationDesign:
    if family == "projspace":
        return projective_space_design(field, int(params["n"]), int(params["r"]))
    if family == "ruled":
        return ruled_surface_design(field, int(params["d1"]), int(params["d2"]))
    if family == "toric":
        e = params.get("e")
        r = params.get("r")
        return toric_design(field, int(params["case"]), int(params["d"]),
                            None if e is None else int(e),
                            None if r is None else int(r))
    if family == "devore":
        return projective_space_design(field, 1, int(params["r"]) - 1)
    raise PreconditionError(f"no evaluation design for family {family!r}")
