"""Exact values for coherence metrics.

Column norms of the constructed matrices are square roots of integers, so a
normalized inner product is in general a Z-linear combination of square roots
of squarefree integers divided by an integer.  ``SurdSum`` represents such
numbers exactly: a map from squarefree radicands to rational coefficients.
Sums with distinct squarefree radicands are equal iff their coefficients
agree, so equality is a dictionary comparison; strict order is decided by
interval arithmetic at escalating precision, which terminates because a
nonzero difference is a nonzero algebraic number.

Values that happen to be rational are returned as ``fractions.Fraction`` so
callers can compare them bit-exactly against closed forms.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath

_SIGN_DPS_LADDER = (40, 80, 160, 320, 640)


def squarefree_decompose(n: int) -> tuple[int, int]:
    """Return (a, b) with n = a**2 * b and b squarefree, for n >= 1."""
    if n <= 0:
        raise ValueError("radicand must be positive")
    a, b = 1, 1
    m = n
    d = 2
    while d * d <= m:
        if m % d == 0:
            e = 0
            while m % d == 0:
                m //= d
                e += 1
            a *= d ** (e // 2)
            if e % 2:
                b *= d
        d += 1 if d == 2 else 2
    b *= m
    return a, b


def _as_terms(value):
    """Coerce int | Fraction | SurdSum to a radicand->coefficient dict."""
    if isinstance(value, SurdSum):
        return dict(value._terms)
    fr = Fraction(value)
    return {1: fr} if fr else {}


def _interval_value(terms, ctx):
    total = ctx.mpf(0)
    for rad, coeff in terms.items():
        t = ctx.mpf(coeff.numerator) / ctx.mpf(coeff.denominator)
        if rad != 1:
            t *= ctx.sqrt(ctx.mpf(rad))
        total += t
    return total


def _terms_sign(terms) -> int:
    """Sign of sum(coeff * sqrt(rad)), exact."""
    if not terms:
        return 0
    signs = {c > 0 for c in terms.values()}
    if signs == {True}:
        return 1
    if signs == {False}:
        return -1
    for dps in _SIGN_DPS_LADDER:
        ctx = mpmath.iv
        old = ctx.dps
        try:
            ctx.dps = dps
            iv = _interval_value(terms, ctx)
            if iv.a > 0:
                return 1
            if iv.b < 0:
                return -1
        finally:
            ctx.dps = old
    raise ArithmeticError(f"could not separate surd sum from zero: {terms}")


class SurdSum:
    """Exact number of the form sum_r c_r * sqrt(r), r squarefree positive."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        canon = {}
        for rad, coeff in (terms or {}).items():
            coeff = Fraction(coeff)
            if not coeff:
                continue
            sq, sf = squarefree_decompose(rad)
            canon[sf] = canon.get(sf, Fraction(0)) + coeff * sq
        self._terms = {r: c for r, c in canon.items() if c}

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_fraction(cls, value) -> "SurdSum":
        return cls({1: Fraction(value)})

    @classmethod
    def ratio_sqrt(cls, num, den_radicand: int) -> "SurdSum":
        """The value num / sqrt(den_radicand), den_radicand a positive int."""
        if den_radicand <= 0:
            raise ValueError("radicand must be positive")
        sq, sf = squarefree_decompose(den_radicand)
        # num / (sq * sqrt(sf)) = num * sqrt(sf) / (sq * sf)
        return cls({sf: Fraction(num) / (sq * sf)})

    # -- queries ----------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return set(self._terms) <= {1}

    def terms(self) -> tuple:
        """Canonical (radicand, coefficient) pairs, radicands ascending."""
        return tuple(sorted(self._terms.items()))

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self!r} is irrational")
        return self._terms.get(1, Fraction(0))

    def squared(self) -> Fraction | "SurdSum":
        """Exact square; a Fraction when the square is rational."""
        sq = {}
        for r1, c1 in self._terms.items():
            for r2, c2 in self._terms.items():
                s = SurdSum({r1 * r2: c1 * c2})
                for r, c in s._terms.items():
                    sq[r] = sq.get(r, Fraction(0)) + c
        out = SurdSum(sq)
        return out.as_fraction() if out.is_rational else out

    # -- arithmetic ---------------------------------------------------------

    def _combine(self, other, sign):
        terms = dict(self._terms)
        for rad, coeff in _as_terms(other).items():
            terms[rad] = terms.get(rad, Fraction(0)) + sign * coeff
        return SurdSum(terms)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self)._combine(other, 1)

    def __neg__(self):
        return SurdSum({r: -c for r, c in self._terms.items()})

    def __abs__(self):
        return -self if _terms_sign(self._terms) < 0 else self

    def __mul__(self, scalar):
        if isinstance(scalar, SurdSum):
            out = {}
            for r1, c1 in self._terms.items():
                for r2, c2 in scalar._terms.items():
                    s = SurdSum({r1 * r2: c1 * c2})
                    for r, c in s._terms.items():
                        out[r] = out.get(r, Fraction(0)) + c
            return SurdSum(out)
        fr = Fraction(scalar)
        return SurdSum({r: c * fr for r, c in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        fr = Fraction(scalar)
        return SurdSum({r: c / fr for r, c in self._terms.items()})

    def times_sqrt(self, m: int) -> "SurdSum":
        """Exact product with sqrt(m), m a positive integer."""
        if m <= 0:
            raise ValueError("radicand must be positive")
        return SurdSum({r * m: c for r, c in self._terms.items()})

    # -- comparisons -------------------------------------------------------

    def _diff_sign(self, other) -> int:
        terms = dict(self._terms)
        for rad, coeff in _as_terms(other).items():
            terms[rad] = terms.get(rad, Fraction(0)) - coeff
        terms = {r: c for r, c in terms.items() if c}
        return _terms_sign(terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, SurdSum)):
            return self._diff_sign(other) == 0
        return NotImplemented

    def __hash__(self):
        if self.is_rational:
            return hash(self.as_fraction())
        return hash(tuple(sorted(self._terms.items())))

    def __lt__(self, other):
        return self._diff_sign(other) < 0

    def __le__(self, other):
        return self._diff_sign(other) <= 0

    def __gt__(self, other):
        return self._diff_sign(other) > 0

    def __ge__(self, other):
        return self._diff_sign(other) >= 0

    def __bool__(self):
        return bool(self._terms)

    # -- rendering -----------------------------------------------------------

    def __float__(self):
        with mpmath.workdps(40):
            v = mpmath.mpf(0)
            for rad, coeff in self._terms.items():
                t = mpmath.mpf(coeff.numerator) / coeff.denominator
                if rad != 1:
                    t *= mpmath.sqrt(rad)
                v += t
            return float(v)

    def decimal(self, digits: int = 12) -> str:
        with mpmath.workdps(digits + 10):
            v = mpmath.mpf(0)
            for rad, coeff in self._terms.items():
                t = mpmath.mpf(coeff.numerator) / coeff.denominator
                if rad != 1:
                    t *= mpmath.sqrt(rad)
                v += t
            return mpmath.nstr(v, digits)

    def __repr__(self):
        if not self._terms:
            return "SurdSum(0)"
        parts = [f"{c}*sqrt({r})" if r != 1 else f"{c}"
                 for r, c in sorted(self._terms.items())]
        return "SurdSum(" + " + ".join(parts) + ")"


def exact_ratio_sqrt(num: int, den_radicand: int) -> Fraction | SurdSum:
    """num / sqrt(den_radicand) as a Fraction when exact, else a SurdSum."""
    s = SurdSum.ratio_sqrt(num, den_radicand)
    return s.as_fraction() if s.is_rational else s


def as_exact(value) -> Fraction | SurdSum:
    if isinstance(value, SurdSum):
        return value.as_fraction() if value.is_rational else value
    return Fraction(value)


def exact_float(value) -> float:
    if isinstance(value, SurdSum):
        return float(value)
    return float(Fraction(value))


def exact_decimal(value, digits: int = 12) -> str:
    if isinstance(value, SurdSum):
        return value.decimal(digits)
    fr = Fraction(value)
    with mpmath.workdps(digits + 10):
        return mpmath.nstr(mpmath.mpf(fr.numerator) / fr.denominator, digits)


def floor_reciprocal(value) -> int:
    """floor(1/value) for a positive exact value, computed exactly."""
    if isinstance(value, Fraction) or not isinstance(value, SurdSum):
        fr = Fraction(value)
        if fr <= 0:
            raise ValueError("value must be positive")
        return fr.denominator // fr.numerator
    if _terms_sign(value._terms) <= 0:
        raise ValueError("value must be positive")
    guess = int(1.0 / float(value))
    # verify floor(1/v) = k, i.e. v <= 1/k and v > 1/(k+1), with exact compares
    k = max(guess - 1, 0)
    while True:
        if k == 0 or value <= Fraction(1, k):
            if value > Fraction(1, k + 1):
                return k
            k += 1
        else:
            k -= 1


def leq_reciprocal_log(value, n: int, scale: int = 160,
                       base: str = "natural") -> bool:
    """Exact truth of value <= 1 / (scale * log_base(n)).

    The right side is transcendental for integer n > 1 while the left side is
    algebraic, so the comparison is decidable by interval refinement.
    """
    if n <= 1:
        raise ValueError("n must be > 1")
    terms = _as_terms(value)
    if not terms:
        return True
    for dps in _SIGN_DPS_LADDER:
        ctx = mpmath.iv
        old = ctx.dps
        try:
            ctx.dps = dps
            lhs = _interval_value(terms, ctx)
            log_n = ctx.log(ctx.mpf(n))
            if base == "base2":
                log_n = log_n / ctx.log(ctx.mpf(2))
            elif base == "base10":
                log_n = log_n / ctx.log(ctx.mpf(10))
            elif base != "natural":
                raise ValueError(f"unknown log base {base!r}")
            rhs = ctx.mpf(1) / (ctx.mpf(scale) * log_n)
            diff = lhs - rhs
            if diff.b < 0:
                return True
            if diff.a > 0:
                return False
        finally:
            ctx.dps = old
    raise ArithmeticError("could not separate value from 1/(scale*log n)")


def exact_leq(a, b) -> bool:
    """a <= b for mixed Fraction / SurdSum operands, exact."""
    ea, eb = as_exact(a), as_exact(b)
    if isinstance(ea, SurdSum):
        return ea <= eb
    if isinstance(eb, SurdSum):
        return eb >= ea
    return ea <= eb
