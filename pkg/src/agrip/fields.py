"""Exact arithmetic in prime fields F_p and extension fields F_{p^s}.

Elements are stored fully reduced in polynomial representation: a length-s
vector of residues mod p (coefficients of 1, x, ..., x^{s-1}), encoded as the
integer code sum(c_i * p**i).  The enumeration order of a field is ascending
code, so F_p is enumerated 0, 1, ..., p-1 and extension fields run through
coefficient vectors lexicographically from the constant coefficient up.

Reproducibility conventions:

* default modulus: the first monic irreducible of degree s in ascending code
  order of its lower coefficients;
* theta: the first element of multiplicative order p**s - 1 in enumeration
  order;
* equality of elements is coefficient-vector equality (plus matching field
  parameters), and hashing follows suit.

Field orders are capped at 2**20 by policy.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import (
    CompositeCharacteristic,
    DivisionByZero,
    FieldTooLarge,
    PreconditionError,
    ReducibleModulus,
)

FIELD_ORDER_CAP = 1 << 20
_LOG_TABLE_CAP = 1 << 16
_NP_TABLE_CAP = 1 << 10


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _distinct_prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


# -- polynomial arithmetic over F_p (ascending coefficient tuples) -------

def _poly_trim(a):
    i = len(a)
    while i > 0 and a[i - 1] == 0:
        i -= 1
    return a[:i]


def _poly_mulmod(a, b, modulus, p):
    if not a or not b:
        return ()
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    s = len(modulus) - 1
    for i in range(len(prod) - 1, s - 1, -1):
        c = prod[i]
        if c:
            prod[i] = 0
            for j in range(s):
                prod[i - s + j] = (prod[i - s + j] - c * modulus[j]) % p
    return _poly_trim(tuple(prod[:s]))


def _poly_powmod(base, e, modulus, p):
    result = (1,)
    acc = _poly_trim(tuple(base))
    while e:
        if e & 1:
            result = _poly_mulmod(result, acc, modulus, p)
        acc = _poly_mulmod(acc, acc, modulus, p)
        e >>= 1
    return result


def _poly_gcd(a, b, p):
    a, b = _poly_trim(tuple(a)), _poly_trim(tuple(b))
    while b:
        inv = pow(b[-1], p - 2, p)
        monic = tuple((c * inv) % p for c in b)
        rem = list(a)
        while len(rem) >= len(monic) and _poly_trim(tuple(rem)):
            rem = list(_poly_trim(tuple(rem)))
            if len(rem) < len(monic):
                break
            c = rem[-1]
            shift = len(rem) - len(monic)
            for j, mj in enumerate(monic):
                rem[shift + j] = (rem[shift + j] - c * mj) % p
            rem = list(_poly_trim(tuple(rem)))
        a, b = monic, _poly_trim(tuple(rem))
    return a


def _is_irreducible(modulus, p) -> bool:
    """Monic modulus (ascending coefficients, length s+1) irreducible over F_p."""
    s = len(modulus) - 1
    if s == 1:
        return True
    x = (0, 1)
    if _poly_powmod(x, p ** s, modulus, p) != x:
        return False
    for ell in _distinct_prime_factors(s):
        xp = _poly_powmod(x, p ** (s // ell), modulus, p)
        diff = list(xp) + [0] * max(0, 2 - len(xp))
        diff[1] = (diff[1] - 1) % p
        g = _poly_gcd(tuple(diff), modulus, p)
        if len(g) > 1:
            return False
    return True


class FieldElement:
    """An element of a FieldSpec, stored as its integer code."""

    __slots__ = ("field", "code")

    def __init__(self, field: "FieldSpec", code: int):
        self.field = field
        self.code = code

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.field.decode(self.code)

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise PreconditionError("elements of different fields")
            return other.code
        if isinstance(other, int):
            return self.field.element_from_subfield(other)
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.field.add(self.code, c))

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.field.sub(self.code, c))

    def __rsub__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.field.sub(c, self.code))

    def __mul__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.field.mul(self.code, c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.field.mul(self.code, self.field.inv(c)))

    def __neg__(self):
        return FieldElement(self.field, self.field.neg(self.code))

    def __pow__(self, e: int):
        return FieldElement(self.field, self.field.pow(self.code, e))

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.code))

    def trace(self) -> int:
        return self.field.trace(self.code)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return (self.field == other.field) and self.code == other.code
        if isinstance(other, int):
            # integers compare through the prime-subfield embedding
            return self.code == other % self.field.p
        return NotImplemented

    def __hash__(self):
        return hash((self.field.p, self.field.s, self.field.modulus, self.code))

    def __bool__(self):
        return self.code != 0

    def __repr__(self):
        if self.field.s == 1:
            return f"F{self.field.p}({self.code})"
        return f"F{self.field.q}{self.coeffs}"


class FieldSpec:
    """Immutable description of F_{p^s} with its arithmetic tables.

    Build through make_field(); instances are safe to share across threads.
    """

    __slots__ = ("p", "s", "q", "modulus", "theta",
                 "_exp", "_log", "_np_exp", "_np_log", "_np_digits")

    def __init__(self, p: int, s: int, modulus: tuple[int, ...]):
        self.p = p
        self.s = s
        self.q = p ** s
        self.modulus = modulus
        self._exp = None
        self._log = None
        self._np_exp = None
        self._np_log = None
        self._np_digits = None
        self.theta = self._find_theta()
        if s > 1 and self.q <= _LOG_TABLE_CAP:
            self._rebuild_tables_from_theta()

    # -- construction helpers ------------------------------------------

    def _find_theta(self) -> int:
        factors = _distinct_prime_factors(self.q - 1) if self.q > 2 else []
        for code in range(1, self.q):
            if all(self._pow_raw(code, (self.q - 1) // ell) != 1
                   for ell in factors):
                return code
        raise AssertionError("no primitive element found")

    def _rebuild_tables_from_theta(self):
        exp = [0] * (self.q - 1)
        log = [-1] * self.q
        acc = 1
        for i in range(self.q - 1):
            exp[i] = acc
            log[acc] = i
            acc = self._mul_raw(acc, self.theta)
        if acc != 1:
            raise AssertionError("theta order mismatch")
        self._exp = exp
        self._log = log

    # -- codes ------------------------------------------------------------

    def decode(self, code: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.s):
            out.append(code % self.p)
            code //= self.p
        return tuple(out)

    def encode(self, coeffs) -> int:
        if len(coeffs) > self.s:
            raise PreconditionError("coefficient vector too long")
        code = 0
        for c in reversed(list(coeffs)):
            code = code * self.p + (c % self.p)
        return code

    def element(self, code_or_coeffs) -> FieldElement:
        if isinstance(code_or_coeffs, (tuple, list)):
            code = self.encode(code_or_coeffs)
        else:
            code = int(code_or_coeffs)
            if not (0 <= code < self.q):
                raise PreconditionError(f"code {code} out of range for F_{self.q}")
        return FieldElement(self, code)

    def element_from_subfield(self, residue: int) -> int:
        """Code of an integer residue embedded through the prime subfield."""
        return residue % self.p

    @property
    def zero(self) -> FieldElement:
        return FieldElement(self, 0)

    @property
    def one(self) -> FieldElement:
        return FieldElement(self, 1)

    @property
    def theta_element(self) -> FieldElement:
        return FieldElement(self, self.theta)

    def elements(self):
        for code in range(self.q):
            yield FieldElement(self, code)

    # -- raw arithmetic on codes ---------------------------------------

    def add(self, a: int, b: int) -> int:
        if self.s == 1:
            return (a + b) % self.p
        out, mult = 0, 1
        for _ in range(self.s):
            out += ((a + b) % self.p) * mult
            a //= self.p
            b //= self.p
            mult *= self.p
        return out

    def neg(self, a: int) -> int:
        if self.s == 1:
            return (-a) % self.p
        out, mult = 0, 1
        for _ in range(self.s):
            out += ((-a) % self.p) * mult
            a //= self.p
            mult *= self.p
        return out

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def _mul_raw(self, a: int, b: int) -> int:
        prod = _poly_mulmod(self.decode(a), self.decode(b), self.modulus, self.p)
        return self.encode(prod)

    def mul(self, a: int, b: int) -> int:
        if self.s == 1:
            return (a * b) % self.p
        if a == 0 or b == 0:
            return 0
        if self._exp is not None:
            return self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]
        return self._mul_raw(a, b)

    def inv(self, a: int) -> int:
        if a == 0:
            raise DivisionByZero("inverse of zero")
        if self.s == 1:
            return pow(a, self.p - 2, self.p)
        if self._exp is not None:
            return self._exp[(-self._log[a]) % (self.q - 1)]
        return self._pow_raw(a, self.q - 2)

    def _pow_raw(self, a: int, e: int) -> int:
        if e == 0:
            return 1
        if a == 0:
            return 0
        if self.s == 1:
            return pow(a, e, self.p)
        poly = _poly_powmod(self.decode(a), e, self.modulus, self.p)
        return self.encode(poly)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        if e == 0:
            return 1
        if a == 0:
            return 0
        if self.s == 1:
            return pow(a, e, self.p)
        if self._exp is not None:
            return self._exp[(self._log[a] * e) % (self.q - 1)]
        return self._pow_raw(a, e)

    def trace(self, a: int) -> int:
        """Tr(a) = a + a^p + ... + a^{p^{s-1}}, as an integer in [0, p)."""
        if self.s == 1:
            return a % self.p
        acc = 0
        frob = a
        for _ in range(self.s):
            acc = self.add(acc, frob)
            frob = self.pow(frob, self.p)
        if acc >= self.p:
            raise AssertionError("trace left the prime subfield")
        return acc

    # -- vectorized helpers (numpy code arrays) -----------------------------

    def np_digits(self) -> np.ndarray:
        """(q, s) array of base-p digits of every code."""
        if self._np_digits is None:
            codes = np.arange(self.q, dtype=np.int64)
            digs = np.empty((self.q, self.s), dtype=np.int64)
            for i in range(self.s):
                digs[:, i] = codes % self.p
                codes //= self.p
            self._np_digits = digs
        return self._np_digits

    def _np_log_tables(self):
        if self._np_exp is None:
            if self.s > 1 and self._exp is None:
                self._rebuild_tables_from_theta()
            if self.s == 1:
                exp = [0] * (self.q - 1)
                log = [-1] * self.q
                acc = 1
                for i in range(self.q - 1):
                    exp[i] = acc
                    log[acc] = i
                    acc = (acc * self.theta) % self.p
                self._np_exp = np.array(exp, dtype=np.int64)
                self._np_log = np.array(log, dtype=np.int64)
            else:
                self._np_exp = np.array(self._exp, dtype=np.int64)
                self._np_log = np.array(self._log, dtype=np.int64)
        return self._np_exp, self._np_log

    def np_add(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if self.s == 1:
            return (xs + ys) % self.p
        digs = self.np_digits()
        d = (digs[xs] + digs[ys]) % self.p
        weights = self.p ** np.arange(self.s, dtype=np.int64)
        return d @ weights

    def np_neg(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if self.s == 1:
            return (-xs) % self.p
        digs = (-self.np_digits()[xs]) % self.p
        weights = self.p ** np.arange(self.s, dtype=np.int64)
        return digs @ weights

    def np_sub(self, xs, ys) -> np.ndarray:
        return self.np_add(xs, self.np_neg(ys))

    def np_mul(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if self.s == 1:
            return (xs * ys) % self.p
        exp, log = self._np_log_tables()
        out = np.zeros(np.broadcast(xs, ys).shape, dtype=np.int64)
        nz = (xs != 0) & (ys != 0)
        b = np.broadcast_arrays(xs, ys)
        out[nz] = exp[(log[b[0][nz]] + log[b[1][nz]]) % (self.q - 1)]
        return out

    def np_pow(self, xs, e: int) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if e == 0:
            return np.ones_like(xs)
        if self.s == 1:
            return self._np_pow_prime(xs, e)
        exp, log = self._np_log_tables()
        out = np.zeros_like(xs)
        nz = xs != 0
        out[nz] = exp[(log[xs[nz]] * e) % (self.q - 1)]
        return out

    def _np_pow_prime(self, xs, e):
        out = np.ones_like(xs)
        acc = xs % self.p
        while e:
            if e & 1:
                out = (out * acc) % self.p
            acc = (acc * acc) % self.p
            e >>= 1
        return out

    # -- identity -----------------------------------------------------------

    @property
    def descriptor(self) -> str:
        return f"{self.p}^{self.s}/{','.join(map(str, self.modulus))}"

    def __eq__(self, other):
        if isinstance(other, FieldSpec):
            return (self.p, self.s, self.modulus) == (other.p, other.s, other.modulus)
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.s, self.modulus))

    def __repr__(self):
        return f"FieldSpec(F_{self.q}, modulus={list(self.modulus)}, theta={self.theta})"


def _default_modulus(p: int, s: int) -> tuple[int, ...]:
    if s == 1:
        return (0, 1)
    for code in range(p ** s):
        lower = []
        c = code
        for _ in range(s):
            lower.append(c % p)
            c //= p
        modulus = tuple(lower) + (1,)
        if _is_irreducible(modulus, p):
            return modulus
    raise AssertionError("no irreducible modulus found")


@lru_cache(maxsize=None)
def _make_field_cached(p: int, s: int, modulus: tuple[int, ...] | None) -> FieldSpec:
    if modulus is None:
        modulus = _default_modulus(p, s)
    return FieldSpec(p, s, modulus)


def make_field(p: int, s: int = 1, modulus=None) -> FieldSpec:
    """Build F_{p^s}; a deterministic modulus and theta are found if omitted."""
    if not isinstance(p, int) or not is_prime(p):
        raise CompositeCharacteristic(f"{p} is not prime")
    if not isinstance(s, int) or s < 1:
        raise PreconditionError(f"extension degree must be >= 1, got {s}")
    if p ** s > FIELD_ORDER_CAP:
        raise FieldTooLarge(f"p^s = {p ** s} exceeds the {FIELD_ORDER_CAP} policy cap")
    if modulus is not None:
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != s + 1:
            raise PreconditionError(f"modulus must have degree {s}")
        if modulus[-1] != 1:
            raise PreconditionError("modulus must be monic")
        if not _is_irreducible(modulus, p):
            raise ReducibleModulus(f"modulus {list(modulus)} is reducible over F_{p}")
    return _make_field_cached(p, s, modulus)


def trace(field: FieldSpec, x) -> int:
    """Trace map F_{p^s} -> F_p, returned as an integer in [0, p)."""
    code = x.code if isinstance(x, FieldElement) else int(x)
    return field.trace(code)


def enumerate_elements(field: FieldSpec) -> list[FieldElement]:
    """All p^s elements in the fixed enumeration order (ascending code)."""
    return list(field.elements())


def parse_descriptor(text: str) -> FieldSpec:
    """Parse "p", "p^s", or "p^s/c0,c1,...,cs" into a field."""
    text = text.strip()
    modulus = None
    if "/" in text:
        text, mod_text = text.split("/", 1)
        modulus = [int(c) for c in mod_text.split(",")]
    if "^" in text:
        p_text, s_text = text.split("^", 1)
        p, s = int(p_text), int(s_text)
    else:
        p, s = int(text), 1
    return make_field(p, s, modulus)


@lru_cache(maxsize=None)
def _extension_cached(p, s, modulus, k):
    field = make_field(p, s, modulus if s > 1 else None)
    ext = make_field(p, s * k)
    if s == 1:
        emb = np.arange(field.q, dtype=np.int64)
        return ext, emb
    # embed via the first root of the base modulus in the extension
    root = None
    for cand in range(ext.q):
        acc = 0
        for c in reversed(field.modulus):
            acc = ext.add(ext.mul(acc, cand), c % p)
        if acc == 0:
            root = cand
            break
    if root is None:
        raise AssertionError("base modulus has no root in the extension")
    emb = np.empty(field.q, dtype=np.int64)
    for code in range(field.q):
        acc = 0
        for c in reversed(field.decode(code)):
            acc = ext.add(ext.mul(acc, root), c)
        emb[code] = acc
    return ext, emb


def extension_with_embedding(field: FieldSpec, k: int):
    """Return (F_{q^k}, emb) with emb an array mapping base codes in.

    The embedding is deterministic: the image of x is the first root of the
    base modulus in the extension's enumeration order.
    """
    if k == 1:
        return field, np.arange(field.q, dtype=np.int64)
    return _extension_cached(field.p, field.s,
                             field.modulus if field.s > 1 else None, k)
