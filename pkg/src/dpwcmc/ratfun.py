"""Exact rational functions of one complex variable with Gaussian-rational coefficients.

Coefficients live in Q(i), represented by :class:`CRat` (a pair of
``fractions.Fraction``).  Polynomials are plain tuples of ``CRat`` in ascending
order of powers; :class:`RationalMap` keeps a reduced numerator/denominator
pair with a monic denominator so that equality is syntactic.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from numbers import Rational
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "CRat",
    "RationalMap",
    "LocalExpansion",
    "ZeroMap",
    "LogarithmicObstruction",
    "ParseError",
    "Root",
    "as_crat",
    "roots",
    "squarefree_decomposition",
    "order_at",
    "residue",
    "local_expansion",
    "antiderivative",
    "derivative",
    "parse_rational",
    "parse_potential_text",
]


class ZeroMap(ValueError):
    """Raised when an operation needs a rational map that is not identically zero."""


class LogarithmicObstruction(ValueError):
    """The antiderivative would contain a logarithm (nonzero residue at ``pole``)."""

    def __init__(self, pole, residue_value):
        self.pole = pole
        self.residue = residue_value
        super().__init__(f"nonzero residue {residue_value} at z = {pole}; antiderivative is not rational")


class ParseError(ValueError):
    pass


_FZERO = Fraction(0)


@total_ordering
class CRat:
    """Exact complex rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("CRat is immutable")

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "CRat":
        # parts are already Fractions; skips the conversion in __init__
        out = object.__new__(cls)
        object.__setattr__(out, "re", re)
        object.__setattr__(out, "im", im)
        return out

    # construction -----------------------------------------------------
    @classmethod
    def from_complex(cls, value: complex, max_denominator: int | None = None) -> "CRat":
        """Exact binary value of a float/complex, optionally snapped to a nearby rational."""
        c = complex(value)
        re, im = Fraction(c.real), Fraction(c.imag)
        if max_denominator is not None:
            re, im = re.limit_denominator(max_denominator), im.limit_denominator(max_denominator)
        return cls(re, im)

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = _maybe_crat(other)
        if o is None:
            return NotImplemented
        return CRat._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return CRat._raw(-self.re, -self.im)

    def __sub__(self, other):
        o = _maybe_crat(other)
        if o is None:
            return NotImplemented
        return CRat._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _maybe_crat(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _maybe_crat(other)
        if o is None:
            return NotImplemented
        if not self.im and not o.im:
            return CRat._raw(self.re * o.re, _FZERO)
        return CRat._raw(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self) -> "CRat":
        d = self.re * self.re + self.im * self.im
        if d == 0:
            raise ZeroDivisionError("division by zero CRat")
        return CRat._raw(self.re / d, -self.im / d)

    def __truediv__(self, other):
        o = _maybe_crat(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _maybe_crat(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers of CRat")
        if k < 0:
            return self.inverse() ** (-k)
        out, base = CRat(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "CRat":
        return CRat(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    # comparisons / hashing -------------------------------------------
    def __eq__(self, other):
        try:
            o = as_crat(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __lt__(self, other):
        # lexicographic; only used for deterministic sorting
        o = as_crat(other)
        return (self.re, self.im) < (o.re, o.im)

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def is_real(self) -> bool:
        return self.im == 0

    def __repr__(self):
        return f"CRat({self})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return _imag_str(self.im)
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{_imag_str(abs(self.im))}"


def _imag_str(v: Fraction) -> str:
    if v == 1:
        return "i"
    if v == -1:
        return "-i"
    return f"{v}i"


def as_crat(x) -> CRat:
    if isinstance(x, CRat):
        return x
    if isinstance(x, (int, Fraction)) or isinstance(x, Rational):
        return CRat(Fraction(x))
    if isinstance(x, str):
        return parse_crat(x)
    if isinstance(x, (float, complex, np.floating, np.complexfloating)):
        return CRat.from_complex(complex(x))
    raise TypeError(f"cannot convert {type(x).__name__} to CRat")


def _maybe_crat(x) -> CRat | None:
    if type(x) is CRat:
        return x
    if isinstance(x, (CRat, int, Fraction, float, complex)) or isinstance(x, Rational):
        return as_crat(x)
    return None


ZERO = CRat(0)
ONE = CRat(1)
I = CRat(0, 1)


# ----------------------------------------------------------------------
# dense polynomial helpers (ascending coefficient tuples)
# ----------------------------------------------------------------------
Poly = tuple


def _trim(p: Sequence[CRat]) -> Poly:
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return tuple(p)


def p_add(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return _trim([(a[k] if k < len(a) else ZERO) + (b[k] if k < len(b) else ZERO) for k in range(n)])


def p_neg(a: Poly) -> Poly:
    return tuple(-c for c in a)


def p_sub(a: Poly, b: Poly) -> Poly:
    return p_add(a, p_neg(b))


def p_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] = out[i + j] + x * y
    return _trim(out)


def p_scale(a: Poly, c: CRat) -> Poly:
    if not c:
        return ()
    return tuple(x * c for x in a)


def p_divmod(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    db = len(b) - 1
    inv_lead = b[-1].inverse()
    q = [ZERO] * max(len(a) - db, 0)
    for k in range(len(a) - 1, db - 1, -1):
        c = a[k] * inv_lead
        if c:
            q[k - db] = c
            for j in range(db + 1):
                a[k - db + j] = a[k - db + j] - c * b[j]
    return _trim(q), _trim(a[:db])


def p_monic(a: Poly) -> Poly:
    if not a:
        return a
    return p_scale(a, a[-1].inverse())


def p_gcd(a: Poly, b: Poly) -> Poly:
    a, b = _trim(a), _trim(b)
    while b:
        _, r = p_divmod(a, b)
        a, b = b, r
    return p_monic(a)


def p_deriv(a: Poly) -> Poly:
    return _trim([a[k] * k for k in range(1, len(a))])


def p_eval(a: Poly, z: CRat) -> CRat:
    out = ZERO
    for c in reversed(a):
        out = out * z + c
    return out


def p_taylor_shift(a: Poly, z0: CRat) -> Poly:
    """Coefficients of ``a(z0 + w)`` in powers of ``w`` (Horner-style synthetic division)."""
    c = list(a)
    n = len(c)
    for i in range(n):
        for k in range(n - 2, i - 1, -1):
            c[k] = c[k] + z0 * c[k + 1]
    return _trim(c)


def p_pow(a: Poly, k: int) -> Poly:
    out: Poly = (ONE,)
    for _ in range(k):
        out = p_mul(out, a)
    return out


# ----------------------------------------------------------------------
# RationalMap
# ----------------------------------------------------------------------
class RationalMap:
    """Reduced quotient of two polynomials in ``z`` over Q(i).

    Normal form: ``gcd(num, den) = 1`` and ``den`` monic; the zero map is
    ``num = ()`` with ``den = (1,)``.  Equality compares normal forms.
    """

    __slots__ = ("num", "den")

    def __init__(self, numerator: Iterable = (), denominator: Iterable = (1,)):
        num = _trim([as_crat(c) for c in numerator])
        den = _trim([as_crat(c) for c in denominator])
        if not den:
            raise ZeroDivisionError("denominator is identically zero")
        if not num:
            num, den = (), (ONE,)
        else:
            g = p_gcd(num, den)
            if len(g) > 1:
                num, _ = p_divmod(num, g)
                den, _ = p_divmod(den, g)
            lead = den[-1].inverse()
            num, den = p_scale(num, lead), p_scale(den, lead)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RationalMap is immutable")

    # constructors ------------------------------------------------------
    @classmethod
    def const(cls, c) -> "RationalMap":
        return cls((as_crat(c),))

    @classmethod
    def z(cls) -> "RationalMap":
        return cls((ZERO, ONE))

    @classmethod
    def linear(cls, z0) -> "RationalMap":
        """The map ``z - z0``."""
        return cls((-as_crat(z0), ONE))

    @classmethod
    def from_roots(cls, zeros=(), poles=(), scale=1) -> "RationalMap":
        num: Poly = (as_crat(scale),)
        den: Poly = (ONE,)
        for r in zeros:
            num = p_mul(num, (-as_crat(r), ONE))
        for r in poles:
            den = p_mul(den, (-as_crat(r), ONE))
        return cls(num, den)

    # predicates --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def is_polynomial(self) -> bool:
        return len(self.den) == 1

    def is_constant(self) -> bool:
        return len(self.den) == 1 and len(self.num) <= 1

    # arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "RationalMap":
        if isinstance(other, RationalMap):
            return other
        return RationalMap.const(other)

    def __add__(self, other):
        o = self._coerce(other)
        return RationalMap(p_add(p_mul(self.num, o.den), p_mul(o.num, self.den)), p_mul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalMap(p_neg(self.num), self.den)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return RationalMap(p_mul(self.num, o.num), p_mul(self.den, o.den))

    __rmul__ = __mul__

    def inverse(self) -> "RationalMap":
        if self.is_zero():
            raise ZeroDivisionError("inverse of the zero map")
        return RationalMap(self.den, self.num)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RationalMap(p_pow(self.num, k), p_pow(self.den, k))

    def __eq__(self, other):
        if not isinstance(other, RationalMap):
            try:
                other = RationalMap.const(other)
            except TypeError:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def compose_affine(self, alpha, beta) -> "RationalMap":
        """``r(alpha*w + beta)`` as a rational map in ``w``."""
        alpha, beta = as_crat(alpha), as_crat(beta)

        def sub(p: Poly) -> Poly:
            out: Poly = ()
            lin: Poly = (beta, alpha)
            for c in reversed(p):
                out = p_add(p_mul(out, lin), (c,))
            return out

        return RationalMap(sub(self.num), sub(self.den))

    # evaluation --------------------------------------------------------
    def __call__(self, z):
        if isinstance(z, (CRat, int, Fraction)):
            z = as_crat(z)
            d = p_eval(self.den, z)
            if not d:
                raise ZeroDivisionError(f"pole at z = {z}")
            return p_eval(self.num, z) / d
        return self.evaluate(z)

    def evaluate(self, z):
        """Floating-point evaluation (scalar or ndarray)."""
        num = np.array([complex(c) for c in reversed(self.num)] or [0j])
        den = np.array([complex(c) for c in reversed(self.den)])
        return np.polyval(num, z) / np.polyval(den, z)

    def numeric(self) -> "NumericRational":
        return NumericRational(self)

    # structure ---------------------------------------------------------
    def poles(self) -> list["Root"]:
        return roots(self.den)

    def zeros(self) -> list["Root"]:
        return roots(self.num) if self.num else []

    def degree(self) -> tuple[int, int]:
        return len(self.num) - 1, len(self.den) - 1

    def __repr__(self):
        return f"RationalMap({format_rational(self)!r})"

    def __str__(self):
        return format_rational(self)


class NumericRational:
    """Float view of a :class:`RationalMap` for fast vectorised evaluation.

    Evaluates in factored form ``c * prod (z - a)^k / prod (z - b)^l``; the
    expanded polynomials lose all relative accuracy next to a multiple root.
    """

    __slots__ = ("lead", "zeros", "poles", "is_zero")

    def __init__(self, r: RationalMap):
        self.is_zero = r.is_zero()
        if self.is_zero:
            self.lead, self.zeros, self.poles = 0j, [], []
            return
        self.lead = complex(r.num[-1]) / complex(r.den[-1])
        self.zeros = [(rt.approx, rt.multiplicity) for rt in roots(r.num)]
        self.poles = [(rt.approx, rt.multiplicity) for rt in roots(r.den)]

    def __call__(self, z):
        z = np.asarray(z, complex)
        out = np.full(z.shape, self.lead, complex)
        if self.is_zero:
            return out
        for a, k in self.zeros:
            out = out * (z - a) ** k
        for b, l in self.poles:
            out = out / (z - b) ** l
        return out


# ----------------------------------------------------------------------
# roots and square-free structure
# ----------------------------------------------------------------------
class Root(NamedTuple):
    """A root of a polynomial: exact location when it lies in Q(i)."""

    approx: complex
    multiplicity: int
    exact: CRat | None

    @property
    def location(self):
        return self.exact if self.exact is not None else self.approx


def squarefree_decomposition(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: monic square-free ``s_j`` with ``p = c * prod s_j**j``."""
    p = p_monic(_trim(p))
    if len(p) <= 1:
        return []
    out = []
    dp = p_deriv(p)
    a = p_gcd(p, dp)
    b, _ = p_divmod(p, a)
    c, _ = p_divmod(dp, a)
    d = p_sub(c, p_deriv(b))
    j = 1
    while len(b) > 1:
        a = p_gcd(b, d)
        b, _ = p_divmod(b, a)
        c, _ = p_divmod(d, a)
        if len(a) > 1:
            out.append((a, j))
        d = p_sub(c, p_deriv(b))
        j += 1
    return out


def _snap(approx: complex, p: Poly) -> CRat | None:
    for den in (1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 25, 32, 50, 64, 100, 1000, 10**4, 10**6):
        cand = CRat(Fraction(round(approx.real * den), den), Fraction(round(approx.imag * den), den))
        if not p_eval(p, cand):
            return cand
    for md in (10**3, 10**6, 10**9):
        cand = CRat.from_complex(approx, md)
        if not p_eval(p, cand):
            return cand
    return None


def roots(p: Poly) -> list[Root]:
    """Distinct roots with exact multiplicities; locations exact when in Q(i)."""
    out: list[Root] = []
    for s, mult in squarefree_decomposition(p):
        rest = s
        for approx in np.roots([complex(c) for c in reversed(s)]):
            cand = _snap(approx, rest) if len(rest) > 1 else None
            if cand is not None:
                rest, _ = p_divmod(rest, (-cand, ONE))
                out.append(Root(complex(cand), mult, cand))
        if len(rest) > 1:
            out.extend(Root(complex(z), mult, None) for z in np.roots([complex(c) for c in reversed(rest)]))
    out.sort(key=lambda r: (r.approx.real, r.approx.imag))
    return out


def exact_roots(p: Poly) -> list[CRat]:
    """Roots of ``p`` lying in Q(i); raises if any root is outside Q(i)."""
    found = roots(p)
    if any(r.exact is None for r in found):
        raise ValueError(f"polynomial has roots outside Q(i): {format_poly(p)}")
    return [r.exact for r in found]


# ----------------------------------------------------------------------
# local analysis
# ----------------------------------------------------------------------
def _require_nonzero(r: RationalMap):
    if r.is_zero():
        raise ZeroMap("operation undefined for the zero map")


def _vanishing_order(p: Poly) -> int:
    for k, c in enumerate(p):
        if c:
            return k
    raise ZeroMap("zero polynomial")


def order_at(r: RationalMap, z0) -> int:
    """Signed order of ``r`` at ``z0``: ``k > 0`` zero, ``k < 0`` pole, 0 otherwise."""
    _require_nonzero(r)
    z0 = as_crat(z0)
    return _vanishing_order(p_taylor_shift(r.num, z0)) - _vanishing_order(p_taylor_shift(r.den, z0))


@dataclass(frozen=True)
class LocalExpansion:
    base_point: CRat
    leading_order: int
    coefficients: tuple

    def coefficient(self, power: int) -> CRat:
        k = power - self.leading_order
        if 0 <= k < len(self.coefficients):
            return self.coefficients[k]
        if k < 0:
            return ZERO
        raise IndexError(f"coefficient of w^{power} not computed")


def series_div(num: Poly, den: Poly, count: int) -> list[CRat]:
    """First ``count`` power-series coefficients of num/den with den[0] != 0."""
    inv0 = den[0].inverse()
    out: list[CRat] = []
    for k in range(count):
        acc = num[k] if k < len(num) else ZERO
        for j in range(1, min(k, len(den) - 1) + 1):
            acc = acc - den[j] * out[k - j]
        out.append(acc * inv0)
    return out


def local_expansion(r: RationalMap, z0, K: int) -> LocalExpansion:
    """Exact Laurent coefficients of ``r`` around ``z0`` from the leading order on."""
    if K < 1:
        raise ValueError("K must be >= 1")
    _require_nonzero(r)
    z0 = as_crat(z0)
    num = p_taylor_shift(r.num, z0)
    den = p_taylor_shift(r.den, z0)
    vn, vd = _vanishing_order(num), _vanishing_order(den)
    coeffs = series_div(num[vn:], den[vd:], K)
    return LocalExpansion(z0, vn - vd, tuple(coeffs))


def residue(r: RationalMap, z0) -> CRat:
    """Coefficient of ``(z - z0)^-1`` in the Laurent expansion; 0 where holomorphic."""
    if r.is_zero():
        return ZERO
    z0 = as_crat(z0)
    order = order_at(r, z0)
    if order >= 0:
        return ZERO
    return local_expansion(r, z0, -order).coefficient(-1)


def derivative(r: RationalMap) -> RationalMap:
    return RationalMap(
        p_sub(p_mul(p_deriv(r.num), r.den), p_mul(r.num, p_deriv(r.den))),
        p_mul(r.den, r.den),
    )


def p_ext_euclid(a: Poly, b: Poly, c: Poly) -> tuple[Poly, Poly]:
    """``(s, t)`` with ``s*a + t*b = c`` and ``deg s < deg b``; needs gcd(a, b) | c."""
    r0, r1 = _trim(a), _trim(b)
    s0, s1 = (ONE,), ()
    t0, t1 = (), (ONE,)
    while r1:
        q, r = p_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, p_sub(s0, p_mul(q, s1))
        t0, t1 = t1, p_sub(t0, p_mul(q, t1))
    # r0 = s0*a + t0*b is the (non-monic) gcd
    q, rem = p_divmod(c, r0)
    if rem:
        raise ValueError("c is not in the ideal generated by a and b")
    s, t = p_mul(s0, q), p_mul(t0, q)
    if b and len(s) >= len(b):
        qq, s = p_divmod(s, b)
        t = p_add(t, p_mul(qq, a))
    return s, t


def hermite_reduce(num: Poly, den: Poly) -> tuple[RationalMap, Poly, Poly]:
    """Split ``∫ num/den`` (proper) into a rational part and ``∫ A/D`` with square-free ``D``."""
    g = RationalMap()
    A, D = _trim(num), p_monic(_trim(den))
    lead = _trim(den)[-1]
    A = p_scale(A, lead.inverse())
    for V, i in squarefree_decomposition(D):
        if i < 2:
            continue
        U, _ = p_divmod(D, p_pow(V, i))
        dV = p_deriv(V)
        for j in range(i - 1, 0, -1):
            B, C = p_ext_euclid(p_mul(U, dV), V, p_scale(A, CRat(Fraction(-1, j))))
            g = g + RationalMap(B, p_pow(V, j))
            A = p_sub(p_scale(C, CRat(-j)), p_mul(U, p_deriv(B)))
        D = p_mul(U, V)
    return g, A, D


def antiderivative(r: RationalMap, base=0) -> RationalMap:
    """Rational ``R`` with ``R' = r`` and ``R(base) = 0``.

    Hermite reduction leaves ``∫ A/D`` with square-free ``D``; the result is
    rational exactly when ``A`` vanishes, otherwise the pole with the largest
    residue is reported through :class:`LogarithmicObstruction`.
    """
    base = as_crat(base)
    if r.is_zero():
        return RationalMap()
    q, rem = p_divmod(r.num, r.den)
    result = RationalMap([ZERO] + [c / (k + 1) for k, c in enumerate(q)])
    if rem:
        g, A, D = hermite_reduce(rem, r.den)
        _, A = p_divmod(A, D)
        if A:
            raise _log_obstruction(A, D)
        result = result + g
    try:
        offset = result(base)
    except ZeroDivisionError:
        raise ValueError(f"antiderivative has a pole at the base point {base}") from None
    return result - offset


def _log_obstruction(A: Poly, D: Poly) -> LogarithmicObstruction:
    best = None
    for root in roots(D):
        if root.exact is not None:
            res = p_eval(A, root.exact) / p_eval(p_deriv(D), root.exact)
            mag = abs(complex(res))
            loc = root.exact
        else:
            a = np.polyval([complex(c) for c in reversed(A)], root.approx)
            d = np.polyval([complex(c) for c in reversed(p_deriv(D))], root.approx)
            res = a / d
            mag = abs(res)
            loc = root.approx
        if best is None or mag > best[0]:
            best = (mag, loc, res)
    return LogarithmicObstruction(best[1], best[2])


# ----------------------------------------------------------------------
# text syntax
# ----------------------------------------------------------------------
def parse_crat(text: str) -> CRat:
    r = parse_rational(text)
    if not r.is_constant():
        raise ParseError(f"expected a constant, got {text!r}")
    return r.num[0] if r.num else ZERO


def parse_rational(text: str, var: str = "z") -> RationalMap:
    """Parse an arithmetic expression in ``z`` and ``i`` into a :class:`RationalMap`.

    Accepts ``+ - * / ^ **``, parentheses, integer (possibly negative) powers,
    decimal literals (read exactly) and implicit products such as ``2z`` or ``3i``.
    """
    src = text.strip()
    if not src:
        raise ParseError("empty expression")
    src = src.replace("^", "**")
    src = re.sub(rf"(?<=[0-9.)])\s*(?=[({var}i])", "*", src)
    src = re.sub(rf"(?<=[{var}i)])\s*(?=\()", "*", src)
    src = re.sub(rf"\b([{var}i])\s*(?=[{var}i]\b)", r"\1*", src)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None
    return _eval_node(tree.body, src, var, text)


def _eval_node(node, src: str, var: str, original: str):
    ev = lambda n: _eval_node(n, src, var, original)  # noqa: E731
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        seg = ast.get_source_segment(src, node)
        return RationalMap.const(Fraction(seg))
    if isinstance(node, ast.Name):
        if node.id == var:
            return RationalMap.z()
        if node.id in ("i", "I", "j"):
            return RationalMap.const(I)
        raise ParseError(f"unknown symbol {node.id!r} in {original!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = ev(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            base = ev(node.left)
            expo = ev(node.right)
            if not expo.is_constant() or (expo.num and (expo.num[0].im != 0 or expo.num[0].re.denominator != 1)):
                raise ParseError(f"exponents must be integers in {original!r}")
            k = int(expo.num[0].re) if expo.num else 0
            return base ** k
        a, b = ev(node.left), ev(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            if b.is_zero():
                raise ParseError(f"division by zero in {original!r}")
            return a / b
    raise ParseError(f"unsupported syntax in {original!r}")


def parse_potential_text(text: str) -> dict[str, RationalMap]:
    """Read ``f = ...`` / ``E = ...`` lines (``#`` comments allowed)."""
    out: dict[str, RationalMap] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'name = expression'")
        key, expr = (s.strip() for s in line.split("=", 1))
        if key not in ("f", "E"):
            raise ParseError(f"line {lineno}: unknown entry {key!r} (expected f or E)")
        try:
            out[key] = parse_rational(expr)
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    missing = {"f", "E"} - out.keys()
    if missing:
        raise ParseError(f"missing entries: {', '.join(sorted(missing))}")
    return out


# ----------------------------------------------------------------------
# formatting
# ----------------------------------------------------------------------
def _coef_str(c: CRat) -> str:
    s = str(c)
    if c.re != 0 and c.im != 0:
        return f"({s})"
    if "/" in s:
        return f"({s})"
    return s


def format_poly(p: Poly, var: str = "z") -> str:
    if not p:
        return "0"
    out = ""
    for k in range(len(p) - 1, -1, -1):
        c = p[k]
        if not c:
            continue
        negative = c.im == 0 and c.re < 0 or c.re == 0 and c.im < 0
        if negative:
            c = -c
        mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
        if not mono:
            term = _coef_str(c)
        elif c == ONE:
            term = mono
        else:
            term = f"{_coef_str(c)}*{mono}"
        if not out:
            out = f"-{term}" if negative else term
        else:
            out += f" - {term}" if negative else f" + {term}"
    return out


def format_rational(r: RationalMap, var: str = "z") -> str:
    """Canonical text form; parses back to the same normal form."""
    num = format_poly(r.num, var)
    if r.is_polynomial():
        return num
    return f"({num})/({format_poly(r.den, var)})"
