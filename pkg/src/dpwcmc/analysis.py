"""Integrability and smoothness analysis of DPW potentials at singular points.

Near a pole or zero ``z0`` of ``f`` the first row of ``g_-`` is governed by the
scalar equation ``y'' = (f'/f) y' + mu E y`` with ``mu = lambda**-2``.  In the
local coordinate ``w = z - z0`` this is a regular singular point with integer
indicial roots, so a meromorphic solution basis exists exactly when one
polynomial identity in ``mu`` (the obstruction) holds.  Everything here is
exact over Q(i) except :func:`monodromy_oracle`, which is the numeric witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .ratfun import (
    ZERO,
    CRat,
    RationalMap,
    as_crat,
    derivative,
    format_poly,
    local_expansion,
    order_at,
    p_add,
    p_eval,
    p_gcd,
    p_deriv,
    p_mul,
    p_scale,
    p_sub,
    p_taylor_shift,
    roots,
    series_div,
    squarefree_decomposition,
)

__all__ = [
    "MuPolynomial",
    "Pole",
    "Zero",
    "Potential",
    "FrobeniusReport",
    "SingularityVerdict",
    "SingularPoint",
    "MonodromyResult",
    "PotentialError",
    "OddOrderAt",
    "PoleAtOrigin",
    "PoleOfEInDomain",
    "ZeroE",
    "DegeneratePotential",
    "OddOrder",
    "NotSingular",
    "InsufficientTerms",
    "Obstructed",
    "NotNormalized",
    "StepSizeUnderflow",
    "SingularityOnPath",
    "indicial_roots",
    "frobenius_obstruction",
    "top_series",
    "residue_test",
    "second_solution",
    "second_solution_by_reduction",
    "ode_residual",
    "symmetry_shortcut",
    "quadratic_form_check",
    "monodromy_oracle",
    "classify_singularity",
    "classify_all",
    "singular_points",
    "validate_potential",
    "order_condition",
    "branch_pattern",
]


# ----------------------------------------------------------------------
# errors
# ----------------------------------------------------------------------
class PotentialError(ValueError):
    """Base class for validation failures; ``violations`` lists every problem found."""

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where
        self.violations: list[PotentialError] = [self]


class OddOrderAt(PotentialError):
    pass


class PoleAtOrigin(PotentialError):
    pass


class PoleOfEInDomain(PotentialError):
    pass


class ZeroE(PotentialError):
    pass


class DegeneratePotential(PotentialError):
    pass


class OddOrder(ValueError):
    pass


class NotSingular(ValueError):
    pass


class InsufficientTerms(ValueError):
    pass


class Obstructed(ValueError):
    pass


class NotNormalized(ValueError):
    pass


class StepSizeUnderflow(ArithmeticError):
    pass


class SingularityOnPath(ValueError):
    pass


# ----------------------------------------------------------------------
# polynomials in mu = lambda^-2
# ----------------------------------------------------------------------
class MuPolynomial:
    """Exact polynomial in ``mu = lambda**-2`` with Q(i) coefficients (ascending)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence = ()):
        c = [as_crat(x) for x in coeffs]
        while c and not c[-1]:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    def __setattr__(self, name, value):
        raise AttributeError("MuPolynomial is immutable")

    @classmethod
    def const(cls, c) -> "MuPolynomial":
        return cls((c,))

    @classmethod
    def mu(cls, c=1) -> "MuPolynomial":
        return cls((ZERO, c))

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def leading(self) -> CRat:
        return self.coeffs[-1] if self.coeffs else ZERO

    def __add__(self, other):
        return MuPolynomial(p_add(self.coeffs, _mu(other).coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        return MuPolynomial(p_sub(self.coeffs, _mu(other).coeffs))

    def __rsub__(self, other):
        return _mu(other) - self

    def __neg__(self):
        return MuPolynomial(p_scale(self.coeffs, CRat(-1)))

    def __mul__(self, other):
        if isinstance(other, MuPolynomial):
            return MuPolynomial(p_mul(self.coeffs, other.coeffs))
        return MuPolynomial(p_scale(self.coeffs, as_crat(other)))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return MuPolynomial(p_scale(self.coeffs, as_crat(c).inverse()))

    def __eq__(self, other):
        if not isinstance(other, MuPolynomial):
            try:
                other = _mu(other)
            except TypeError:
                return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __call__(self, mu):
        if isinstance(mu, (CRat, int, Fraction)):
            return p_eval(self.coeffs, as_crat(mu))
        return complex(np.polyval([complex(c) for c in reversed(self.coeffs)] or [0j], mu))

    def at_lambda(self, lam: complex) -> complex:
        return self(complex(lam) ** -2)

    def __repr__(self):
        return f"MuPolynomial({self})"

    def __str__(self):
        return format_poly(self.coeffs, "mu")


def _mu(x) -> MuPolynomial:
    return x if isinstance(x, MuPolynomial) else MuPolynomial.const(x)


# ----------------------------------------------------------------------
# potentials and singular points
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Pole:
    n: int

    def __str__(self):
        return f"Pole({self.n})"


@dataclass(frozen=True)
class Zero:
    n: int

    def __str__(self):
        return f"Zero({self.n})"


@dataclass(frozen=True)
class Potential:
    f: RationalMap
    E: RationalMap
    domain: str = "plane"

    @property
    def g(self) -> RationalMap:
        return self.E / self.f

    def in_domain(self, z) -> bool:
        if self.domain == "plane":
            return True
        return abs(complex(z)) < 1


@dataclass(frozen=True)
class SingularPoint:
    """A zero or pole of ``f`` inside the domain."""

    approx: complex
    exact: CRat | None
    n: int  # signed order of f
    m: int  # zero order of E

    @property
    def location(self):
        return self.exact if self.exact is not None else self.approx


def _root_orders(poly, approx: complex, s) -> int:
    """Multiplicity of the root ``approx`` of the square-free factor ``s`` in ``poly``."""
    if not poly:
        raise ValueError("zero polynomial")
    k = 0
    cur = poly
    while cur:
        g = p_gcd(s, cur)
        if len(g) <= 1:
            return k
        scale = max(abs(complex(c)) for c in g)
        val = abs(np.polyval([complex(c) for c in reversed(g)], approx))
        if val > 1e-8 * scale * max(1.0, abs(approx)) ** (len(g) - 1):
            return k
        k += 1
        cur = p_deriv(cur)
    return k


def _e_order(E: RationalMap, pt_exact, approx, s) -> int:
    if E.is_zero():
        return 10**9
    if pt_exact is not None:
        return order_at(E, pt_exact)
    return _root_orders(E.num, approx, s)


def singular_points(p: Potential) -> list[SingularPoint]:
    """Poles and zeros of ``f`` inside the domain, sorted by location."""
    out: list[SingularPoint] = []
    for poly, sign in ((p.f.num, 1), (p.f.den, -1)):
        for s, mult in squarefree_decomposition(poly):
            for r in roots(s):
                if not p.in_domain(r.location):
                    continue
                m = _e_order(p.E, r.exact, r.approx, s)
                out.append(SingularPoint(r.approx, r.exact, sign * mult, m))
    out.sort(key=lambda sp: (sp.approx.real, sp.approx.imag))
    return out


def _all_ode_singularities(p: Potential) -> list[complex]:
    pts = [r.approx for r in roots(p.f.num)] + [r.approx for r in roots(p.f.den)]
    if not p.E.is_zero():
        pts += [r.approx for r in roots(p.E.den)]
    return pts


def validate_potential(f: RationalMap, E: RationalMap, domain: str = "plane", allow_zero_hopf: bool = False) -> Potential:
    """Check the standing assumptions on ``(f, E)`` and return a :class:`Potential`."""
    if domain not in ("plane", "disk"):
        raise ValueError(f"unknown domain {domain!r}")
    p = Potential(f, E, domain)
    problems: list[PotentialError] = []
    if f.is_zero():
        raise DegeneratePotential("f is identically zero")
    if E.is_zero() and not allow_zero_hopf:
        problems.append(ZeroE("E is identically zero (round sphere); pass allow_zero_hopf to accept"))
    for sp in singular_points(p):
        if sp.n % 2:
            problems.append(OddOrderAt(f"f has order {sp.n} (odd) at z = {sp.location}", sp.location))
    if not E.is_zero():
        for r in roots(E.den):
            if p.in_domain(r.location):
                problems.append(PoleOfEInDomain(f"E has a pole at z = {r.location}", r.location))
    if order_at(f, 0) < 0 or (not E.is_zero() and order_at(E / f, 0) < 0):
        problems.append(PoleAtOrigin("f or E/f has a pole at z = 0", 0))
    if problems:
        first = problems[0]
        first.violations = problems
        raise first
    return p


# ----------------------------------------------------------------------
# Frobenius machinery
# ----------------------------------------------------------------------
def indicial_roots(kind) -> tuple[int, int]:
    n = kind.n
    if n < 2 or n % 2:
        raise OddOrder(f"order {n} is not an even integer >= 2")
    if isinstance(kind, Pole):
        return 0, 1 - n
    return n + 1, 0


@dataclass(frozen=True)
class FrobeniusReport:
    z0: CRat
    kind: Pole | Zero
    r1: int
    r2: int
    q: tuple  # coefficients of -w f'/f
    E_coeffs: tuple  # Taylor coefficients of E
    top_series: tuple  # MuPolynomials, y1 = w^r1 sum a_i w^i
    low_series: tuple  # MuPolynomials, y2 = w^r2 sum a~_k w^k, k < r1 - r2
    obstruction: MuPolynomial

    @property
    def K(self) -> int:
        return self.r1 - self.r2

    @property
    def integrable(self) -> bool:
        return self.obstruction.is_zero()

    def to_dict(self) -> dict:
        return {
            "z0": str(self.z0),
            "kind": str(self.kind),
            "r1": self.r1,
            "r2": self.r2,
            "obstruction": str(self.obstruction),
            "integrable": self.integrable,
        }


def _phi(q0: CRat, r: int) -> CRat:
    return CRat(r * (r - 1)) + q0 * r


def _local_data(p: Potential, z0, count: int):
    z0 = as_crat(z0)
    if p.E.is_zero():
        E_coeffs = [ZERO] * count
    else:
        eo = order_at(p.E, z0)
        if eo < 0:
            raise ValueError(f"E has a pole at z = {z0}")
        ex = local_expansion(p.E, z0, max(count - eo, 1))
        E_coeffs = [ex.coefficient(k) for k in range(count)]
    # -w f'/f = -n - w (P'/P - Q'/Q) with f = w^n P/Q, P(0) Q(0) != 0
    num = p_taylor_shift(p.f.num, z0)
    den = p_taylor_shift(p.f.den, z0)
    vn = next(k for k, c in enumerate(num) if c)
    vd = next(k for k, c in enumerate(den) if c)
    P, Q = num[vn:], den[vd:]
    dlog = [a - b for a, b in zip(series_div(p_deriv(P), P, count - 1), series_div(p_deriv(Q), Q, count - 1))]
    q = [CRat(vd - vn)] + [-c for c in dlog]
    return q, E_coeffs


def _kind_at(p: Potential, z0):
    n = order_at(p.f, z0)
    if n == 0:
        raise NotSingular(f"f has neither a pole nor a zero at z = {z0}")
    if n % 2:
        raise OddOrder(f"f has odd order {n} at z = {z0}")
    return Pole(-n) if n < 0 else Zero(n)


def _recursion(q, E, r: int, count: int, stop_at: int | None = None, free=None) -> list[MuPolynomial]:
    """Coefficients a_k (a_0 = 1) of ``w^r sum a_k w^k`` solving the local equation.

    At ``k == stop_at`` the indicial polynomial vanishes and ``free`` is used.
    """
    q0 = q[0]
    a = [MuPolynomial.const(1)]
    for k in range(1, count):
        rhs = MuPolynomial()
        for s in range(k):
            if q[k - s]:
                rhs = rhs - a[s] * (q[k - s] * (s + r))
        acc = MuPolynomial()
        for s in range(2, k + 1):
            if E[s - 2]:
                acc = acc + a[k - s] * E[s - 2]
        rhs = rhs + MuPolynomial.mu() * acc
        if stop_at is not None and k == stop_at:
            a.append(free if free is not None else MuPolynomial())
            continue
        ph = _phi(q0, k + r)
        if not ph:
            raise ArithmeticError(f"indicial polynomial vanishes at k = {k}")
        a.append(rhs / ph)
    return a


def _obstruction(q, E, r2: int, K: int, low) -> MuPolynomial:
    out = MuPolynomial()
    for s in range(K):
        if q[K - s]:
            out = out + low[s] * (q[K - s] * (s + r2))
    acc = MuPolynomial()
    for s in range(2, K + 1):
        if E[s - 2]:
            acc = acc + low[K - s] * E[s - 2]
    return out - MuPolynomial.mu() * acc


def frobenius_obstruction(p: Potential, z0, top_terms: int | None = None) -> FrobeniusReport:
    z0 = as_crat(z0)
    kind = _kind_at(p, z0)
    r1, r2 = indicial_roots(kind)
    K = r1 - r2
    count = max(K + 2, top_terms or 0)
    q, E = _local_data(p, z0, count + 1)
    low = _recursion(q, E, r2, K)
    obstruction = _obstruction(q, E, r2, K, low)
    top = _recursion(q, E, r1, count)
    return FrobeniusReport(z0, kind, r1, r2, tuple(q), tuple(E), tuple(top), tuple(low), obstruction)


def top_series(p: Potential, z0, count: int) -> list[MuPolynomial]:
    return list(frobenius_obstruction(p, z0, top_terms=count).top_series[:count])


def _series_mul(a, b, count):
    out = []
    for k in range(count):
        acc = MuPolynomial()
        for j in range(k + 1):
            if j < len(a) and k - j < len(b):
                acc = acc + a[j] * b[k - j]
        out.append(acc)
    return out


def _series_inv_monic(a, count):
    """Inverse of a power series whose constant term is the MuPolynomial 1."""
    out = [MuPolynomial.const(1)]
    for k in range(1, count):
        acc = MuPolynomial()
        for j in range(1, k + 1):
            if j < len(a):
                acc = acc - a[j] * out[k - j]
        out.append(acc)
    return out


def residue_test(p: Potential, z0, top: Sequence[MuPolynomial] | None = None) -> MuPolynomial:
    """Exact residue of ``f / y1**2`` at ``z0`` as a polynomial in mu."""
    z0 = as_crat(z0)
    kind = _kind_at(p, z0)
    r1, r2 = indicial_roots(kind)
    K = r1 - r2
    if top is None:
        top = top_series(p, z0, K + 2)
    if len(top) < K + 1:
        raise InsufficientTerms(f"need {K + 1} coefficients of y1, got {len(top)}")
    fx = local_expansion(p.f, z0, K + 1)
    inv = _series_inv_monic(_series_mul(top, top, K + 1), K + 1)
    fser = [MuPolynomial.const(c) for c in fx.coefficients]
    prod = _series_mul(fser, inv, K + 1)
    # f / y1^2 = w^(ord - 2 r1) * sum prod_j w^j ; residue is j = 2 r1 - ord - 1
    j = 2 * r1 - fx.leading_order - 1
    return prod[j]


def ode_residual(p: Potential, z0, r: int, coeffs: Sequence[MuPolynomial]) -> list[MuPolynomial]:
    """Coefficients of ``w^(k+r)`` in ``w^2 y'' + q w y' - mu w^2 E y`` for ``y = w^r sum c_k w^k``."""
    count = len(coeffs)
    q, E = _local_data(p, z0, count + 1)
    out = []
    for k in range(count):
        acc = coeffs[k] * ((k + r) * (k + r - 1))
        for s in range(k + 1):
            if q[k - s]:
                acc = acc + coeffs[s] * (q[k - s] * (s + r))
        e = MuPolynomial()
        for s in range(k - 1):
            if E[k - 2 - s]:
                e = e + coeffs[s] * E[k - 2 - s]
        out.append(acc - MuPolynomial.mu() * e)
    return out


def second_solution(report: FrobeniusReport, K: int, p: Potential | None = None) -> list[MuPolynomial]:
    """Coefficients of the lower-root solution, with the free coefficient at ``r1 - r2`` set to 0."""
    if not report.integrable:
        raise Obstructed(f"logarithmic obstruction at z = {report.z0}: {report.obstruction}")
    q, E = list(report.q), list(report.E_coeffs)
    if len(q) < K + 1 and p is None:
        raise InsufficientTerms("report carries too few local coefficients; pass the potential")
    if p is not None and len(q) < K + 1:
        q, E = _local_data(p, report.z0, K + 1)
    coeffs = _recursion(q, E, report.r2, K, stop_at=report.K)
    if p is not None:
        bad = [k for k, v in enumerate(ode_residual(p, report.z0, report.r2, coeffs)) if v]
        if bad:
            raise ArithmeticError(f"second solution fails the equation at orders {bad}")
    return coeffs


def second_solution_by_reduction(p: Potential, z0, count: int) -> list[MuPolynomial]:
    """Second solution built as ``y1 * v`` with ``v' = C f / y1**2`` (reduction of order).

    Normalised so that the leading coefficient is 1; it differs from
    :func:`second_solution` by a multiple of ``y1`` only.
    """
    z0 = as_crat(z0)
    kind = _kind_at(p, z0)
    r1, r2 = indicial_roots(kind)
    K = r1 - r2
    top = top_series(p, z0, count)
    fx = local_expansion(p.f, z0, count)
    inv = _series_inv_monic(_series_mul(top, top, count), count)
    s = _series_mul([MuPolynomial.const(c) for c in fx.coefficients], inv, count)
    base = fx.leading_order - 2 * r1 + 1  # exponent of the j = 0 term of v
    v = []
    for j in range(count):
        e = base + j
        if e == 0:
            if s[j]:
                raise Obstructed("f / y1^2 has a residue")
            v.append(MuPolynomial())
        else:
            v.append(s[j] / e)
    # y1 * v starts at w^(r1 + base) = w^r2
    assert r1 + base == r2 and K == r1 - r2
    prod = _series_mul(top, v, count)
    lead = prod[0]
    if lead.degree != 0:
        raise ArithmeticError("unexpected leading coefficient")
    return [c / lead.coeffs[0] for c in prod]


def symmetry_shortcut(p: Potential, z0) -> bool:
    """True if ``f(z0 + w)`` and ``E(z0 + w)`` are both even in ``w``."""
    z0 = as_crat(z0)
    for r in (p.f, p.E):
        local = r.compose_affine(1, z0)
        if local != local.compose_affine(-1, 0):
            return False
    return True


def quadratic_form_check(E_coeffs: Sequence, kind, f_local: RationalMap | None = None) -> MuPolynomial:
    """``E_{K-2} - <E, S_u P B^{-1} E>`` for ``f = w^{-n}`` (pole) or ``w^n`` (zero).

    ``B`` is lower triangular with diagonal ``alpha_k = -lambda^2 k (k - n -+ 1)``;
    with ``1 / alpha_k = -mu / (k (k - n -+ 1))`` the inverse has entries
    polynomial in mu.  On normalised inputs this equals ``-obstruction / mu``.
    """
    n = kind.n
    r1, r2 = indicial_roots(kind)
    K = r1 - r2
    if f_local is not None:
        expect = RationalMap.z() ** (-n if isinstance(kind, Pole) else n)
        if f_local != expect:
            raise NotNormalized(f"f is not {expect} in the local coordinate")
    E = [as_crat(c) for c in E_coeffs]
    if len(E) < K - 1:
        raise NotNormalized(f"need E_0..E_{K - 2}, got {len(E)} coefficients")
    shift = 1 if isinstance(kind, Pole) else -1  # alpha_k = -lambda^2 k (k - n + shift)
    ks = list(range(2, K))
    size = len(ks)
    # forward substitution for x = B^{-1} E_vec, E_vec = (E_0 .. E_{size-1})
    x: list[MuPolynomial] = []
    for i, k in enumerate(ks):
        acc = MuPolynomial.const(E[i])
        for j in range(i):
            d = k - ks[j]
            if d >= 2:
                acc = acc - x[j] * E[d - 2]
        inv_alpha = MuPolynomial.mu(CRat(Fraction(-1, k * (k - n + shift))))
        x.append(acc * inv_alpha)
    # S_u P x: reverse then shift up by one
    rev = list(reversed(x))
    sp = rev[1:] + [MuPolynomial()]
    quad = MuPolynomial()
    for i in range(size):
        if E[i]:
            quad = quad + sp[i] * E[i]
    return MuPolynomial.const(E[K - 2]) - quad


# ----------------------------------------------------------------------
# numeric oracle
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class MonodromyResult:
    matrix: np.ndarray
    defect: float
    radius: float
    lam: complex


def monodromy_oracle(
    p: Potential,
    z0,
    lam: complex,
    radius: float | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    min_steps: int = 256,
) -> MonodromyResult:
    """Monodromy of ``(y, rho y')`` once around a circle centred at ``z0``."""
    c = complex(z0)
    others = [s for s in _all_ode_singularities(p) if abs(s - c) > 1e-12]
    nearest = min((abs(s - c) for s in others), default=2.0)
    if radius is None:
        radius = 0.5 * nearest
    elif radius >= nearest:
        raise SingularityOnPath(f"circle of radius {radius} meets another singularity")
    rho = float(radius)
    mu = complex(lam) ** -2
    fn = p.f.numeric()
    dfn = derivative(p.f).numeric()
    En = p.E.numeric()

    def rhs(theta, y):
        e = np.exp(1j * theta)
        z = c + rho * e
        fz = fn(z)
        logd = dfn(z) / fz
        Y = y.reshape(2, 2)
        out = np.empty_like(Y)
        out[0] = 1j * e * Y[1]
        out[1] = 1j * rho * e * (rho * mu * En(z) * Y[0] + logd * Y[1])
        return out.reshape(-1)

    y0 = np.eye(2, dtype=complex).reshape(-1)
    sol = solve_ivp(
        rhs, (0.0, 2 * math.pi), y0, method="DOP853", rtol=rtol, atol=atol, max_step=2 * math.pi / min_steps
    )
    if not sol.success:
        raise StepSizeUnderflow(sol.message)
    M = sol.y[:, -1].reshape(2, 2)
    return MonodromyResult(M, float(np.max(np.abs(M - np.eye(2)))), rho, complex(lam))


# ----------------------------------------------------------------------
# classification
# ----------------------------------------------------------------------
def order_condition(kind, m: int) -> tuple[bool, int | None]:
    """Smoothness order condition; returns ``(holds, witness r)``."""
    n = kind.n
    period = 2 * m + 4
    if isinstance(kind, Pole):
        if n == 2:
            return True, None
        for r in range(1, n // period + 2):
            if n in (r * period, r * period + 2):
                return True, r
        return False, None
    for r in range(1, n // period + 2):
        if n in (r * period, r * period - 2):
            return True, r
    return False, None


def branch_pattern(kind, m: int) -> int | None:
    """Odd ``k`` with ``n = k(m+2) -+ 1`` (zero / pole), the non-integrable pattern; else None."""
    n = kind.n
    target = n + 1 if isinstance(kind, Zero) else n - 1
    if target % (m + 2):
        return None
    k = target // (m + 2)
    return k if k > 0 and k % 2 == 1 else None


@dataclass(frozen=True)
class SingularityVerdict:
    z0: object
    n: int
    m: int
    integrable: bool
    smooth: bool
    branch: bool
    witness_r: int | None
    method: str = "exact"
    obstruction: str = "0"

    def to_dict(self) -> dict:
        return {
            "z0": str(self.z0),
            "n": self.n,
            "m": self.m,
            "integrable": self.integrable,
            "smooth": self.smooth,
            "branch": self.branch,
            "witness_r": self.witness_r,
            "method": self.method,
            "obstruction": self.obstruction,
        }


MONODROMY_LAMBDAS = (1.0 + 0j, 1j, complex(np.exp(1j * np.pi / 5)))


def classify_singularity(p: Potential, z0, monodromy_tol: float = 1e-6) -> SingularityVerdict:
    if isinstance(z0, SingularPoint):
        sp = z0
    else:
        z0 = as_crat(z0)
        n = order_at(p.f, z0)
        m = 10**9 if p.E.is_zero() else order_at(p.E, z0)
        sp = SingularPoint(complex(z0), z0, n, m)
    n, m = sp.n, sp.m
    if n == 0:
        return SingularityVerdict(sp.location, 0, m, True, True, False, None, "regular")
    kind = Pole(-n) if n < 0 else Zero(n)
    branch = n > 0 and m >= n
    method, obstruction = "exact", "0"
    if branch:
        integrable = True  # xi is holomorphic there
        method = "holomorphic"
    elif sp.exact is not None:
        rep = frobenius_obstruction(p, sp.exact)
        integrable = rep.integrable
        obstruction = str(rep.obstruction)
    elif branch_pattern(kind, m) is not None:
        integrable = False
        method = "order-pattern"
    else:
        defects = [monodromy_oracle(p, sp.approx, lam).defect for lam in MONODROMY_LAMBDAS]
        integrable = max(defects) < monodromy_tol
        method = "monodromy"
        obstruction = f"defect {max(defects):.3g}"
    holds, r = order_condition(kind, m)
    smooth = integrable and not branch and holds
    return SingularityVerdict(sp.location, n, m, integrable, smooth, branch, r, method, obstruction)


def classify_all(p: Potential) -> list[SingularityVerdict]:
    return [classify_singularity(p, sp) for sp in singular_points(p)]
