"""Dressing of DPW potentials by the one-parameter flows of D, U and V.

On the level of the coefficient ``f`` the three basic flows act by

* ``T_D(t) f = exp(2t) f``
* ``T_U(t) f = f / (1 + t b1)**2``
* ``T_V(t) f = f * (1 + t c1)**2``

with ``b1 = int_0 f`` and ``c1 = int_0 E/f`` (the lambda^-1 entries of
``g_-``).  ``E`` never changes.  :func:`birkhoff_split_numeric` redoes the
same computation on the loop level and serves as an independent check.
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass, replace
import numpy as np

from .analysis import Pole, Potential
from .loopcore import MatrixLoop, roots_of_unity
from .ratfun import CRat, RationalMap, antiderivative, as_crat, order_at, parse_crat

__all__ = [
    "DressingState",
    "DressingStep",
    "DressAwayPlan",
    "ZeroOfF",
    "PoleOfF",
    "CaseUndefined",
    "Blocked",
    "OutsideBigCell",
    "DegenerateDressing",
    "make_state",
    "t_d",
    "t_u",
    "t_v",
    "apply_step",
    "apply_plan",
    "parse_step",
    "parse_plan",
    "predict_orders",
    "dress_away_plan",
    "dress_away_inequality",
    "create_singularity_plan",
    "birkhoff_split_numeric",
]


class CaseUndefined(ValueError):
    pass


class Blocked(ValueError):
    def __init__(self, z1, reason: str):
        super().__init__(f"blocked at z = {z1}: {reason}")
        self.z1 = z1
        self.reason = reason


class OutsideBigCell(ArithmeticError):
    pass


class DegenerateDressing(ValueError):
    pass


@dataclass(frozen=True)
class ZeroOfF:
    n: int


@dataclass(frozen=True)
class PoleOfF:
    n: int


# ----------------------------------------------------------------------
# state and closed-form steps
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class DressingState:
    potential: Potential
    b1: RationalMap
    c1: RationalMap

    @property
    def f(self) -> RationalMap:
        return self.potential.f

    @property
    def E(self) -> RationalMap:
        return self.potential.E


def make_state(p: Potential) -> DressingState:
    """Attach ``b1 = int_0 f`` and ``c1 = int_0 E/f``; raises LogarithmicObstruction if either has a log."""
    b1 = antiderivative(p.f, 0)
    c1 = antiderivative(p.E / p.f, 0) if not p.E.is_zero() else RationalMap()
    return DressingState(p, b1, c1)


def _with_f(s: DressingState, f: RationalMap) -> Potential:
    return replace(s.potential, f=f)


def t_d_factor(s: DressingState, k) -> DressingState:
    """``T_D`` with the factor ``k = exp(2t)`` given exactly."""
    k = as_crat(k)
    if not k:
        raise DegenerateDressing("scaling factor is zero")
    return DressingState(_with_f(s, s.f * k), s.b1 * k, s.c1 * k.inverse())


def t_d(s: DressingState, t) -> DressingState:
    if t == 0:
        return s
    k = cmath.exp(2 * complex(t))
    return t_d_factor(s, CRat.from_complex(k, 10**12))


def t_u(s: DressingState, t) -> DressingState:
    t = as_crat(t)
    if not t:
        return s
    den = 1 + s.b1 * t
    if den.is_zero():
        raise DegenerateDressing("1 + t b1 vanishes identically")
    f = s.f / (den * den)
    b1 = s.b1 / den
    c1 = antiderivative(s.E / f, 0) if not s.E.is_zero() else RationalMap()
    return DressingState(_with_f(s, f), b1, c1)


def t_v(s: DressingState, t) -> DressingState:
    t = as_crat(t)
    if not t:
        return s
    fac = 1 + s.c1 * t
    if fac.is_zero():
        raise DegenerateDressing("1 + t c1 vanishes identically")
    f = s.f * fac * fac
    c1 = s.c1 / fac
    b1 = antiderivative(f, 0)
    return DressingState(_with_f(s, f), b1, c1)


# ----------------------------------------------------------------------
# steps and plans
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class DressingStep:
    """One basic flow; ``t`` is exact, or the step is critical at ``critical_at``."""

    generator: str
    t: CRat | None = None
    critical_at: CRat | None = None

    def __post_init__(self):
        if self.generator not in ("D", "U", "V"):
            raise ValueError(f"unknown generator {self.generator!r}")
        if (self.t is None) == (self.critical_at is None):
            raise ValueError("give exactly one of t or critical_at")

    def resolve(self, s: DressingState) -> CRat:
        if self.t is not None:
            return self.t
        z1 = self.critical_at
        if self.generator == "U":
            val = _value_at(s.b1, z1, "b1")
        elif self.generator == "V":
            val = _value_at(s.c1, z1, "c1")
        else:
            raise ValueError("D has no critical parameter")
        return -val.inverse()

    def __str__(self):
        if self.t is not None:
            return f"{self.generator} t={self.t}"
        return f"{self.generator} t=critical@{self.critical_at}"


def _value_at(r: RationalMap, z1, name: str) -> CRat:
    try:
        val = r(as_crat(z1))
    except ZeroDivisionError:
        raise Blocked(z1, f"{name} has a pole there") from None
    if not val:
        raise Blocked(z1, f"{name} vanishes there")
    return val


def apply_step(s: DressingState, step: DressingStep) -> DressingState:
    t = step.resolve(s)
    if step.generator == "D":
        return t_d(s, complex(t)) if step.t is not None else s
    return t_u(s, t) if step.generator == "U" else t_v(s, t)


def apply_plan(s: DressingState, steps) -> DressingState:
    for step in steps:
        s = apply_step(s, step)
    return s


_STEP_RE = re.compile(r"^\s*([DUV])\s+t\s*=\s*(.+?)\s*$")


def parse_step(text: str) -> DressingStep:
    """Parse ``"U t=-4"`` or ``"V t=critical@1/2"``."""
    m = _STEP_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse dressing step {text!r}")
    gen, arg = m.groups()
    if arg.startswith("critical@"):
        return DressingStep(gen, critical_at=parse_crat(arg[len("critical@") :]))
    return DressingStep(gen, t=parse_crat(arg))


def parse_plan(items) -> list[DressingStep]:
    if isinstance(items, str):
        items = [x for x in re.split(r"[;\n]", items) if x.strip()]
    return [parse_step(x) for x in items]


# ----------------------------------------------------------------------
# order bookkeeping
# ----------------------------------------------------------------------
def predict_orders(case, m: int, generator: str, t_regime: str = "Generic", allow_branch: bool = False) -> int:
    """New signed order of ``f`` at the point (positive: zero, negative: pole).

    ``t_regime`` is ``Generic``/``Small`` (t away from the critical value) or
    ``Critical`` (t = -1/beta_0 resp. -1/gamma_0).
    """
    if t_regime not in ("Generic", "Small", "Critical"):
        raise ValueError(f"unknown regime {t_regime!r}")
    crit = t_regime == "Critical"
    n = case.n
    if generator == "D":
        return n if isinstance(case, ZeroOfF) else -n
    if isinstance(case, ZeroOfF):
        if generator == "U":
            return -(n + 2) if crit else n
        if m >= n:
            if n > 0 and not allow_branch:
                raise CaseUndefined("V at a zero with m >= n: E/f holomorphic, a branch point")
            return 2 * m + 2 - n if crit else n
        return 2 * m + 2 - n
    if isinstance(case, PoleOfF):
        if generator == "U":
            if crit:
                raise CaseUndefined("b1 has a pole here; there is no critical U parameter")
            return n - 2
        return 2 * m + 2 + n if crit else -n
    raise TypeError(f"unknown case {case!r}")


@dataclass(frozen=True)
class DressAwayPlan:
    feasible: bool
    steps: tuple  # generator letters
    orders: tuple  # signed orders of f after each step, starting with the input
    witness_r: int | None = None
    blocking_step: int | None = None  # index into orders where E/f has a simple pole
    reason: str = ""


def dress_away_inequality(n: int, m: int) -> int | None:
    """Smallest r >= 1 satisfying the sufficient dress-away inequality, or None."""
    period = 2 * m + 4
    if n < 0:
        k = -n
        if k == 2:
            return 0
        for r in range(1, k // period + 2):
            if r * period - m <= k <= r * period + 2:
                return r
        return None
    for r in range(1, n // period + 2):
        if r * period - m - 2 <= n <= r * period:
            return r
    return None


def _simulate(n: int, m: int, limit: int = 1000):
    steps, orders = [], [n]
    cur = n
    for _ in range(limit):
        g = m - cur
        if g == -1:
            return steps, orders, len(orders) - 1
        if cur >= 0 and g >= 0:
            return steps, orders, None
        if cur < 0:
            cur = predict_orders(PoleOfF(-cur), m, "U")
            steps.append("U")
        else:
            cur = predict_orders(ZeroOfF(cur), m, "V")
            steps.append("V")
        orders.append(cur)
    raise RuntimeError("reduction did not terminate")


def dress_away_plan(n: int, m: int) -> DressAwayPlan:
    """Alternating U/V template reducing a signed order ``n`` of ``f`` to a holomorphic potential."""
    if n % 2:
        raise ValueError("orders of f are even")
    steps, orders, block = _simulate(n, m)
    r = dress_away_inequality(n, m)
    if r is not None:
        if block is not None:
            raise AssertionError(f"reduction for n={n}, m={m} meets a simple pole of E/f")
        return DressAwayPlan(True, tuple(steps), tuple(orders), r or None)
    reason = "E/f acquires a simple pole; potential not integrable" if block is not None else "inequality fails"
    return DressAwayPlan(False, tuple(steps), tuple(orders), None, block, reason)


def create_singularity_plan(s: DressingState, z1, target) -> tuple[list[DressingStep], DressingState]:
    """Concrete critical steps giving ``f`` a pole or zero of order ``2N`` at ``z1``."""
    z1 = as_crat(z1)
    order = target.n
    if order < 2 or order % 2:
        raise ValueError("target order must be even and >= 2")
    N = order // 2
    try:
        fz = s.f(z1)
    except ZeroDivisionError:
        raise Blocked(z1, "f has a pole there") from None
    if not fz:
        raise Blocked(z1, "f vanishes there")
    if s.E.is_zero() or not s.E(z1):
        raise Blocked(z1, "E vanishes there")
    want_pole = isinstance(target, (Pole, PoleOfF))
    gen = "U" if (want_pole == (N % 2 == 1)) else "V"
    steps: list[DressingStep] = []
    for _ in range(N):
        t = DressingStep(gen, critical_at=z1).resolve(s)
        step = DressingStep(gen, t=t)
        s = apply_step(s, step)
        steps.append(step)
        gen = "V" if gen == "U" else "U"
    got = order_at(s.f, z1)
    if got != (-order if want_pole else order):
        raise AssertionError(f"plan produced order {got} at {z1}")
    return steps, s


# ----------------------------------------------------------------------
# loop-level oracle
# ----------------------------------------------------------------------
def _series_inverse(x: np.ndarray) -> np.ndarray:
    """Inverse of ``sum_k x[k] mu^k`` (x[0] = I) as a power series of the same length."""
    y = np.zeros_like(x)
    y[0] = np.eye(2)
    for k in range(1, len(x)):
        acc = np.zeros((2, 2), complex)
        for j in range(1, k + 1):
            acc -= y[k - j] @ x[j]
        y[k] = acc
    return y


def birkhoff_split_numeric(
    h: MatrixLoop, g: MatrixLoop, M: int | None = None, cond_bound: float = 1e12, tol: float = 1e-8
) -> tuple[MatrixLoop, MatrixLoop]:
    """Split ``h g = g_hat_minus g_hat_plus`` with ``g_hat_minus`` in the MinusStar class.

    Finite-section block-Toeplitz solve for ``X = g_hat_minus^-1 = I + sum x_k lambda^-k``
    with the conditions that ``X h g`` has no negative powers.
    """
    N = g.N
    if h.N != N:
        raise ValueError("truncations differ")
    if M is None:
        M = 4 * N
    W = max(N, M)
    L = h.multiply(g).with_truncation(W + N).coeffs  # exponents -(W+N)..(W+N)
    off = W + N

    def Lc(j):
        return L[j + off] if abs(j) <= off else np.zeros((2, 2), complex)

    # x T = -[L_-1 ... L_-M],  T[k, j] = L_{j+k}, rows k = 1..M, cols j = -1..-M
    T = np.zeros((2 * M, 2 * M), complex)
    rhs = np.zeros((2, 2 * M), complex)
    for a in range(M):
        k = a + 1
        for b in range(M):
            j = -(b + 1)
            T[2 * a : 2 * a + 2, 2 * b : 2 * b + 2] = Lc(j + k)
    for b in range(M):
        rhs[:, 2 * b : 2 * b + 2] = -Lc(-(b + 1))
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > cond_bound:
        raise OutsideBigCell(f"Toeplitz system ill-conditioned (cond {cond:.3g})")
    x = np.linalg.solve(T.T, rhs.T).T
    X = np.zeros((M + 1, 2, 2), complex)
    X[0] = np.eye(2)
    for a in range(M):
        X[a + 1] = x[:, 2 * a : 2 * a + 2]
    Y = _series_inverse(X)
    minus = np.zeros((2 * N + 1, 2, 2), complex)
    for k in range(min(N, M) + 1):
        minus[N - k] = Y[k]
    plus = np.zeros((2 * N + 1, 2, 2), complex)
    for j in range(N + 1):
        acc = Lc(j).copy()
        for k in range(1, M + 1):
            acc += X[k] @ Lc(j + k)
        plus[N + j] = acc
    gm = MatrixLoop(minus, h.twisted and g.twisted)
    gp = MatrixLoop(plus, h.twisted and g.twisted)
    lam = roots_of_unity(32)
    resid = np.max(np.abs(h.multiply(g).sample(lam) - gm.sample(lam) @ gp.sample(lam)))
    if resid > tol:
        raise OutsideBigCell(f"splitting residual {resid:.3g} exceeds {tol:g}")
    return gm, gp
