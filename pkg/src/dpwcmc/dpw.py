"""Numerical DPW pipeline: holomorphic frame, Iwasawa splitting, Sym-Bobenko.

The holomorphic frame ``g_- = sum_k g_k lambda^-k`` solves ``g_k' = g_{k-1} Q``
with ``Q = [[0, f], [E/f, 0]]``.  Because of the twisting only one entry per
row is nonzero in each ``g_k``, so the hierarchy is two scalar chains

    u_k' = u_{k-1} * (f, E/f, f, ...)      (row 1; u_0 = 1)
    v_k' = v_{k-1} * (E/f, f, E/f, ...)    (row 2; v_0 = 1)

integrated along piecewise paths (segments and detour arcs) for a whole batch
of points at once.  The Iwasawa factor ``g_+`` comes from a Bauer type
block-Toeplitz Cholesky factorisation of ``adj(g) adj(g)^H = g_+ g_+^H``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .analysis import Potential
from .loopcore import (
    DEFAULT_N,
    SIGMA3,
    SIGMA_PLUS,
    MatrixLoop,
    roots_of_unity,
)
from .ratfun import roots

__all__ = [
    "Line",
    "Arc",
    "Obstacle",
    "HolomorphicFrame",
    "UnitaryFrame",
    "ImmersionPoint",
    "IwasawaBatch",
    "PathTooClose",
    "TruncationWarning",
    "FactorizationDiverged",
    "NotUnimodular",
    "StencilDegenerate",
    "obstacles",
    "default_path",
    "integrate_gminus",
    "integrate_batch",
    "check_path_independence",
    "iwasawa",
    "iwasawa_batch",
    "sym_bobenko",
    "sym_bobenko_batch",
    "J",
    "J_inv",
    "derivative_checks",
    "hopf_consistency",
    "frames_on_stencil",
]


class PathTooClose(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


class FactorizationDiverged(ArithmeticError):
    pass


class NotUnimodular(ValueError):
    pass


class StencilDegenerate(ValueError):
    pass


# ----------------------------------------------------------------------
# paths
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Line:
    a: complex
    b: complex


@dataclass(frozen=True)
class Arc:
    c: complex
    rho: float
    th0: float
    th1: float

    @property
    def start(self) -> complex:
        return self.c + self.rho * np.exp(1j * self.th0)

    @property
    def end(self) -> complex:
        return self.c + self.rho * np.exp(1j * self.th1)


@dataclass(frozen=True)
class Obstacle:
    """A point where ``f`` or ``E/f`` has a pole, with its detour radius."""

    center: complex
    radius: float
    margin: float


def _endpoint(piece) -> complex:
    return piece.b if isinstance(piece, Line) else piece.end


def obstacles(p: Potential, margin: float = 1e-3) -> list[Obstacle]:
    """Poles of ``f`` and of ``E/f`` with detour radius half the distance to the nearest other point or 0."""
    pts = [r.approx for r in roots(p.f.den)]
    if not p.E.is_zero():
        pts += [r.approx for r in roots((p.E / p.f).den) if not any(abs(r.approx - q) < 1e-12 for q in pts)]
    if p.domain == "disk":
        pts = [c for c in pts if abs(c) < 1 + 1e-12]
    out = []
    for c in pts:
        others = [abs(c - q) for q in pts if q is not c and abs(c - q) > 1e-12]
        near = min(others + [abs(c)])
        out.append(Obstacle(complex(c), 0.5 * near, margin))
    out.sort(key=lambda o: (o.center.real, o.center.imag))
    return out


def default_path(z: complex, obs: list[Obstacle], detour: str = "short") -> list:
    """Radial segment from 0 to ``z`` with arcs around every obstacle it meets.

    ``detour`` is ``short``, ``ccw`` or ``cw``.  A point inside a detour
    circle is reached by an arc followed by an inward radial segment.
    """
    z = complex(z)
    for o in obs:
        if abs(z - o.center) < o.margin:
            raise PathTooClose(f"z = {z} lies within {o.margin:g} of the singular point {o.center}")
    pieces: list = []
    cur = 0j
    for _ in range(len(obs) + 1):
        d = z - cur
        length = abs(d)
        if length == 0:
            break
        u = d / length
        hit = None
        for o in obs:
            rel = o.center - cur
            s_proj = (rel * np.conj(u)).real
            perp = abs(rel - s_proj * u)
            if perp >= o.radius:
                continue
            half = math.sqrt(o.radius**2 - perp**2)
            s_in = s_proj - half
            if s_in < -1e-12 or s_in > length:
                continue
            if hit is None or s_in < hit[0]:
                hit = (s_in, o, s_proj + half)
        if hit is None:
            pieces.append(Line(cur, z))
            cur = z
            break
        s_in, o, s_out = hit
        entry = cur + s_in * u
        if s_in > 0:
            pieces.append(Line(cur, entry))
        th0 = float(np.angle(entry - o.center))
        inside = abs(z - o.center) < o.radius
        target = z if inside else cur + s_out * u
        th1 = float(np.angle(target - o.center))
        dth = (th1 - th0 + math.pi) % (2 * math.pi) - math.pi
        if detour == "ccw" and dth < 0:
            dth += 2 * math.pi
        elif detour == "cw" and dth > 0:
            dth -= 2 * math.pi
        arc = Arc(o.center, o.radius, th0, th0 + dth)
        pieces.append(arc)
        cur = arc.end
        if inside:
            pieces.append(Line(cur, z))
            cur = z
            break
    if not pieces:
        pieces.append(Line(0j, z))
    return pieces


# ----------------------------------------------------------------------
# holomorphic frame
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class HolomorphicFrame:
    z: complex
    gminus: MatrixLoop


def _piece_arrays(paths: list[list]) -> list[dict]:
    """Per piece index, vectorised parameters of that piece across all paths (padded)."""
    count = max(len(pp) for pp in paths)
    out = []
    for j in range(count):
        kind = np.zeros(len(paths), int)
        a = np.zeros(len(paths), complex)
        b = np.zeros(len(paths), complex)
        c = np.zeros(len(paths), complex)
        rho = np.zeros(len(paths))
        th0 = np.zeros(len(paths))
        th1 = np.zeros(len(paths))
        for i, pp in enumerate(paths):
            if j < len(pp):
                piece = pp[j]
            else:
                end = _endpoint(pp[-1])
                piece = Line(end, end)
            if isinstance(piece, Line):
                a[i], b[i] = piece.a, piece.b
            else:
                kind[i] = 1
                c[i], rho[i], th0[i], th1[i] = piece.c, piece.rho, piece.th0, piece.th1
        out.append(dict(kind=kind, a=a, b=b, c=c, rho=rho, th0=th0, th1=th1))
    return out


def _piece_eval(pc: dict, s: float):
    th = pc["th0"] + (pc["th1"] - pc["th0"]) * s
    e = np.exp(1j * th)
    z_arc = pc["c"] + pc["rho"] * e
    dz_arc = 1j * pc["rho"] * e * (pc["th1"] - pc["th0"])
    z_line = pc["a"] + (pc["b"] - pc["a"]) * s
    dz_line = pc["b"] - pc["a"]
    arc = pc["kind"] == 1
    return np.where(arc, z_arc, z_line), np.where(arc, dz_arc, dz_line)


def _integrate_chunk(fn, gn, paths, N, rtol, atol, blowup=np.inf):
    P = len(paths)
    state = np.zeros((2, N, P), complex)  # u_1..u_N, v_1..v_N
    one = np.ones(P, complex)
    odd = (np.arange(1, N + 1) % 2 == 1)[:, None]
    for pc in _piece_arrays(paths):

        def rhs(s, y, pc=pc):
            Y = y.reshape(2, N, P)
            z, dz = _piece_eval(pc, s)
            fz = fn(z) * dz
            gz = gn(z) * dz
            out = np.empty_like(Y)
            prev_u = np.vstack([one[None], Y[0, :-1]])
            prev_v = np.vstack([one[None], Y[1, :-1]])
            out[0] = prev_u * np.where(odd, fz, gz)
            out[1] = prev_v * np.where(odd, gz, fz)
            # freeze points whose hierarchy has blown up; they are dropped later
            # and would otherwise dictate the step size for the whole chunk
            alive = np.max(np.abs(Y), axis=(0, 1)) < blowup
            out *= alive
            return out.reshape(-1)

        if np.all(pc["kind"] == 0) and np.all(pc["a"] == pc["b"]):
            continue
        sol = solve_ivp(rhs, (0.0, 1.0), state.reshape(-1), method="DOP853", rtol=rtol, atol=atol, t_eval=[1.0])
        if not sol.success:
            raise ArithmeticError(f"hierarchy integration failed: {sol.message}")
        state = sol.y[:, -1].reshape(2, N, P)
    dead = np.max(np.abs(state), axis=(0, 1)) >= blowup
    state[:, :, dead] = np.nan
    coeffs = np.zeros((P, 2 * N + 1, 2, 2), complex)
    coeffs[:, N] = np.eye(2)
    for k in range(1, N + 1):
        if k % 2:
            coeffs[:, N - k, 0, 1] = state[0, k - 1]
            coeffs[:, N - k, 1, 0] = state[1, k - 1]
        else:
            coeffs[:, N - k, 0, 0] = state[0, k - 1]
            coeffs[:, N - k, 1, 1] = state[1, k - 1]
    return coeffs


def integrate_batch(
    p: Potential,
    zs,
    paths: list | None = None,
    N: int = DEFAULT_N,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    chunk: int = 64,
    jobs: int = 1,
    margin: float = 1e-3,
    warn_tail: float = 1e-6,
    blowup: float = np.inf,
) -> MatrixLoop:
    """``g_-`` at every point of ``zs`` (1-d), as a batched :class:`MatrixLoop`.

    Points whose coefficients exceed ``blowup`` in modulus stop being
    integrated and come back as nan loops.
    """
    zs = np.asarray(zs, complex).reshape(-1)
    if paths is None:
        obs = obstacles(p, margin)
        paths = [default_path(z, obs) for z in zs]
    fn = p.f.numeric()
    gn = (p.E / p.f).numeric() if not p.E.is_zero() else (lambda z: np.zeros_like(z))
    # group paths by piece count so padding stays small, then by closeness
    # to the nearest obstacle so stiff paths share a chunk
    obs = obstacles(p, margin)
    near = [min((abs(z - o.center) for o in obs), default=np.inf) for z in zs]
    order = sorted(range(len(paths)), key=lambda i: (len(paths[i]), near[i]))
    chunks = [order[i : i + chunk] for i in range(0, len(order), chunk)]

    def run(idx):
        return idx, _integrate_chunk(fn, gn, [paths[i] for i in idx], N, rtol, atol, blowup)

    coeffs = np.zeros((len(zs), 2 * N + 1, 2, 2), complex)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    for idx, c in results:
        coeffs[idx] = c
    loop = MatrixLoop(coeffs, True)
    if warn_tail is not None and len(zs):
        tail = loop.tail_mass(2)
        if np.nanmax(tail, initial=0.0) > warn_tail:
            warnings.warn(f"top-band mass {np.max(tail):.2e} exceeds {warn_tail:g}", TruncationWarning, stacklevel=2)
    return loop


def integrate_gminus(
    p: Potential, z: complex, path: list | None = None, N: int = DEFAULT_N, rtol: float = 1e-12, atol: float = 1e-14
) -> HolomorphicFrame:
    loop = integrate_batch(p, [z], None if path is None else [path], N, rtol, atol)
    return HolomorphicFrame(complex(z), loop[0])


def check_path_independence(p: Potential, z: complex, path1: list, path2: list, N: int = DEFAULT_N) -> float:
    loop = integrate_batch(p, [z, z], [path1, path2], N, warn_tail=None)
    return float(np.max(np.abs(loop.coeffs[0] - loop.coeffs[1])))


# ----------------------------------------------------------------------
# Iwasawa splitting
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class UnitaryFrame:
    z: complex
    F: MatrixLoop
    gplus: MatrixLoop
    residual: float = 0.0
    unitarity: float = 0.0


@dataclass(frozen=True)
class IwasawaBatch:
    F: MatrixLoop
    gplus: MatrixLoop
    ok: np.ndarray  # converged and within tolerance
    residual: np.ndarray  # sup |g - F g_+^-1| / max(1, sup |g|) over sampled lambda
    unitarity: np.ndarray  # sup |F F^H - I| over sampled lambda
    blocks: int


def _adjugate(c: np.ndarray) -> np.ndarray:
    out = np.empty_like(c)
    out[..., 0, 0] = c[..., 1, 1]
    out[..., 1, 1] = c[..., 0, 0]
    out[..., 0, 1] = -c[..., 0, 1]
    out[..., 1, 0] = -c[..., 1, 0]
    return out


def _bauer_factor(A: np.ndarray, N: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Last block row of the Cholesky factor of the (m+1)-block Toeplitz matrix ``T_ab = W_{a-b}``.

    ``A`` holds the coefficients of ``g^-1`` at exponents ``-N..0`` (shape
    (B, N+1, 2, 2), index ``k`` for ``lambda^-k``).  ``T = M M^H`` with ``M``
    block Toeplitz in ``A``, so the factor is read from a QR of ``M^H``;
    this keeps the error at ``eps cond(g)`` instead of ``eps cond(g)^2``.
    Returns the factor coefficients ``P_0..P_N`` and a success mask.
    """
    B = A.shape[0]
    rows, cols = 2 * (m + 1), 2 * (m + N + 1)
    M = np.zeros((B, rows, cols), complex)
    for a in range(m + 1):
        for k in range(N + 1):
            j = a + k
            M[:, 2 * a : 2 * a + 2, 2 * j : 2 * j + 2] = A[:, k]
    R = np.linalg.qr(np.conj(np.swapaxes(M, -1, -2)), mode="r")
    d = np.diagonal(R, axis1=-2, axis2=-1)
    ad = np.abs(d)
    ok = np.all(ad > 1e-14 * np.max(ad, axis=-1, keepdims=True), axis=-1) & np.all(np.isfinite(d), axis=-1)
    phase = np.where(ad > 0, np.conj(d) / np.where(ad > 0, ad, 1), 1)
    # L = (D R)^H with D making the diagonal positive; only the last block row is needed
    last = R[:, :, 2 * m : 2 * m + 2] * phase[:, :, None]
    L_last = np.conj(np.swapaxes(last, -1, -2))  # (B, 2, rows)
    Pk = np.zeros((B, N + 1, 2, 2), complex)
    for k in range(min(N, m) + 1):
        c = 2 * (m - k)
        Pk[:, k] = L_last[:, :, c : c + 2]
    return Pk, ok


def _bauer_chunked(A: np.ndarray, N: int, m: int, budget: float = 2e8):
    size = 2 * (m + N + 1)
    step = max(1, int(budget // (16 * size * size)))
    Ps, oks = [], []
    for s in range(0, A.shape[0], step):
        P, ok = _bauer_factor(A[s : s + step], N, m)
        Ps.append(P)
        oks.append(ok)
    if not Ps:
        return np.zeros((0, N + 1, 2, 2), complex), np.zeros(0, bool)
    return np.concatenate(Ps), np.concatenate(oks)


def iwasawa_batch(
    g: MatrixLoop,
    tol: float = 1e-9,
    max_blocks: int = 512,
    check_tol: float = 1e-7,
) -> IwasawaBatch:
    """Split ``g = F g_+^-1`` for a batch of MinusStar loops."""
    N = g.N
    c = g.coeffs
    single = c.ndim == 3
    if single:
        c = c[None]
    finite = np.all(np.isfinite(c), axis=(1, 2, 3))
    if not finite.all():
        c = c.copy()
        c[~finite] = MatrixLoop.identity(N).coeffs
    # g^-1 = adj(g); exponents -N..0, reversed so index k is lambda^-k
    A = _adjugate(c)[:, N::-1]
    m = max(2 * N, 8)
    prev, ok = _bauer_chunked(A, N, m)
    ok &= finite
    converged = np.zeros(c.shape[0], bool)
    active = ok.copy()
    last_drift = np.full(c.shape[0], np.inf)
    while active.any() and 2 * m <= max_blocks:
        m *= 2
        idx = np.flatnonzero(active)
        cur, ok2 = _bauer_chunked(A[idx], N, m)
        scale = np.maximum(np.max(np.abs(cur), axis=(1, 2, 3)), 1.0)
        drift = np.max(np.abs(cur - prev[idx]), axis=(1, 2, 3)) / scale
        prev[idx] = cur
        ok[idx] = ok2
        converged[idx] = ok2 & (drift < tol)
        # the finite sections converge geometrically; a drift that stops
        # shrinking means round-off has taken over
        stalled = drift > 0.5 * last_drift[idx]
        last_drift[idx] = drift
        active[idx] = ok2 & ~converged[idx] & ~stalled
    P = prev
    # twisting: P_0 diagonal with positive entries a, 1/a
    P[:, 0, 0, 1] = 0
    P[:, 0, 1, 0] = 0
    pc = np.zeros(c.shape[:1] + (2 * N + 1, 2, 2), complex)
    pc[:, N:] = P
    gplus = MatrixLoop(pc, True).project_twisted()
    F = MatrixLoop(c, True).multiply(gplus)
    lam = roots_of_unity(32)
    Fv = F.sample(lam)
    gv = MatrixLoop(c, True).sample(lam)
    Pv = gplus.sample(lam)
    Pinv = _adjugate(Pv) / np.linalg.det(Pv)[..., None, None]
    # relative to max(1, sup |g|): near ends g is huge while F stays bounded
    gsize = np.maximum(np.max(np.abs(gv), axis=(-3, -2, -1)), 1.0)
    residual = np.max(np.abs(gv - Fv @ Pinv), axis=(-3, -2, -1)) / gsize
    unit = np.max(np.abs(Fv @ np.conj(np.swapaxes(Fv, -1, -2)) - np.eye(2)), axis=(-3, -2, -1))
    good = converged & ok & finite & (residual <= check_tol) & (unit <= check_tol)
    if single:
        F, gplus = F[0], gplus[0]
    return IwasawaBatch(F, gplus, good, residual, unit, m)


def iwasawa(g, tol: float = 1e-9, max_blocks: int = 512, check_tol: float = 1e-7) -> UnitaryFrame:
    loop = g.gminus if isinstance(g, HolomorphicFrame) else g
    z = g.z if isinstance(g, HolomorphicFrame) else 0j
    if loop.det_defect() > 1e-8:
        raise NotUnimodular(f"det defect {loop.det_defect():.3g}")
    res = iwasawa_batch(loop, tol, max_blocks, check_tol)
    if not res.ok.all():
        raise FactorizationDiverged(
            f"Bauer factorisation failed (residual {res.residual.max():.3g}, unitarity {res.unitarity.max():.3g})"
        )
    return UnitaryFrame(z, res.F, res.gplus, float(res.residual.max()), float(res.unitarity.max()))


# ----------------------------------------------------------------------
# Sym-Bobenko
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ImmersionPoint:
    position: np.ndarray
    normal: np.ndarray
    conformal_factor: float


def J(v) -> np.ndarray:
    """Spinor map R^3 -> su(2), ``J e_j = -(i/2) sigma_j`` (complex-linear on C^3)."""
    v = np.asarray(v)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    out = np.empty(v.shape[:-1] + (2, 2), complex)
    out[..., 0, 0] = -0.5j * z
    out[..., 1, 1] = 0.5j * z
    out[..., 0, 1] = -0.5j * (x - 1j * y)
    out[..., 1, 0] = -0.5j * (x + 1j * y)
    return out


def J_inv(X: np.ndarray, real: bool = True) -> np.ndarray:
    x = 1j * (X[..., 0, 1] + X[..., 1, 0])
    y = X[..., 1, 0] - X[..., 0, 1]
    z = 2j * X[..., 0, 0]
    v = np.stack([x, y, z], axis=-1)
    return v.real if real else v


def sym_bobenko_batch(F: MatrixLoop, gplus: MatrixLoop, f_values, theta: float = 0.0):
    """Positions, unit normals and conformal factors ``e^{u/2}`` at ``lambda = exp(i theta)``.

    With ``H = -1/2``: ``X = F' F^-1 + (i/2) F sigma3 F^-1`` where ``'`` is the
    theta derivative; the normal is ``J^-1((i/2) F sigma3 F^-1)``, which is the
    orientation of ``Phi_x x Phi_y`` (so ``H = (1/2) tr(II I^-1) = -1/2``), and
    ``e^{u/2} = 4 |f| / a^2`` with ``a`` the (1,1) entry of ``g_+`` at lambda = 0.
    """
    lam = np.exp(1j * theta)
    Fv = F.sample(lam)
    dF = F.theta_derivative().sample(lam)
    Finv = _adjugate(Fv) / (Fv[..., 0, 0] * Fv[..., 1, 1] - Fv[..., 0, 1] * Fv[..., 1, 0])[..., None, None]
    S = Fv @ SIGMA3 @ Finv
    X = dF @ Finv + 0.5j * S
    pos = J_inv(X)
    nrm = J_inv(0.5j * S)
    nrm = nrm / np.linalg.norm(nrm, axis=-1, keepdims=True)
    a = gplus.coeff(0)[..., 0, 0].real
    conf = 4.0 * np.abs(np.asarray(f_values)) / a**2
    return pos, nrm, conf


def sym_bobenko(u: UnitaryFrame, theta: float = 0.0, f_value: complex | None = None) -> ImmersionPoint:
    fv = 0.0 if f_value is None else f_value
    pos, nrm, conf = sym_bobenko_batch(u.F, u.gplus, fv, theta)
    return ImmersionPoint(pos, nrm, float(conf))


# ----------------------------------------------------------------------
# local diagnostics
# ----------------------------------------------------------------------
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def frames_on_stencil(p: Potential, z: complex, h: float, N: int = DEFAULT_N, **kw):
    """g_-, F, g_+ on the 5x5 grid ``z + h (i + 1j j)``, i, j in -2..2 (axis 0: x, axis 1: y)."""
    off = np.arange(-2, 3)
    zs = (z + h * (off[:, None] + 1j * off[None, :])).reshape(-1)
    g = integrate_batch(p, zs, N=N, warn_tail=None, **kw)
    res = iwasawa_batch(g)
    if not res.ok.all():
        raise StencilDegenerate("Iwasawa factorisation failed on the stencil")
    return zs.reshape(5, 5), g, res


def _fd(values: np.ndarray, h: float):
    """4th-order first and second derivatives at the centre of a 5x5 stencil (leading axes)."""
    vx = np.tensordot(_D1, values[:, 2], axes=(0, 0)) / h
    vy = np.tensordot(_D1, values[2, :], axes=(0, 0)) / h
    vxx = np.tensordot(_D2, values[:, 2], axes=(0, 0)) / h**2
    vyy = np.tensordot(_D2, values[2, :], axes=(0, 0)) / h**2
    vxy = np.tensordot(_D1, np.tensordot(_D1, values, axes=(0, 1)), axes=(0, 0)) / h**2
    return vx, vy, vxx, vyy, vxy


def derivative_checks(p: Potential, z: complex, h: float = 1e-3, N: int = DEFAULT_N, theta: float = 0.0) -> dict:
    """Band structure of ``F^-1 dF``, the ``a^-2 f`` versus metric relation, and the reality of ``a^-2 f``."""
    zs, g, res = frames_on_stencil(p, z, h, N)
    F = res.F
    L = 64
    lam = roots_of_unity(L)
    Fv = F.sample(lam).reshape(5, 5, L, 2, 2)
    Fx = np.tensordot(_D1, Fv[:, 2], axes=(0, 0)) / h
    Fy = np.tensordot(_D1, Fv[2, :], axes=(0, 0)) / h
    F0 = Fv[2, 2]
    F0inv = np.conj(np.swapaxes(F0, -1, -2))
    band = 0.0
    for D in (Fx, Fy):
        A = F0inv @ D
        spec = np.fft.fft(A, axis=0) / L
        k = np.fft.fftfreq(L, 1.0 / L).astype(int)
        inside = np.abs(k) <= 1
        mass_in = np.sqrt(np.sum(np.abs(spec[inside]) ** 2))
        mass_out = np.sqrt(np.sum(np.abs(spec[~inside]) ** 2))
        band = max(band, mass_out / max(mass_in, 1e-300))
    pos, nrm, conf = sym_bobenko_batch(F, res.gplus, p.f.evaluate(zs.reshape(-1)), theta)
    pos = pos.reshape(5, 5, 3)
    px, py, _, _, _ = _fd(pos, h)
    metric = 0.5 * (np.linalg.norm(px) + np.linalg.norm(py))
    a = res.gplus.coeff(0)[12, 0, 0].real
    fz = complex(p.f.evaluate(z))
    w2f = abs(fz) / a**2
    metric_defect = abs(w2f - 0.25 * metric) / max(w2f, 1e-300)
    # reality: J(Phi_z) = c * (-(i/2)) lambda^-1 F sigma_+ F^-1, compare c with a^-2 f
    lam0 = np.exp(1j * theta)
    Fc = F[12].sample(lam0)
    B = -0.5j / lam0 * (Fc @ SIGMA_PLUS @ np.conj(Fc.T))
    phiz = 0.5 * (px - 1j * py)
    Jz = J(phiz)
    cfac = np.sum(Jz * np.conj(B)) / np.sum(B * np.conj(B))
    target = fz / a**2
    reality = abs((target * np.conj(cfac)).imag) / max(abs(target) * abs(cfac), 1e-300)
    proj_resid = np.linalg.norm(Jz - cfac * B) / max(np.linalg.norm(Jz), 1e-300)
    return {
        "band_defect": float(band),
        "metric_defect": float(metric_defect),
        "reality_defect": float(reality),
        "nilpotent_residual": float(proj_resid),
        "a": float(a),
        "conformal_factor": float(metric),
    }


def _hopf_at(p: Potential, z: complex, h: float, N: int, theta: float) -> complex:
    zs, g, res = frames_on_stencil(p, z, h, N)
    pos, nrm, _ = sym_bobenko_batch(res.F, res.gplus, p.f.evaluate(zs.reshape(-1)), theta)
    pos = pos.reshape(5, 5, 3)
    _, _, pxx, pyy, pxy = _fd(pos, h)
    pzz = 0.25 * (pxx - pyy - 2j * pxy)
    return complex(np.dot(pzz, nrm.reshape(5, 5, 3)[2, 2]))


def hopf_consistency(p: Potential, points, h: float = 1e-2, N: int = DEFAULT_N, theta: float = 0.0) -> dict:
    """``Q = <Phi_zz, N>`` at each point; relative spread of ``Q / E`` over points with ``E != 0``."""
    Qs = np.array([_hopf_at(p, complex(z), h, N, theta) for z in points])
    Es = p.E.evaluate(np.asarray(points, complex))
    live = np.abs(Es) > 1e-12
    ratios = Qs[live] / Es[live]
    if len(ratios) == 0:
        raise StencilDegenerate("no sample point with E != 0")
    ref = np.median(ratios.real) + 1j * np.median(ratios.imag)
    dev = float(np.max(np.abs(ratios - ref)) / abs(ref))
    return {"Q": Qs, "ratio": ref, "deviation": dev, "umbilic_Q": np.abs(Qs[~live])}
