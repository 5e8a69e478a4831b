"""Sampling domains, assembling CMC meshes, curvature diagnostics and export."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .analysis import Potential, classify_singularity, singular_points
from .dpw import integrate_batch, iwasawa_batch, obstacles, sym_bobenko_batch, PathTooClose
from .loopcore import DEFAULT_N, roots_of_unity
from .ratfun import roots

__all__ = [
    "Disk",
    "Rect",
    "Annulus",
    "Exclusion",
    "DomainGrid",
    "SurfaceMesh",
    "Frames",
    "EmptyGrid",
    "BoundaryVertex",
    "sample_domain",
    "compute_frames",
    "build_mesh",
    "build_family",
    "discrete_mean_curvature",
    "conformality_defect",
    "export",
    "write_obj",
    "write_ply",
    "read_obj",
    "fit_sphere",
    "fit_cylinder",
]


# hierarchy coefficients beyond this size mean cond(g_-) > 1e16: no usable frame
BLOWUP = 1e8
# empirical bound: |H_d error| <= NOISE_GAIN * eps * cond(g_-) / (conformal factor * step)^2
NOISE_GAIN = 500.0
# vertices whose predicted round-off in H_d exceeds this count as near an end
NOISE_FLAG = 1e-2


class EmptyGrid(ValueError):
    pass


class BoundaryVertex(ValueError):
    pass


@dataclass(frozen=True)
class Disk:
    radius: float
    center: complex = 0j


@dataclass(frozen=True)
class Rect:
    lower_left: complex
    upper_right: complex


@dataclass(frozen=True)
class Annulus:
    center: complex
    r_in: float
    r_out: float


@dataclass(frozen=True)
class Exclusion:
    center: complex
    radius: float
    kind: str  # "end" (smooth singular point) or "bad" (non-smooth or branch)


@dataclass(frozen=True)
class DomainGrid:
    kind: object
    resolution: tuple = (64, 64)
    excluded: tuple = ()
    umbilics: tuple = ()

    @property
    def step(self) -> float:
        nu, nv = self.resolution
        k = self.kind
        if isinstance(k, Disk):
            return 2 * k.radius / (max(nu, nv) - 1)
        if isinstance(k, Rect):
            d = k.upper_right - k.lower_left
            return max(d.real / (nu - 1), d.imag / (nv - 1))
        return max((k.r_out - k.r_in) / (nu - 1), 2 * math.pi * k.r_out / nv)

    def parameter_grid(self):
        """``(z, inside)`` arrays of shape ``(nu, nv)``; ``inside`` ignores exclusions."""
        nu, nv = self.resolution
        k = self.kind
        if isinstance(k, Disk):
            x = np.linspace(-k.radius, k.radius, nu)
            y = np.linspace(-k.radius, k.radius, nv)
            z = k.center + x[:, None] + 1j * y[None, :]
            inside = np.abs(z - k.center) <= k.radius * (1 + 1e-12)
        elif isinstance(k, Rect):
            x = np.linspace(k.lower_left.real, k.upper_right.real, nu)
            y = np.linspace(k.lower_left.imag, k.upper_right.imag, nv)
            z = x[:, None] + 1j * y[None, :]
            inside = np.ones(z.shape, bool)
        elif isinstance(k, Annulus):
            r = np.linspace(k.r_in, k.r_out, nu)
            phi = np.linspace(0, 2 * math.pi, nv, endpoint=False)
            z = k.center + r[:, None] * np.exp(1j * phi[None, :])
            inside = np.ones(z.shape, bool)
        else:
            raise TypeError(f"unknown domain kind {k!r}")
        return z, inside

    @property
    def periodic_v(self) -> bool:
        return isinstance(self.kind, Annulus)

    def mask(self):
        z, inside = self.parameter_grid()
        keep = inside.copy()
        for ex in self.excluded:
            keep &= np.abs(z - ex.center) >= ex.radius
        return z, keep


def sample_domain(grid: DomainGrid, p: Potential) -> DomainGrid:
    """Add exclusion disks around the singular points of ``p`` and record umbilics."""
    delta = max(1e-2, 2 * grid.step)
    excl = list(grid.excluded)
    for sp in singular_points(p):
        v = classify_singularity(p, sp)
        kind = "end" if v.smooth else "bad"
        excl.append(Exclusion(complex(sp.approx), delta, kind))
    umb = []
    if not p.E.is_zero():
        umb = [complex(r.approx) for r in roots(p.E.num)]
    out = replace(grid, excluded=tuple(excl), umbilics=tuple(umb))
    _, keep = out.mask()
    if not keep.any():
        raise EmptyGrid("no sample point survives the exclusions")
    return out


# ----------------------------------------------------------------------
# frames and meshes
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Frames:
    """Iwasawa data on the grid; shared by every member of the associated family."""

    grid: DomainGrid
    z: np.ndarray  # (nu, nv) complex
    valid: np.ndarray  # (nu, nv) bool
    F: object  # MatrixLoop batch over valid points
    gplus: object
    f_values: np.ndarray
    residual: float
    unitarity: float
    dropped: int
    N: int
    cond: np.ndarray | None = None  # (nu, nv) condition number of g_- on the unit circle


@dataclass
class SurfaceMesh:
    z: np.ndarray  # (nu, nv) parameter values
    valid: np.ndarray  # (nu, nv)
    positions: np.ndarray  # (nu, nv, 3), nan where invalid
    normals: np.ndarray  # (nu, nv, 3)
    conformal_factor: np.ndarray  # (nu, nv)
    theta: float = 0.0
    periodic_v: bool = False
    H: np.ndarray | None = None
    conformality: np.ndarray | None = None
    h_noise: np.ndarray | None = None
    near_umbilic: np.ndarray | None = None
    near_end: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    def vertex_index(self) -> np.ndarray:
        idx = -np.ones(self.valid.shape, int)
        idx[self.valid] = np.arange(int(self.valid.sum()))
        return idx

    def faces(self) -> list[tuple[int, int, int, int]]:
        """Quads over cells whose four corners are valid (row-major order)."""
        idx = self.vertex_index()
        nu, nv = self.valid.shape
        out = []
        jmax = nv if self.periodic_v else nv - 1
        for i in range(nu - 1):
            for j in range(jmax):
                j1 = (j + 1) % nv
                q = (idx[i, j], idx[i + 1, j], idx[i + 1, j1], idx[i, j1])
                if min(q) >= 0:
                    out.append(q)
        return out

    @property
    def vertex_count(self) -> int:
        return int(self.valid.sum())


def compute_frames(p: Potential, grid: DomainGrid, N: int = DEFAULT_N, jobs: int = 1, margin: float = 1e-3) -> Frames:
    z, keep = grid.mask()
    pts = z[keep]
    obs = obstacles(p, margin)
    from .dpw import default_path

    paths, ok_path = [], np.ones(len(pts), bool)
    for i, zz in enumerate(pts):
        try:
            paths.append(default_path(zz, obs))
        except PathTooClose:
            ok_path[i] = False
            paths.append(None)
    sel = np.flatnonzero(ok_path)
    g = integrate_batch(p, pts[sel], [paths[i] for i in sel], N=N, jobs=jobs, warn_tail=None, blowup=BLOWUP)
    res = _iwasawa_chunked(g)
    good = np.zeros(len(pts), bool)
    good[sel] = res.ok
    valid = np.zeros(z.shape, bool)
    valid[keep] = good
    keep_idx = np.flatnonzero(res.ok)
    F = res.F[keep_idx]
    gp = res.gplus[keep_idx]
    fv = p.f.evaluate(z[valid])
    resid = float(res.residual[res.ok].max(initial=0.0))
    unit = float(res.unitarity[res.ok].max(initial=0.0))
    dropped = int(keep.sum() - valid.sum())
    cond = np.full(z.shape, np.nan)
    if len(keep_idx):
        sv = np.linalg.svd(g[keep_idx].sample(roots_of_unity(16)), compute_uv=False)
        cond[valid] = np.max(sv[..., 0] / sv[..., 1], axis=-1)
    return Frames(grid, z, valid, F, gp, fv, resid, unit, dropped, N, cond)


@dataclass(frozen=True)
class _IwasawaParts:
    F: object
    gplus: object
    ok: np.ndarray
    residual: np.ndarray
    unitarity: np.ndarray


def _iwasawa_chunked(g, chunk: int = 256):
    from .loopcore import MatrixLoop

    n = g.coeffs.shape[0]
    Fs, Ps, oks, rs, us = [], [], [], [], []
    for s in range(0, n, chunk):
        r = iwasawa_batch(g[s : s + chunk])
        Fs.append(r.F.coeffs)
        Ps.append(r.gplus.coeffs)
        oks.append(r.ok)
        rs.append(r.residual)
        us.append(r.unitarity)
    if not Fs:
        empty = np.zeros((0, 2 * g.N + 1, 2, 2), complex)
        return _IwasawaParts(MatrixLoop(empty), MatrixLoop(empty), np.zeros(0, bool), np.zeros(0), np.zeros(0))
    return _IwasawaParts(
        MatrixLoop(np.concatenate(Fs)),
        MatrixLoop(np.concatenate(Ps)),
        np.concatenate(oks),
        np.concatenate(rs),
        np.concatenate(us),
    )


def build_family(frames: Frames, thetas, p: Potential | None = None) -> list[SurfaceMesh]:
    return [_mesh_from_frames(frames, th, p) for th in thetas]


def _mesh_from_frames(frames: Frames, theta: float, p: Potential | None) -> SurfaceMesh:
    shape = frames.z.shape
    pos = np.full(shape + (3,), np.nan)
    nrm = np.full(shape + (3,), np.nan)
    conf = np.full(shape, np.nan)
    if frames.valid.any():
        ps, ns, cs = sym_bobenko_batch(frames.F, frames.gplus, frames.f_values, theta)
        pos[frames.valid] = ps
        nrm[frames.valid] = ns
        conf[frames.valid] = cs
    mesh = SurfaceMesh(frames.z, frames.valid, pos, nrm, conf, theta, frames.grid.periodic_v)
    mesh.H = discrete_mean_curvature(mesh)
    mesh.conformality = conformality_defect(mesh)
    if frames.cond is not None:
        with np.errstate(invalid="ignore", divide="ignore"):
            mesh.h_noise = NOISE_GAIN * np.finfo(float).eps * frames.cond / (conf * frames.grid.step) ** 2
    delta = max(1e-2, 2 * frames.grid.step)
    near_u = np.zeros(shape, bool)
    for u in frames.grid.umbilics:
        near_u |= np.abs(frames.z - u) < 2 * delta
    near_e = np.zeros(shape, bool)
    _, keep = frames.grid.mask()
    lost = keep & ~frames.valid
    ends = [ex for ex in frames.grid.excluded if ex.kind == "end"]
    for ex in ends:
        near_e |= np.abs(frames.z - ex.center) < end_radius(frames, ex, lost)
    if ends and mesh.h_noise is not None:
        near_e |= mesh.h_noise > NOISE_FLAG
    mesh.near_umbilic = near_u & frames.valid
    mesh.near_end = near_e & frames.valid
    mesh.stats = {
        "vertices": int(frames.valid.sum()),
        "dropped": frames.dropped,
        "iwasawa_residual": frames.residual,
        "unitarity": frames.unitarity,
        "theta": theta,
    }
    return mesh


def end_radius(frames: Frames, ex: Exclusion, lost=None) -> float:
    """Radius of the near-end zone: ``2 delta``, or further out to where frames were
    dropped around this end, plus three grid steps for the difference stencils."""
    if lost is None:
        _, keep = frames.grid.mask()
        lost = keep & ~frames.valid
    d = np.abs(frames.z - ex.center)
    # only dropped vertices closer to this end than to any other exclusion
    mine = lost.copy()
    for other in frames.grid.excluded:
        if other is not ex:
            mine &= d <= np.abs(frames.z - other.center)
    r = 2 * ex.radius
    if mine.any():
        r = max(r, float(d[mine].max()) + 3 * frames.grid.step)
    return r


def build_mesh(p: Potential, grid: DomainGrid, theta: float = 0.0, N: int = DEFAULT_N, jobs: int = 1) -> SurfaceMesh:
    frames = compute_frames(p, grid, N, jobs)
    return _mesh_from_frames(frames, theta, p)


# ----------------------------------------------------------------------
# discrete differential geometry on the parameter grid
# ----------------------------------------------------------------------
def _shift(a, di, dj, periodic_v):
    """``a[i + di, j + dj]`` with nan padding (or wrap-around in j)."""
    out = np.full_like(a, np.nan, dtype=float if not np.iscomplexobj(a) else complex)
    nu, nv = a.shape[:2]
    if periodic_v:
        a = np.roll(a, -dj, axis=1)
        dj = 0
    si = slice(max(0, -di), nu - max(0, di))
    ti = slice(max(0, di), nu + min(0, di) if di < 0 else nu)
    sj = slice(max(0, -dj), nv - max(0, dj))
    tj = slice(max(0, dj), nv + min(0, dj) if dj < 0 else nv)
    out[si, sj] = a[ti, tj]
    return out


def _masked(a, valid):
    b = np.array(a, dtype=complex if np.iscomplexobj(a) else float)
    b[~valid] = np.nan
    return b


_STENCILS = {
    2: (np.array([-0.5, 0.0, 0.5]), np.array([1.0, -2.0, 1.0])),
    4: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
}


def _derivs(a, periodic_v, order):
    """Central differences in grid units: ``a_u, a_v, a_uu, a_vv, a_uv``."""
    d1, d2 = _STENCILS[order]
    r = len(d1) // 2
    offs = range(-r, r + 1)
    au = sum(w * _shift(a, o, 0, periodic_v) for w, o in zip(d1, offs) if w)
    av = sum(w * _shift(a, 0, o, periodic_v) for w, o in zip(d1, offs) if w)
    auu = sum(w * _shift(a, o, 0, periodic_v) for w, o in zip(d2, offs) if w)
    avv = sum(w * _shift(a, 0, o, periodic_v) for w, o in zip(d2, offs) if w)
    auv = sum(
        wi * wj * _shift(a, oi, oj, periodic_v)
        for wi, oi in zip(d1, offs)
        if wi
        for wj, oj in zip(d1, offs)
        if wj
    )
    return au, av, auu, avv, auv


def _mean_curvature(X, Nn, periodic_v, order):
    Xu, Xv, Xuu, Xvv, Xuv = _derivs(X, periodic_v, order)
    E = np.sum(Xu * Xu, -1)
    F = np.sum(Xu * Xv, -1)
    G = np.sum(Xv * Xv, -1)
    L = np.sum(Xuu * Nn, -1)
    M = np.sum(Xuv * Nn, -1)
    Nc = np.sum(Xvv * Nn, -1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return (L * G - 2 * M * F + Nc * E) / (2 * (E * G - F * F))


def discrete_mean_curvature(mesh: SurfaceMesh, order: int = 4) -> np.ndarray:
    """``H = (1/2) tr(II I^-1)`` from central differences and frame normals.

    ``order=4`` uses five-point stencils and falls back to three-point ones
    next to the boundary; vertices without a full three-point stencil get nan.
    """
    X = _masked(mesh.positions, mesh.valid[..., None].repeat(3, -1))
    H = _mean_curvature(X, mesh.normals, mesh.periodic_v, 2)
    if order == 4:
        H4 = _mean_curvature(X, mesh.normals, mesh.periodic_v, 4)
        H = np.where(np.isfinite(H4), H4, H)
    elif order != 2:
        raise ValueError("order must be 2 or 4")
    return H


_C1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _d1_4(a, axis, periodic_v):
    out = 0.0
    for w, d in zip(_C1, (-2, -1, 0, 1, 2)):
        if w == 0:
            continue
        di, dj = (d, 0) if axis == 0 else (0, d)
        out = out + w * _shift(a, di, dj, periodic_v)
    return out


def conformality_defect(mesh: SurfaceMesh) -> np.ndarray:
    """``|<Phi_z, Phi_z>| / <Phi_z, Phi_zbar>`` with fourth-order differences."""
    X = _masked(mesh.positions, mesh.valid[..., None].repeat(3, -1))
    Xu = _d1_4(X, 0, mesh.periodic_v)
    Xv = _d1_4(X, 1, mesh.periodic_v)
    zc = mesh.z.astype(complex)
    zu = _d1_4(zc[..., None], 0, mesh.periodic_v)[..., 0]
    zv = _d1_4(zc[..., None], 1, mesh.periodic_v)[..., 0]
    # Phi_u = x_u Phi_x + y_u Phi_y  (same for v); solve for Phi_x, Phi_y
    xu, yu, xv, yv = zu.real, zu.imag, zv.real, zv.imag
    det = xu * yv - yu * xv
    with np.errstate(invalid="ignore", divide="ignore"):
        Px = (yv[..., None] * Xu - yu[..., None] * Xv) / det[..., None]
        Py = (-xv[..., None] * Xu + xu[..., None] * Xv) / det[..., None]
        a = np.sum(Px * Px, -1) - np.sum(Py * Py, -1)
        b = 2 * np.sum(Px * Py, -1)
        num = 0.25 * np.hypot(a, b)
        den = 0.25 * (np.sum(Px * Px, -1) + np.sum(Py * Py, -1))
        return num / den


# ----------------------------------------------------------------------
# export
# ----------------------------------------------------------------------
def _triangles(mesh: SurfaceMesh) -> list[tuple[int, int, int]]:
    pts = mesh.positions[mesh.valid]
    tris = []
    for a, b, c, d in mesh.faces():
        if np.linalg.norm(pts[a] - pts[c]) <= np.linalg.norm(pts[b] - pts[d]):
            tris += [(a, b, c), (a, c, d)]
        else:
            tris += [(a, b, d), (b, c, d)]
    return tris


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_obj(mesh: SurfaceMesh, path) -> None:
    if mesh.vertex_count == 0:
        raise ValueError("empty mesh")
    pts = mesh.positions[mesh.valid]
    nrm = mesh.normals[mesh.valid]
    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in pts]
    lines += [f"vn {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in nrm]
    lines += [f"f {a + 1}//{a + 1} {b + 1}//{b + 1} {c + 1}//{c + 1}" for a, b, c in _triangles(mesh)]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_ply(mesh: SurfaceMesh, path) -> None:
    if mesh.vertex_count == 0:
        raise ValueError("empty mesh")
    pts = mesh.positions[mesh.valid]
    nrm = mesh.normals[mesh.valid]
    tris = _triangles(mesh)
    head = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(pts)}",
        "property float x",
        "property float y",
        "property float z",
        "property float nx",
        "property float ny",
        "property float nz",
        f"element face {len(tris)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    body = [" ".join(_fmt(v) for v in (*p, *n)) for p, n in zip(pts, nrm)]
    body += [f"3 {a} {b} {c}" for a, b, c in tris]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(head + body) + "\n")


def export(mesh: SurfaceMesh, fmt: str, path) -> None:
    fmt = fmt.upper()
    if fmt == "OBJ":
        write_obj(mesh, path)
    elif fmt == "PLY":
        write_ply(mesh, path)
    else:
        raise ValueError(f"unknown format {fmt}")


def read_obj(path):
    """Minimal reader for files written by :func:`write_obj`."""
    v, vn, f = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                v.append([float(t) for t in parts[1:4]])
            elif parts[0] == "vn":
                vn.append([float(t) for t in parts[1:4]])
            elif parts[0] == "f":
                f.append([int(t.split("//")[0]) - 1 for t in parts[1:]])
    return np.array(v), np.array(vn), f


# ----------------------------------------------------------------------
# shape fits
# ----------------------------------------------------------------------
def fit_sphere(points: np.ndarray):
    """Algebraic least-squares sphere; returns (center, radius, max |dist - R|)."""
    P = np.asarray(points, float).reshape(-1, 3)
    A = np.hstack([2 * P, np.ones((len(P), 1))])
    b = np.sum(P * P, 1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    c = sol[:3]
    R = math.sqrt(sol[3] + c @ c)
    resid = np.abs(np.linalg.norm(P - c, axis=1) - R)
    return c, R, float(resid.max())


def fit_cylinder(points: np.ndarray):
    """Least-squares circular cylinder; returns (point on axis, unit axis, radius, max residual)."""
    P = np.asarray(points, float).reshape(-1, 3)
    mean = P.mean(0)
    _, _, vt = np.linalg.svd(P - mean, full_matrices=False)
    axis0 = vt[0]

    def unpack(x):
        th, ph = x[0], x[1]
        d = np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
        return x[2:5], d, x[5]

    def resid(x):
        c, d, R = unpack(x)
        q = P - c
        perp = q - np.outer(q @ d, d)
        return np.linalg.norm(perp, axis=1) - R

    th0 = math.acos(max(-1.0, min(1.0, axis0[2])))
    ph0 = math.atan2(axis0[1], axis0[0])
    q = P - mean
    R0 = float(np.mean(np.linalg.norm(q - np.outer(q @ axis0, axis0), axis=1)))
    sol = least_squares(resid, np.concatenate([[th0, ph0], mean, [R0]]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    c, d, R = unpack(sol.x)
    return c, d, abs(R), float(np.max(np.abs(resid(sol.x))))
