"""Command-line front end: ``check``, ``dress``, ``surface`` and ``oracle``.

Exit codes: 0 success, 2 validation failure, 3 non-integrable, 4 non-smooth,
5 numeric divergence (including surface diagnostics over tolerance).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    Pole,
    PotentialError,
    classify_singularity,
    frobenius_obstruction,
    monodromy_oracle,
    residue_test,
    singular_points,
    symmetry_shortcut,
    validate_potential,
)
from .analysis import MONODROMY_LAMBDAS
from .dpw import FactorizationDiverged, PathTooClose, integrate_batch
from .dressing import Blocked, OutsideBigCell, apply_plan, birkhoff_split_numeric, make_state, parse_plan
from .loopcore import DEFAULT_N, SIGMA_MINUS, SIGMA_PLUS, MatrixLoop
from .ratfun import CRat, LogarithmicObstruction, residue, ParseError, format_rational, parse_potential_text, parse_rational
from .surface import Annulus, Disk, DomainGrid, EmptyGrid, Rect, build_family, compute_frames, export, sample_domain

EXIT_OK, EXIT_INVALID, EXIT_NONINTEGRABLE, EXIT_NONSMOOTH, EXIT_NUMERIC = 0, 2, 3, 4, 5
OUTPUT_ENV = "DPWCMC_OUTPUT_DIR"


@dataclass
class JobConfig:
    f: str | None = None
    E: str | None = None
    potential: str | None = None  # path to an ``f = ... / E = ...`` file
    domain: str = "plane"
    allow_zero_hopf: bool = False
    plan: list = field(default_factory=list)
    region: str = "disk:1"
    resolution: str = "64"
    theta: list = field(default_factory=lambda: [0.0])
    N: int = DEFAULT_N
    jobs: int = 1
    format: str = "obj"
    out: str | None = None
    name: str = "surface"
    tol_h: float = 1e-2
    tol_conformality: float = 1e-4
    tol_residual: float = 1e-7
    monodromy_tol: float = 1e-6
    t: list = field(default_factory=lambda: [0.05, -0.1])
    points: list = field(default_factory=list)
    json: bool = False

    def output_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUTPUT_ENV) or ".")


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------
# config plumbing
# ----------------------------------------------------------------------
def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    known = set(JobConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    return data


def make_config(args: argparse.Namespace) -> JobConfig:
    """File values first, then every flag the user actually gave."""
    merged = _load_config(getattr(args, "config", None))
    for key in JobConfig.__dataclass_fields__:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    cfg = JobConfig(**merged)
    if cfg.N < 1 or cfg.jobs < 1:
        raise ConfigError("N and jobs must be positive")
    if isinstance(cfg.theta, (int, float)):
        cfg.theta = [cfg.theta]
    if isinstance(cfg.t, (int, float)):
        cfg.t = [cfg.t]
    return cfg


def load_potential(cfg: JobConfig):
    if cfg.potential:
        text = Path(cfg.potential).read_text()
        try:
            parts = parse_potential_text(text)
        except ParseError as exc:
            raise ConfigError(f"{cfg.potential}: {exc}") from None
        f, E = parts["f"], parts["E"]
    else:
        if cfg.f is None or cfg.E is None:
            raise ConfigError("give --f and --E, or --potential FILE")
        try:
            f = parse_rational(cfg.f)
        except ParseError as exc:
            raise ConfigError(f"f: {exc}") from None
        try:
            E = parse_rational(cfg.E)
        except ParseError as exc:
            raise ConfigError(f"E: {exc}") from None
    return validate_potential(f, E, cfg.domain, cfg.allow_zero_hopf)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def parse_region(text: str, resolution: str) -> DomainGrid:
    """``disk:R``, ``disk:R@cx,cy``, ``rect:x0,y0,x1,y1`` or ``annulus:cx,cy,r_in,r_out``."""
    res = str(resolution).lower().split("x")
    try:
        nu = int(res[0])
        nv = int(res[1]) if len(res) > 1 else nu
    except ValueError:
        raise ConfigError(f"bad resolution {resolution!r}") from None
    if nu < 3 or nv < 3:
        raise ConfigError("resolution must be at least 3x3")
    kind, _, arg = text.partition(":")
    try:
        if kind == "disk":
            r, _, c = arg.partition("@")
            center = complex(*_floats(c)) if c else 0j
            shape = Disk(float(r), center)
        elif kind == "rect":
            x0, y0, x1, y1 = _floats(arg)
            shape = Rect(complex(x0, y0), complex(x1, y1))
        elif kind == "annulus":
            cx, cy, r0, r1 = _floats(arg)
            shape = Annulus(complex(cx, cy), r0, r1)
        else:
            raise ConfigError(f"unknown region kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad region {text!r}") from None
    if kind == "rect":
        ok = shape.lower_left.real < shape.upper_right.real and shape.lower_left.imag < shape.upper_right.imag
    elif kind == "annulus":
        ok = 0 <= shape.r_in < shape.r_out
    else:
        ok = shape.radius > 0
    if not ok:
        raise ConfigError(f"degenerate region {text!r}")
    return DomainGrid(shape, (nu, nv))


def _num(x: float) -> str:
    return f"{x:.6e}" if np.isfinite(x) else str(x)


def _emit(cfg: JobConfig, lines: list[str], payload: dict, out=None) -> None:
    out = out or sys.stdout
    if cfg.json:
        out.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        out.write("\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# check
# ----------------------------------------------------------------------
def check_report(p, monodromy_tol: float = 1e-6) -> tuple[list[str], dict, int]:
    lines = [f"f = {format_rational(p.f)}", f"E = {format_rational(p.E)}"]
    points = []
    code = EXIT_OK
    for sp in singular_points(p):
        v = classify_singularity(p, sp, monodromy_tol)
        entry = {"verdict": v.to_dict()}
        kind = "pole" if sp.n < 0 else "zero"
        m = "inf" if v.m >= 10**9 else str(v.m)
        lines.append(f"singular point z0 = {_loc(v.z0)}: {kind} of order {abs(sp.n)}, E vanishes to order {m}")
        if sp.exact is not None and not v.branch:
            rep = frobenius_obstruction(p, sp.exact)
            entry["frobenius"] = rep.to_dict()
            lines.append(f"  indicial roots r1 = {rep.r1}, r2 = {rep.r2}")
            lines.append(f"  obstruction: {rep.obstruction}")
            if isinstance(rep.kind, Pole) and rep.kind.n == 2 and not residue(p.f, sp.exact):
                lines.append("  shortcut: n = 2 pole of f with zero residue is always integrable")
                entry["shortcut"] = "n=2"
            elif symmetry_shortcut(p, sp.exact):
                lines.append("  shortcut: f and E are even about z0")
                entry["shortcut"] = "even"
        status = "integrable" if v.integrable else "not integrable"
        if v.branch:
            shape = "branch point"
        else:
            shape = "smooth" if v.smooth else "not smooth"
        wit = f", witness r = {v.witness_r}" if v.witness_r is not None else ""
        lines.append(f"  verdict: {status}, {shape} ({v.method}{wit})")
        points.append(entry)
        if not v.integrable:
            code = EXIT_NONINTEGRABLE
        elif not v.smooth and code == EXIT_OK:
            code = EXIT_NONSMOOTH
    if not points:
        lines.append("no singular points in the domain")
    lines.append(f"result: {_code_name(code)}")
    payload = {"f": format_rational(p.f), "E": format_rational(p.E), "points": points, "exit": code}
    return lines, payload, code


def _loc(z) -> str:
    if isinstance(z, complex):
        return f"{z.real:.12g}{z.imag:+.12g}i (approx.)"
    return str(z)


def _code_name(code: int) -> str:
    return {0: "all smooth", 2: "invalid", 3: "not integrable", 4: "not smooth", 5: "numeric divergence"}[code]


def cmd_check(cfg: JobConfig) -> int:
    p = load_potential(cfg)
    lines, payload, code = check_report(p, cfg.monodromy_tol)
    _emit(cfg, lines, payload)
    return code


# ----------------------------------------------------------------------
# dress
# ----------------------------------------------------------------------
def cmd_dress(cfg: JobConfig) -> int:
    p = load_potential(cfg)
    steps = parse_plan(cfg.plan)
    state = make_state(p)
    lines = [f"start: f = {format_rational(p.f)}"]
    record = []
    for st in steps:
        state = apply_plan(state, [st])
        lines.append(f"{st}: f = {format_rational(state.f)}")
        record.append({"step": str(st), "f": format_rational(state.f)})
    out_dir = cfg.output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{cfg.name}.potential"
    path.write_text(f"f = {format_rational(state.f)}\nE = {format_rational(state.E)}\n")
    lines.append(f"wrote {path}")
    check_lines, check_payload, code = check_report(state.potential, cfg.monodromy_tol)
    lines += check_lines
    payload = {"steps": record, "f": format_rational(state.f), "E": format_rational(state.E), "file": str(path), "check": check_payload}
    _emit(cfg, lines, payload)
    return code


# ----------------------------------------------------------------------
# surface
# ----------------------------------------------------------------------
def _diagnostics(mesh, cfg: JobConfig) -> dict:
    interior = np.isfinite(mesh.H) & ~mesh.near_end
    conf_ok = np.isfinite(mesh.conformality) & ~mesh.near_end
    hdev = float(np.max(np.abs(mesh.H[interior] + 0.5), initial=0.0))
    cdev = float(np.max(mesh.conformality[conf_ok], initial=0.0))
    d = {
        "theta": mesh.theta,
        "vertices": mesh.vertex_count,
        "faces": len(mesh.faces()),
        "dropped": mesh.stats["dropped"],
        "near_end": int(mesh.near_end.sum()),
        "near_umbilic": int(mesh.near_umbilic.sum()),
        "H_deviation": hdev,
        "conformality": cdev,
        "iwasawa_residual": mesh.stats["iwasawa_residual"],
        "unitarity": mesh.stats["unitarity"],
        "conformal_factor_min": float(np.nanmin(mesh.conformal_factor)) if mesh.vertex_count else math.nan,
        "conformal_factor_max": float(np.nanmax(mesh.conformal_factor)) if mesh.vertex_count else math.nan,
    }
    d["pass"] = bool(
        mesh.vertex_count > 0
        and hdev <= cfg.tol_h
        and cdev <= cfg.tol_conformality
        and d["iwasawa_residual"] <= cfg.tol_residual
    )
    return d


def cmd_surface(cfg: JobConfig) -> int:
    p = load_potential(cfg)
    _, check_payload, code = check_report(p, cfg.monodromy_tol)
    if code == EXIT_NONINTEGRABLE:
        _emit(cfg, ["potential is not integrable; no surface built"], {"check": check_payload, "exit": code})
        return code
    grid = sample_domain(parse_region(cfg.region, cfg.resolution), p)
    frames = compute_frames(p, grid, cfg.N, cfg.jobs)
    meshes = build_family(frames, [float(t) for t in cfg.theta], p)
    out_dir = cfg.output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"region {cfg.region}, resolution {grid.resolution[0]}x{grid.resolution[1]}, N = {cfg.N}"]
    for ex in grid.excluded:
        lines.append(f"excluded disk at {_cnum(ex.center)} radius {_num(ex.radius)} ({ex.kind})")
    reports = []
    all_pass = True
    for i, mesh in enumerate(meshes):
        ext = cfg.format.lower()
        path = out_dir / f"{cfg.name}_{i}.{ext}"
        diag = _diagnostics(mesh, cfg)
        if mesh.vertex_count:
            export(mesh, ext, path)
            diag["file"] = path.name
        all_pass &= diag["pass"]
        side = out_dir / f"{cfg.name}_{i}.json"
        side.write_text(json.dumps(_jsonable(diag), sort_keys=True, indent=2) + "\n")
        reports.append(diag)
        lines.append(
            f"theta = {_num(mesh.theta)}: {diag['vertices']} vertices ({diag['dropped']} dropped, {diag['near_end']} near an end), "
            f"max |H+1/2| = {_num(diag['H_deviation'])}, conformality = {_num(diag['conformality'])}, "
            f"residual = {_num(diag['iwasawa_residual'])} -> {'pass' if diag['pass'] else 'FAIL'}"
        )
    if len(meshes) > 1:
        ref = meshes[0].conformal_factor
        spread = max(float(np.nanmax(np.abs(m.conformal_factor - ref) / ref, initial=0.0)) for m in meshes)
        lines.append(f"conformal factor spread across theta: {_num(spread)}")
    result = EXIT_OK if all_pass else EXIT_NUMERIC
    if result == EXIT_OK and code == EXIT_NONSMOOTH:
        result = EXIT_NONSMOOTH
    payload = {"meshes": _jsonable(reports), "check": check_payload, "exit": result}
    _emit(cfg, lines, payload)
    return result


def _cnum(z: complex) -> str:
    return f"({_num(z.real)}, {_num(z.imag)})"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(f"{float(x):.9g}") if np.isfinite(x) else str(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ----------------------------------------------------------------------
# oracle
# ----------------------------------------------------------------------
def _default_points(p, count: int = 6) -> list[complex]:
    sing = [sp.approx for sp in singular_points(p)]
    pts = []
    for k in range(count * 4):
        z = 0.45 * (k + 1) / (count * 4) * complex(math.cos(2.0 * k + 0.3), math.sin(2.0 * k + 0.3))
        if all(abs(z - s) > 0.15 for s in sing):
            pts.append(z)
        if len(pts) == count:
            break
    return pts


def cmd_oracle(cfg: JobConfig) -> int:
    p = load_potential(cfg)
    lines, ok = [], True
    sing_records = []
    for sp in singular_points(p):
        rec = {"z0": str(sp.location), "n": sp.n}
        if sp.exact is not None and not (sp.n > 0 and sp.m >= sp.n):
            rep = frobenius_obstruction(p, sp.exact)
            res = residue_test(p, sp.exact, list(rep.top_series))
            rec["obstruction_zero"] = rep.integrable
            rec["residue_zero"] = res.is_zero()
        try:
            defects = [monodromy_oracle(p, sp.approx, lam).defect for lam in MONODROMY_LAMBDAS]
        except ArithmeticError as exc:
            rec["monodromy_error"] = str(exc)
            ok = False
            sing_records.append(rec)
            lines.append(f"z0 = {_loc(sp.location)}: monodromy failed ({exc})")
            continue
        rec["monodromy_defect"] = max(defects)
        mono_zero = max(defects) < cfg.monodromy_tol
        verdicts = [mono_zero] + [rec[k] for k in ("obstruction_zero", "residue_zero") if k in rec]
        rec["agree"] = len(set(verdicts)) == 1
        ok &= rec["agree"]
        sing_records.append(rec)
        parts = [f"monodromy defect {_num(rec['monodromy_defect'])}"]
        if "obstruction_zero" in rec:
            parts.insert(0, f"obstruction {'0' if rec['obstruction_zero'] else '!= 0'}, residue {'0' if rec['residue_zero'] else '!= 0'}")
        lines.append(f"z0 = {_loc(sp.location)}: {', '.join(parts)} -> {'agree' if rec['agree'] else 'DISAGREE'}")

    pts = [complex(x) if not isinstance(x, (list, tuple)) else complex(*x) for x in cfg.points] or _default_points(p)
    state = make_state(p)
    bir = []
    try:
        g = integrate_batch(p, pts, N=cfg.N, warn_tail=None)
    except PathTooClose as exc:
        raise ConfigError(str(exc)) from None
    for t in cfg.t:
        tq = float(t)
        # closed forms of the dressed first coefficients
        tc = CRat.from_complex(tq, 10**12)
        b1_new = (state.b1 / (1 + state.b1 * tc)).numeric()
        c1_new = (state.c1 / (1 + state.c1 * tc)).numeric()
        hU = MatrixLoop.from_terms({0: np.eye(2), 1: tq * SIGMA_MINUS}, cfg.N)
        hV = MatrixLoop.from_terms({0: np.eye(2), 1: tq * SIGMA_PLUS}, cfg.N)
        worst = 0.0
        for i, z in enumerate(pts):
            gm_u, _ = birkhoff_split_numeric(hU, g[i])
            gm_v, _ = birkhoff_split_numeric(hV, g[i])
            worst = max(
                worst,
                abs(gm_u.coeff(-1)[0, 1] - complex(b1_new(z))),
                abs(gm_v.coeff(-1)[1, 0] - complex(c1_new(z))),
            )
        bir.append({"t": tq, "max_error": worst, "agree": worst <= 1e-6})
        ok &= worst <= 1e-6
        lines.append(f"Birkhoff t = {tq:g}: max |b1~, c1~ error| = {_num(worst)} over {len(pts)} points")
    lines.append("result: " + ("all oracles agree" if ok else "oracle disagreement"))
    payload = {"singular_points": _jsonable(sing_records), "birkhoff": _jsonable(bir), "exit": EXIT_OK if ok else EXIT_NUMERIC}
    _emit(cfg, lines, payload)
    return EXIT_OK if ok else EXIT_NUMERIC


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------
def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON file with default values; flags override it")
    sp.add_argument("--f", help="rational function f(z)")
    sp.add_argument("--E", help="rational function E(z)")
    sp.add_argument("--potential", help="file with 'f = ...' and 'E = ...' lines")
    sp.add_argument("--domain", choices=["plane", "disk"], default=None)
    sp.add_argument("--allow-zero-hopf", dest="allow_zero_hopf", action="store_const", const=True, default=None)
    sp.add_argument("--monodromy-tol", dest="monodromy_tol", type=float)
    sp.add_argument("--json", action="store_const", const=True, default=None, help="print the report as JSON")
    sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
    sp.add_argument("--name", help="stem for output files")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpwcmc", description="CMC surfaces from meromorphic DPW potentials")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", help="classify the singular points of a potential")
    _common(sp)

    sp = sub.add_parser("dress", help="apply a dressing plan and re-check")
    _common(sp)
    sp.add_argument("--step", dest="plan", action="append", help="e.g. 'U t=-4' or 'V t=critical@1/2' (repeatable)")

    sp = sub.add_parser("surface", help="build meshes of the associated family")
    _common(sp)
    sp.add_argument("--region", help="disk:R[@cx,cy] | rect:x0,y0,x1,y1 | annulus:cx,cy,rin,rout")
    sp.add_argument("--resolution", help="NU or NUxNV")
    sp.add_argument("--theta", type=float, action="append")
    sp.add_argument("--N", type=int)
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--format", choices=["obj", "ply"])
    sp.add_argument("--tol-h", dest="tol_h", type=float)
    sp.add_argument("--tol-conformality", dest="tol_conformality", type=float)
    sp.add_argument("--tol-residual", dest="tol_residual", type=float)

    sp = sub.add_parser("oracle", help="cross-check obstruction, residue, monodromy and Birkhoff splitting")
    _common(sp)
    sp.add_argument("--t", type=float, action="append", help="dressing parameter (repeatable)")
    sp.add_argument("--N", type=int)
    return ap


COMMANDS = {"check": cmd_check, "dress": cmd_dress, "surface": cmd_surface, "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ParseError, PotentialError, EmptyGrid, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", [])[1:]:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (LogarithmicObstruction, Blocked) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONINTEGRABLE if isinstance(exc, LogarithmicObstruction) else EXIT_INVALID
    except (FactorizationDiverged, OutsideBigCell, ArithmeticError) as exc:
        print(f"error: numeric divergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
