import json

import pytest

from dpwcmc.cli import main, parse_region

CYL = ["--f", "1", "--E", "1"]
RECT = ["--region", "rect:-1,-1,1,1"]
# coarse grids keep these tests fast; the accuracy bounds at 64x64 live in the acceptance suite
LOOSE = ["--tol-conformality", "1e-3"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# --- check -------------------------------------------------------------------------
def test_check_fourth_order_pole_not_integrable(capsys):
    code, out, _ = run(capsys, "check", "--f", "1/(z-1/2)^4", "--E", "z-1/2")
    assert code == 3
    assert "obstruction: -mu" in out and "not integrable" in out


def test_check_sixth_order_pole_smooth(capsys):
    code, out, _ = run(capsys, "check", "--f", "(z-1/2)^-6", "--E", "z-1/2")
    assert code == 0
    assert "witness r = 1" in out and "result: all smooth" in out


def test_check_holomorphic_and_nonvanishing(capsys):
    code, out, _ = run(capsys, "check", *CYL)
    assert code == 0 and "no singular points" in out


def test_check_invalid_parity(capsys):
    code, _, err = run(capsys, "check", "--f", "z^2", "--E", "1")
    assert code == 2 and err.startswith("error:")


def test_check_bad_syntax(capsys):
    code, _, err = run(capsys, "check", "--f", "1/(z-", "--E", "1")
    assert code == 2 and "error" in err


def test_check_json(capsys):
    code, out, _ = run(capsys, "check", "--f", "1/(z-1/2)^4", "--E", "z-1/2", "--json")
    payload = json.loads(out)
    assert payload["exit"] == code == 3
    assert len(payload["points"]) == 1
    assert payload["points"][0]["verdict"]["integrable"] is False


# --- dress ---------------------------------------------------------------------
def test_dress_golden(capsys, tmp_path):
    code, out, _ = run(capsys, "dress", *CYL, "--step", "U t=-4", "--out", str(tmp_path))
    assert code == 0
    assert "f = ((1/16))/(z^2 - (1/2)*z + (1/16))" in out
    text = (tmp_path / "surface.potential").read_text()
    assert text.splitlines()[0] == "f = ((1/16))/(z^2 - (1/2)*z + (1/16))"


def test_dress_two_steps_roundtrip(capsys, tmp_path):
    code, _, _ = run(
        capsys, "dress", *CYL, "--step", "U t=-4", "--step", "V t=critical@1/8", "--out", str(tmp_path), "--name", "two"
    )
    assert code == 0
    # the written potential file loads and checks clean
    code, out, _ = run(capsys, "check", "--potential", str(tmp_path / "two.potential"))
    assert code == 0 and "z0 = 1/8" in out


def test_dress_t_zero_identity(capsys, tmp_path):
    code, out, _ = run(capsys, "dress", *CYL, "--step", "U t=0", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "surface.potential").read_text().splitlines()[0] == "f = 1"


def test_dress_blocked_at_origin(capsys, tmp_path):
    code, _, err = run(capsys, "dress", *CYL, "--step", "U t=critical@0", "--out", str(tmp_path))
    assert code == 2 and "error" in err


# --- config ----------------------------------------------------------------------
def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"f": "1/(z-1/2)^4", "E": "z-1/2"}))
    code, _, _ = run(capsys, "check", "--config", str(cfg))
    assert code == 3
    code, _, _ = run(capsys, "check", "--config", str(cfg), "--f", "(z-1/2)^-6")
    assert code == 0


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"f": "1", "E": "1", "colour": "red"}))
    code, _, err = run(capsys, "check", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_parse_region_errors():
    assert parse_region("disk:0.35@0.5,0", "16").resolution == (16, 16)
    assert parse_region("rect:-1,-1,1,1", "8x12").resolution == (8, 12)
    for bad in ("disk:", "disk:-1", "rect:1,2,3", "rect:1,1,0,2", "annulus:0,0,1,0.5", "hexagon:1"):
        with pytest.raises(ValueError):
            parse_region(bad, "16")


# --- surface -----------------------------------------------------------------------
@pytest.mark.slow
def test_surface_cylinder(capsys, tmp_path):
    args = ["surface", *CYL, *RECT, "--resolution", "32", *LOOSE, "--out", str(tmp_path), "--N", "16"]
    code, out, _ = run(capsys, *args)
    assert code == 0 and "pass" in out
    side = json.loads((tmp_path / "surface_0.json").read_text())
    assert side["pass"] and side["H_deviation"] <= 1e-2 and side["iwasawa_residual"] <= 1e-7
    first = (tmp_path / "surface_0.obj").read_bytes()
    # same job again: byte-identical output
    code, _, _ = run(capsys, *args)
    assert (tmp_path / "surface_0.obj").read_bytes() == first
    assert json.loads((tmp_path / "surface_0.json").read_text()) == side


def test_surface_theta_list_and_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DPWCMC_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(
        capsys, "surface", *CYL, "--region", "rect:-0.5,-0.5,0.5,0.5", "--resolution", "16",
        "--theta", "0", "--theta", "1.2", "--format", "ply", "--name", "fam", *LOOSE,
    )
    assert code == 0
    assert (tmp_path / "fam_0.ply").exists() and (tmp_path / "fam_1.ply").exists()
    assert "conformal factor spread across theta: 0" in out


def test_surface_refuses_non_integrable(capsys, tmp_path):
    code, out, _ = run(capsys, "surface", "--f", "1/(z-1/2)^4", "--E", "z-1/2", "--out", str(tmp_path))
    assert code == 3 and "no surface" in out
    assert not list(tmp_path.iterdir())


def test_surface_tolerance_failure_exit(capsys, tmp_path):
    code, out, _ = run(
        capsys, "surface", *CYL, "--region", "rect:-0.5,-0.5,0.5,0.5", "--resolution", "8",
        "--tol-h", "1e-12", "--out", str(tmp_path),
    )
    assert code == 5 and "FAIL" in out


# --- oracle ------------------------------------------------------------------------
def test_oracle_agrees(capsys):
    code, out, _ = run(capsys, "oracle", "--f", "(z-1/2)^-6", "--E", "z-1/2", "--t", "0.05")
    assert code == 0


def test_oracle_json(capsys):
    code, out, _ = run(capsys, "oracle", "--f", "1/(z-1/2)^4", "--E", "z-1/2", "--json")
    payload = json.loads(out)
    assert code == 0
    assert payload["exit"] == 0
