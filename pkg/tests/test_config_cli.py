import json
import math
from pathlib import Path

import numpy as np
import pytest

from apflow.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from apflow.config import ConfigError, RunConfig, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SQUARE = """
nu = 1.0
[section]
kind = "rectangle"
modes = 41
[flux]
terms = [[1.0, 0.5, 0.0]]
[modal]
frequencies = [0.0, 1.0, 10.0, 100.0]
[flow]
samples = 9
verify = false
probes = [[0.5, 0.5]]
[march]
dt = 0.01
T = 2.0
transient = 1.0
[gate]
c = 1.0
nu0 = true
"""

DISK = """
nu = 2.5
[section]
kind = "disk"
R = 1.0
modes = 200
radial_points = 2048
[flux]
terms = [[0.0, 1.0, 0.0]]
[flow]
samples = 5
verify = false
"""


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run(tmp_path, text, *cmd, out="out"):
    cfg = write(tmp_path, text)
    outdir = tmp_path / out
    code = main([*cmd, "--config", str(cfg), "--out", str(outdir)])
    return code, outdir


# -- config -----------------------------------------------------------------


def test_defaults_validate():
    cfg = load_config()
    assert isinstance(cfg, RunConfig)
    assert cfg.section.kind == "rectangle" and cfg.nu == 1.0


def test_shipped_configs_parse():
    for path in sorted(CONFIGS.glob("*.toml")):
        cfg = load_config(path)
        cfg.load_flux()
        assert cfg.base_dir == path.parent.resolve()


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match=r"section\.mdoes: unknown key"):
        parse_config('[section]\nmdoes = 3\n')


def test_bad_type_is_named():
    with pytest.raises(ConfigError, match=r"march\.dt: expected a number"):
        parse_config('[march]\ndt = "small"\n')
    with pytest.raises(ConfigError, match=r"section\.modes: expected an integer"):
        parse_config('[section]\nmodes = 2.5\n')


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config('nu = 1.0\nnu2 = = 3\n', source="x.toml")


def test_semantic_checks():
    with pytest.raises(ConfigError, match="nu"):
        parse_config("nu = -1.0\n")
    with pytest.raises(ConfigError, match="scheme"):
        parse_config('[march]\nscheme = "euler"\n')
    with pytest.raises(ConfigError, match="section.mask"):
        parse_config('[section]\nkind = "grid"\n')


def test_flux_terms_and_samples(tmp_path):
    cfg = parse_config("[flux]\nterms = [[0.0, 1.0, 0.0], [2.0, 0.25, 0.5]]\n")
    f = cfg.load_flux()
    assert len(f) == 3
    t = np.arange(5) * 0.1
    csv = "t,f,df\n" + "\n".join(f"{x},{math.cos(x)},{-math.sin(x)}" for x in t)
    (tmp_path / "s.csv").write_text(csv)
    cfg = parse_config('[flux]\nsamples = "s.csv"\n', base_dir=tmp_path)
    s = cfg.load_flux()
    assert s.dt == pytest.approx(0.1) and len(s) == 5


# -- commands ---------------------------------------------------------------


def test_eigs_square(tmp_path):
    code, out = run(tmp_path, SQUARE, "eigs")
    assert code == EXIT_OK
    data = np.loadtxt(out / "eigs.csv", delimiter=",", skiprows=1)
    assert data[0, 1] == pytest.approx(2 * math.pi**2, rel=1e-14)
    summary = json.loads((out / "flux_carrier.json").read_text())
    assert summary["beta_sq_defect"] == pytest.approx(1 - summary["beta_sq_sum"])


def test_eigs_disk(tmp_path):
    code, out = run(tmp_path, DISK, "eigs")
    assert code == EXIT_OK
    summary = json.loads((out / "flux_carrier.json").read_text())
    assert summary["chi0_sq_direct"] == pytest.approx(math.pi / 8, rel=1e-6)
    assert summary["chi0_sq"] == pytest.approx(math.pi / 8, rel=1e-5)


def test_missing_flux_file(tmp_path, capsys):
    text = SQUARE.replace('terms = [[1.0, 0.5, 0.0]]', 'file = "nowhere.flux"')
    code, _ = run(tmp_path, text, "flow")
    assert code == EXIT_INPUT
    assert str(tmp_path / "nowhere.flux") in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    assert main(["eigs", "--config", str(tmp_path / "nope.toml")]) == EXIT_INPUT
    assert "nope.toml" in capsys.readouterr().err


def test_modal_command(tmp_path):
    code, out = run(tmp_path, SQUARE, "modal")
    assert code == EXIT_OK
    summary = json.loads((out / "modal_summary.json").read_text())
    assert summary["max_identity_residual"] < 1e-8
    rows = np.loadtxt(out / "gain.csv", delimiter=",", skiprows=1)
    assert rows.shape == (4, 9)


def test_modal_ceiling_failure(tmp_path):
    text = SQUARE.replace("[modal]", "[modal]\nresidual_ceiling = 0.0")
    code, _ = run(tmp_path, text, "modal")
    assert code == EXIT_FAIL


def test_flow_steady_disk(tmp_path):
    text = DISK.replace("R = 1.0", "normalized = true")
    code, out = run(tmp_path, text, "flow")
    assert code == EXIT_OK
    rep = json.loads((out / "flow_report.json").read_text())
    pi0 = rep["pi_terms"][0]
    assert pi0[0] == 0.0
    # same-discretization flux carrier
    from apflow.cross_section import build_disk, flux_carrier

    section, basis = build_disk(normalized=True)
    chi = flux_carrier(section, basis, 1.0).chi0_sq_direct
    assert pi0[1] == pytest.approx(2.5 / chi, rel=1e-8)
    assert pi0[1] == pytest.approx(8 * math.pi * 2.5, rel=1e-6)
    assert "regL1" in rep


def test_flow_probe_outside(tmp_path):
    text = SQUARE.replace("probes = [[0.5, 0.5]]\n[march]", "probes = [[1.5, 0.5]]\n[march]")
    code, _ = run(tmp_path, text, "flow")
    assert code == EXIT_INPUT


def test_march_command(tmp_path):
    text = SQUARE.replace("modes = 41", "modes = 8").replace("dt = 0.01", "dt = 0.001")
    code, out = run(tmp_path, text, "march")
    assert code == EXIT_OK
    rep = json.loads((out / "march_report.json").read_text())
    assert rep["ledgers"]["max_flux_residual"] < 1e-10
    assert math.isfinite(rep["uloc"]["ratio"])
    cross = json.loads((out / "cross_route.json").read_text())
    assert cross["volterra_vs_march"] < 1e-6
    head = (out / "trajectory.csv").read_text().splitlines()[0]
    assert head == "t,pi,flux,flux_residual,energy,grad_energy"


def test_gate_command(tmp_path):
    text = SQUARE.replace("nu = 1.0", "nu = 50.0")
    code, out = run(tmp_path, text, "gate")
    assert code == EXIT_OK
    data = json.loads((out / "gate.json").read_text())
    assert data["verdict"] is True
    assert data["K0"] == pytest.approx(0.09423627272791583, rel=1e-12)
    assert data["input"]["c"] == 1.0
    assert data["nu0"]["all_verified"]


def test_outputs_are_deterministic(tmp_path):
    for cmd in ("eigs", "modal", "flow", "gate"):
        _, a = run(tmp_path, SQUARE, cmd, out="a")
        _, b = run(tmp_path, SQUARE, cmd, out="b")
    for path in sorted(a.iterdir()):
        assert path.read_bytes() == (b / path.name).read_bytes(), path.name


def test_global_flags_either_side(tmp_path):
    cfg = write(tmp_path, SQUARE)
    assert main(["--config", str(cfg), "--out", str(tmp_path / "x"), "--threads", "2", "eigs"]) == EXIT_OK
    assert main(["eigs", "--config", str(cfg), "--out", str(tmp_path / "y")]) == EXIT_OK
    assert (tmp_path / "x" / "eigs.csv").read_bytes() == (tmp_path / "y" / "eigs.csv").read_bytes()


def test_bad_thread_count(tmp_path):
    cfg = write(tmp_path, SQUARE)
    assert main(["eigs", "--config", str(cfg), "--out", str(tmp_path), "--threads", "-1"]) == EXIT_INPUT
