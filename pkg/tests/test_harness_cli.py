import json
import math
import os

import numpy as np
import pytest
from click.testing import CliRunner

from dunklkit.cli import main as cli_main
from dunklkit.errors import ConfigError, DomainError
from dunklkit.fields import gaussian, poly_times_gaussian
from dunklkit.grid import SampledField, make_grid, norm_l2, norm_lp, sample
from dunklkit.harness import (
    MODE_RADIAL_BATTERY,
    MODE_RADIAL_MULTIPLIER,
    ExperimentConfig,
    apply_multiplier,
    bandpass_field,
    boundedness_sweep,
    build_battery,
    domination_check,
    lp_norm,
)
from dunklkit.hormander import multiplier_from_dsl
from dunklkit.root_system import make_z2d
from dunklkit.semigroup import heat_apply
from dunklkit.transform import DunklTransform

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# ---------------------------------------------------------------------------
# multiplier operator
# ---------------------------------------------------------------------------

def test_identity_multiplier_roundtrip(tr1_half):
    m = multiplier_from_dsl("one", 1)
    f = sample(tr1_half.grid, gaussian(1, a=0.5))
    out = apply_multiplier(tr1_half, m, f)
    rel = norm_l2(tr1_half.grid, SampledField(tr1_half.grid, out.values - f.values))
    assert rel / norm_l2(tr1_half.grid, f) < 1e-9


def test_heat_multiplier_is_semigroup(tr1_half):
    # m(xi) = e^{-|xi|^2} acts as T_1
    m = multiplier_from_dsl("heat", 1)
    f = poly_times_gaussian(1, "x1", a=0.5)
    a = apply_multiplier(tr1_half, m, f)
    b = heat_apply(tr1_half, 1.0, f)
    rel = norm_l2(tr1_half.grid, SampledField(tr1_half.grid, a.values - b.values))
    assert rel / norm_l2(tr1_half.grid, b) < 1e-10


def test_plancherel_operator_bound(tr1_half, rng):
    grid = tr1_half.grid
    m = multiplier_from_dsl("imagpow(3.0)", 1)
    for _ in range(5):
        coeffs = rng.normal(size=3)
        f = SampledField(
            grid,
            (coeffs[0] + coeffs[1] * grid.points[:, 0] + coeffs[2] * grid.points[:, 0] ** 2)
            * grid.points[:, 0] ** 2
            * np.exp(-0.5 * grid.points[:, 0] ** 2),
        )
        out = apply_multiplier(tr1_half, m, f)
        assert norm_l2(grid, out) <= m.sup_bound * norm_l2(grid, f) * (1 + 1e-6)


def test_multiplier_linearity(tr1_half):
    grid = tr1_half.grid
    m = multiplier_from_dsl("imagpow(1.0)", 1)
    f = sample(grid, gaussian(1, a=0.5))
    g = sample(grid, poly_times_gaussian(1, "x1**2", a=1.0))
    lhs = apply_multiplier(tr1_half, m, SampledField(grid, 2 * f.values - 1j * g.values))
    rhs = 2 * apply_multiplier(tr1_half, m, f).values - 1j * apply_multiplier(tr1_half, m, g).values
    assert np.max(np.abs(lhs.values - rhs)) < 1e-10 * np.max(np.abs(rhs))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def test_lp_norm_homogeneous(tr1_half):
    grid = tr1_half.grid
    f = sample(grid, gaussian(1, a=1.0))
    two_f = SampledField(grid, 2.0 * f.values)
    for p in [1.0, 1.5, 2.0, 4.0]:
        assert lp_norm(grid, two_f, p) == pytest.approx(2 * lp_norm(grid, f, p), rel=1e-14)


def test_lp_norm_gaussian_closed_form(tr1_zero):
    # kappa = 0, p = 2: ||e^{-x^2/2}||_2 = pi^{1/4}
    assert lp_norm(tr1_zero.grid, gaussian(1, a=0.5), 2.0) == pytest.approx(
        math.pi**0.25, rel=1e-10
    )


def test_lp_norm_sup_mode(tr1_half):
    f = sample(tr1_half.grid, gaussian(1, a=0.5))
    assert lp_norm(tr1_half.grid, f, np.inf) == pytest.approx(
        float(np.max(np.abs(f.values)))
    )
    with pytest.raises(DomainError):
        lp_norm(tr1_half.grid, f, 0.0)


def test_p2_matches_plancherel_side(tr1_half):
    f = poly_times_gaussian(1, "x1", a=0.5)
    F = tr1_half.forward(f)
    assert lp_norm(tr1_half.grid, f, 2.0) == pytest.approx(
        norm_l2(tr1_half.grid, F), rel=1e-9
    )


# ---------------------------------------------------------------------------
# config, batteries, guards
# ---------------------------------------------------------------------------

def test_battery_presets():
    g = make_z2d(2, [0.5, 0.5])
    std = build_battery(g, "standard")
    assert len(std) == 7
    bp = build_battery(g, ["radial-bandpass"])
    assert all(f.is_radial for f in bp)
    custom = build_battery(g, [{"kind": "expr", "expr": "x1*exp(-r**2)"}])
    assert len(custom) == 1 and not custom[0].is_radial
    with pytest.raises(ConfigError):
        build_battery(g, [{"kind": "nope"}])


def test_config_json_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_json(os.path.join(REPO, "configs", "sweep_golden.json"))
    assert cfg.multiplier == "imagpow(2.0)"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"group": {"d": 1, "kappas": [0.5]}, "unknown_key": 1}))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(str(bad))


def test_mode_guard_p_below_two():
    cfg = ExperimentConfig(
        group={"d": 1, "kappas": [0.5]},
        grid={"n": 64, "length": 8.0},
        multiplier="axis_ratio(1.0)",
        battery=["radial-gaussians"],
        p_list=[1.5, 2],
        s=1.5,
        mode=MODE_RADIAL_BATTERY,
    )
    with pytest.raises(ConfigError, match="p >= 2"):
        cfg.build()


def test_mode_guard_nonradial_battery():
    cfg = ExperimentConfig(
        group={"d": 1, "kappas": [0.5]},
        grid={"n": 64, "length": 8.0},
        multiplier="one",
        battery=[{"kind": "poly_gaussian", "poly": "x1", "a": 1.0}],
        p_list=[2, 4],
        s=1.5,
        mode=MODE_RADIAL_BATTERY,
    )
    with pytest.raises(ConfigError, match="radial"):
        cfg.build()


def test_mode_guard_nonradial_multiplier():
    cfg = ExperimentConfig(
        group={"d": 2, "kappas": [0.25, 0.25]},
        grid={"n": 32, "length": 6.0},
        multiplier="axis_ratio(1.0)",
        battery=["radial-gaussians"],
        p_list=[2],
        s=2.0,
        mode=MODE_RADIAL_MULTIPLIER,
    )
    with pytest.raises(ConfigError, match="radial-multiplier"):
        cfg.build()


def test_radial_battery_mode_accepts_nonradial_multiplier():
    cfg = ExperimentConfig(
        group={"d": 2, "kappas": [0.25, 0.25]},
        grid={"n": 32, "length": 6.0},
        multiplier="axis_ratio(1.0)",
        battery=["radial-gaussians"],
        p_list=[2, 4],
        s=2.0,
        mode=MODE_RADIAL_BATTERY,
    )
    tr, m, battery = cfg.build()
    assert not m.radial and all(f.is_radial for f in battery)


# ---------------------------------------------------------------------------
# sweeps and domination
# ---------------------------------------------------------------------------

def test_sweep_identity_ratios():
    cfg = ExperimentConfig(
        group={"d": 1, "kappas": [0.5]},
        grid={"n": 96, "length": 10.0},
        multiplier="one",
        battery=["radial-gaussians"],
        p_list=[1.5, 2, 4],
        s=1.5,
        delta=0.75,
    )
    res = boundedness_sweep(cfg)
    for row in res.rows:
        assert row["ratio"] == pytest.approx(1.0, abs=1e-6)
    assert res.plancherel_ok


def test_golden_sweep_reproduces_bit_exact(tmp_path):
    cfg = ExperimentConfig.from_json(os.path.join(REPO, "configs", "sweep_golden.json"))
    res = boundedness_sweep(cfg)
    got = "\n".join(res.table_lines()) + "\n"
    with open(os.path.join(REPO, "tests", "golden", "sweep.csv")) as fh:
        want = fh.read()
    assert got == want


def test_domination_profile_mismatch_rejected():
    cfg = ExperimentConfig(
        group={"d": 1, "kappas": [0.5]},
        grid={"n": 64, "length": 8.0},
        multiplier="one",
        battery=["radial-gaussians"],
        p_list=[2],
        s=1.5,
        delta=0.9,  # s/delta not an integer
    )
    with pytest.raises(DomainError):
        domination_check(cfg, t_nodes=5)


def test_domination_identity_multiplier_finite():
    cfg = ExperimentConfig(
        group={"d": 1, "kappas": [0.5]},
        grid={"n": 128, "length": 11.0},
        multiplier="one",
        battery=[{"kind": "gaussian", "a": 0.5}],
        p_list=[2],
        s=1.5,
        delta=0.75,
    )
    res = domination_check(cfg, t_nodes=21)
    assert len(res) == 1
    assert np.isfinite(res[0].pointwise_constant) and res[0].pointwise_constant > 0
    assert np.isfinite(res[0].integrated_constant)
    assert res[0].denominator_floor_hits == 0


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_kernel_eval():
    runner = CliRunner()
    out = runner.invoke(
        cli_main, ["kernel-eval", "--group", "0.5", "--x", "1.5", "--y", "2.0"]
    )
    assert out.exit_code == 0
    assert "|E|" in out.output


def test_cli_kernel_eval_bad_group_usage_error():
    runner = CliRunner()
    out = runner.invoke(
        cli_main, ["kernel-eval", "--group", "-1.0", "--x", "1", "--y", "1"]
    )
    assert out.exit_code == 2


def test_cli_leibniz_verify_exit_zero():
    runner = CliRunner()
    out = runner.invoke(cli_main, ["leibniz", "verify", "--alpha", "2", "--alpha", "1", "--d", "2"])
    assert out.exit_code == 0, out.output
    assert "identities exact" in out.output


def test_cli_leibniz_expand_stable_text():
    runner = CliRunner()
    out = runner.invoke(cli_main, ["leibniz", "expand", "--alpha", "1"])
    assert out.exit_code == 0
    assert "Dr^1 h" in out.output
    out2 = runner.invoke(cli_main, ["leibniz", "expand", "--alpha", "2", "--radial"])
    assert out2.exit_code == 0 and "m0" in out2.output


def test_cli_transform_roundtrip(tmp_path, tr1_half):
    from dunklkit.grid import field_to_csv

    f = sample(tr1_half.grid, gaussian(1, a=1.0))
    src = tmp_path / "f.csv"
    field_to_csv(f, src)
    dst = tmp_path / "F.csv"
    runner = CliRunner()
    out = runner.invoke(
        cli_main,
        ["transform", "--group", "0.5", "--n", "192", "--length", "11.0",
         "--in", str(src), "--out", str(dst)],
    )
    assert out.exit_code == 0, out.output
    assert dst.exists()


def test_cli_hormander_check_writes_reports(tmp_path):
    runner = CliRunner()
    outdir = tmp_path / "rep"
    out = runner.invoke(
        cli_main,
        ["hormander-check", "--group", "0.5", "--m", "one", "--s", "2",
         "--n", "96", "--length", "10.0", "--out", str(outdir), "--no-refine"],
    )
    assert out.exit_code == 0, out.output
    assert (outdir / "hormander_per_t.csv").exists()
    assert (outdir / "hormander_summary.json").exists()
    assert (outdir / "hormander.png").exists()
    assert "satisfied" in out.output


def test_cli_multiplier_sweep_and_seed(tmp_path):
    runner = CliRunner()
    outdir = tmp_path / "sweep"
    out = runner.invoke(
        cli_main,
        ["multiplier-sweep", "--config", os.path.join(REPO, "configs", "sweep_golden.json"),
         "--out", str(outdir), "--seed", "42", "--no-plots"],
    )
    assert out.exit_code == 0, out.output
    summary = json.loads((outdir / "sweep_summary.json").read_text())
    assert summary["seed"] == 42 and summary["plancherel_ok"]
    # the CLI-produced table reproduces the frozen golden bit-exactly
    got = (outdir / "sweep.csv").read_text()
    want = open(os.path.join(REPO, "tests", "golden", "sweep.csv")).read()
    assert got == want


def test_cli_sweep_bad_config_exit_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    runner = CliRunner()
    out = runner.invoke(cli_main, ["multiplier-sweep", "--config", str(bad)])
    assert out.exit_code == 2


def test_cli_gfunc_outputs(tmp_path):
    runner = CliRunner()
    outdir = tmp_path / "g"
    out = runner.invoke(
        cli_main,
        ["gfunc", "--group", "0.5", "--s", "1", "--field", "x1*exp(-x1**2/2)",
         "--n", "128", "--length", "10.0", "--out", str(outdir)],
    )
    assert out.exit_code == 0, out.output
    assert (outdir / "gfunc.csv").exists()
    assert (outdir / "gfunc.png").exists()
    summary = json.loads((outdir / "gfunc_summary.json").read_text())
    assert summary["l2_ratio_g"] == pytest.approx(summary["l2_constant_exact"], abs=2e-3)


def test_cli_domination(tmp_path):
    runner = CliRunner()
    outdir = tmp_path / "dom"
    out = runner.invoke(
        cli_main,
        ["domination", "--config", os.path.join(REPO, "configs", "domination_small.json"),
         "--t-nodes", "15", "--out", str(outdir), "--no-plots"],
    )
    assert out.exit_code == 0, out.output
    assert (outdir / "domination.csv").exists()


def test_outdir_env_override(tmp_path, monkeypatch):
    target = tmp_path / "env_out"
    monkeypatch.setenv("DUNKLKIT_OUTDIR", str(target))
    from dunklkit.report import ensure_outdir

    got = ensure_outdir("ignored")
    assert got == str(target) and target.exists()
