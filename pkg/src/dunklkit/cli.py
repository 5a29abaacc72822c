"""Command-line interface.

Subcommands: kernel-eval, transform, gfunc, hormander-check, leibniz
(expand | verify), multiplier-sweep, domination.  Report-producing
commands write CSV + JSON summaries and render figures alongside unless
--no-plots is given.  Exit codes: 0 all enabled assertions pass, 1
assertion failure (report still written), 2 bad configuration/usage.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from .errors import ConfigError, DomainError, TranslationConsistencyError
from .fields import field_from_expr
from .grid import field_from_csv, field_to_csv, make_grid, norm_l2
from .root_system import parse_group
from .transform import DunklTransform
from . import report as rpt


def _group_option(fn):
    return click.option(
        "--group",
        "group_text",
        default="0.0",
        show_default=True,
        help="comma-separated kappas (d inferred), or JSON {d, kappas}",
    )(fn)


def _make_tr(group_text: str, n: int, length: float):
    try:
        group = parse_group(group_text)
    except (ValueError, DomainError) as exc:
        raise click.UsageError(f"bad --group: {exc}")
    grid = make_grid(group, n=n, length=length)
    return DunklTransform(group, grid)


@click.group()
def main():
    """Desk-scale Dunkl analysis: transforms, square functions,
    multiplier condition checks, and the exact Leibniz engine."""


@main.command("kernel-eval")
@_group_option
@click.option("--x", "x_text", required=True, help="comma-separated point")
@click.option("--y", "y_text", required=True, help="comma-separated point")
def kernel_eval(group_text, x_text, y_text):
    """Evaluate the kernel E(ix, y) at a pair of points."""
    from .operators import dunkl_kernel

    try:
        group = parse_group(group_text)
    except (ValueError, DomainError) as exc:
        raise click.UsageError(f"bad --group: {exc}")
    x = np.array([float(v) for v in x_text.split(",")])
    y = np.array([float(v) for v in y_text.split(",")])
    if x.shape != (group.d,) or y.shape != (group.d,):
        raise click.UsageError(f"points must have dimension {group.d}")
    val = dunkl_kernel(group, x, y)
    click.echo(f"E(ix, y) = {val.real:+.15e} {val.imag:+.15e}i   |E| = {abs(val):.15e}")
    if abs(val) > 1.0 + 1e-10:
        click.echo("bound |E| <= 1 violated", err=True)
        sys.exit(1)


@main.command("transform")
@_group_option
@click.option("--n", default=128, show_default=True)
@click.option("--length", default=12.0, show_default=True)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--inverse", is_flag=True, help="apply the inverse transform")
def transform_cmd(group_text, n, length, in_path, out_path, inverse):
    """Dunkl transform of a sampled field (CSV columns x1..xd, re, im)."""
    tr = _make_tr(group_text, n, length)
    fld = field_from_csv(tr.grid, in_path, side="frequency" if inverse else "physical")
    out = tr.inverse(fld) if inverse else tr.forward(fld)
    field_to_csv(out, out_path)
    click.echo(f"wrote {out_path} (plancherel defect of input: {tr.plancherel_defect(fld):.3e})")


@main.command("gfunc")
@_group_option
@click.option("--s", "s_val", type=float, required=True)
@click.option("--delta", type=float, default=None, help="default: pairing rule")
@click.option("--field", "field_text", default="exp(-r**2/2)", show_default=True)
@click.option("--n", default=128, show_default=True)
@click.option("--length", default=12.0, show_default=True)
@click.option("--out", "out_dir", default="out", show_default=True)
@click.option("--plots/--no-plots", default=True, show_default=True)
@click.option("--with-maximal/--no-maximal", default=True, show_default=True,
              help="include the maximal-function column")
def gfunc_cmd(group_text, s_val, delta, field_text, n, length, out_dir, plots, with_maximal):
    """Square functions g, g* (and optionally M) of a field, per grid x."""
    from .semigroup import g_function, g_star_grid, make_profile, maximal

    tr = _make_tr(group_text, n, length)
    try:
        prof = make_profile(s_val, delta)
    except DomainError as exc:
        raise click.UsageError(str(exc))
    f = field_from_expr(tr.group.d, field_text)
    g_vals = g_function(tr, prof, f)
    try:
        gs_vals = g_star_grid(tr, prof, f)
    except TranslationConsistencyError as exc:
        click.echo(f"translation density validation failed: {exc}", err=True)
        sys.exit(1)
    curves = {"g": g_vals, "g_star": gs_vals}
    if with_maximal:
        from .semigroup import TimeGrid

        curves["maximal"] = maximal(
            tr, f, prof.s, prof.delta,
            t_grid=TimeGrid.log(1e-2, 1e2, 31), validate=False,
        )

    out_dir = rpt.ensure_outdir(out_dir)
    header = ",".join(
        [f"x{j+1}" for j in range(tr.group.d)] + list(curves.keys())
    )
    rows = [
        [f"{c:.12e}" for c in pt] + [f"{curves[k][i]:.12e}" for k in curves]
        for i, pt in enumerate(tr.grid.points)
    ]
    csv_path = rpt.write_csv(os.path.join(out_dir, "gfunc.csv"), header, rows)
    summary = {
        "s": prof.s,
        "delta": prof.delta,
        "k": prof.k,
        "field": field_text,
        "group": tr.group.to_config(),
        "l2_ratio_g": float(
            np.sqrt(np.sum(tr.grid.weights * g_vals**2)) / norm_l2(tr.grid, f)
        ),
        "l2_constant_exact": prof.l2_constant,
    }
    rpt.write_json(os.path.join(out_dir, "gfunc_summary.json"), summary)
    if plots and tr.group.d == 1:
        rpt.fig_gfunctions(
            tr.grid.points[:, 0], curves, os.path.join(out_dir, "gfunc.png"),
            title=f"s={prof.s:g}, delta={prof.delta:g}, f={field_text}",
        )
    click.echo(f"wrote {csv_path}")


@main.command("hormander-check")
@_group_option
@click.option("--m", "m_text", required=True, help="multiplier DSL")
@click.option("--s", "s_val", type=float, required=True)
@click.option("--delta", type=float, default=1.0, show_default=True)
@click.option("--n", default=128, show_default=True)
@click.option("--length", default=12.0, show_default=True)
@click.option("--no-refine", is_flag=True)
@click.option("--out", "out_dir", default="out", show_default=True)
@click.option("--plots/--no-plots", default=True, show_default=True)
def hormander_cmd(group_text, m_text, s_val, delta, n, length, no_refine, out_dir, plots):
    """Sweep the modified condition; CSV + JSON + figure; exit 1 if the
    verdict is not 'satisfied (up to grid)'."""
    from .hormander import check_modified_hormander, multiplier_from_dsl

    tr = _make_tr(group_text, n, length)
    try:
        m = multiplier_from_dsl(m_text, tr.group.d)
    except Exception as exc:
        raise click.UsageError(f"bad multiplier DSL: {exc}")
    rep = check_modified_hormander(tr, m, s_val, delta, refine=not no_refine)
    out_dir = rpt.ensure_outdir(out_dir)
    rows = [[f"{t:.12e}", f"{v:.12e}"] for t, v in zip(rep.t_nodes, rep.values)]
    rpt.write_csv(os.path.join(out_dir, "hormander_per_t.csv"), "t,value", rows)
    rpt.write_json(os.path.join(out_dir, "hormander_summary.json"), rep.to_dict())
    if plots:
        rpt.fig_condition_report(rep, os.path.join(out_dir, "hormander.png"))
    click.echo(
        f"sup = {rep.sup:.6g}  verdict: {rep.verdict}  "
        f"max route residual: {rep.max_equivalence_residual():.3e}"
    )
    if rep.verdict != "satisfied (up to grid)":
        click.echo(f"report: {out_dir}/hormander_summary.json", err=True)
        sys.exit(1)


@main.group("leibniz")
def leibniz_group():
    """Exact higher-order Leibniz expansions."""


def _parse_alpha(alpha):
    return tuple(int(a) for a in alpha)


@leibniz_group.command("expand")
@click.option("--alpha", type=int, multiple=True, required=True,
              help="multi-index, one value per axis (repeat the flag)")
@click.option("--kappas", default="", help="numeric kappas; default symbolic")
@click.option("--radial", is_flag=True, help="use the both-radial form")
def leibniz_expand_cmd(alpha, kappas, radial):
    """Print the expansion of D^alpha(m g) in a stable text form."""
    import sympy as sp

    from .leibniz import SymbolicGroup, leibniz_expand, radial_leibniz_expand

    alpha = _parse_alpha(alpha)
    kaps = [sp.nsimplify(v) for v in kappas.split(",")] if kappas else None
    group = SymbolicGroup(len(alpha), kaps)
    if radial:
        terms = radial_leibniz_expand(group, alpha)
        click.echo(f"D^{list(alpha)} (m g), both radial; Dr = r^-1 d/dr:")
        for t in sorted(terms, key=lambda t: (t.k, t.l)):
            click.echo(f"  [{t.poly}] * Dr^{t.k} m0 * Dr^{t.l} h   (degree {t.j})")
    else:
        click.echo(leibniz_expand(group, alpha).pretty())


@leibniz_group.command("verify")
@click.option("--alpha", type=int, multiple=True, required=True)
@click.option("--d", "dim", type=int, default=None)
def leibniz_verify_cmd(alpha, dim):
    """Run the exact oracle battery for one multi-index; exit nonzero on
    any mismatch."""
    import sympy as sp

    from .leibniz import (
        R2,
        SymbolicGroup,
        evaluate_expansion,
        evaluate_radial_expansion,
        iterated_reference,
        leibniz_expand,
        radial_leibniz_expand,
    )

    alpha = _parse_alpha(alpha)
    d = dim or len(alpha)
    if len(alpha) != d:
        raise click.UsageError("--alpha arity must match --d")
    group = SymbolicGroup(d)
    xs = group.xs
    m_battery = [sp.Integer(1), xs[0], xs[0] ** 2, xs[0] ** 3 + xs[0]]
    if d >= 2:
        m_battery += [xs[0] * xs[1], xs[1] ** 2 + 2 * xs[0]]
    h_battery = [sp.Integer(1), R2, 3 - R2 + 2 * R2**2]
    exp = leibniz_expand(group, alpha)
    bad = 0
    for m in m_battery:
        for h in h_battery:
            lhs = evaluate_expansion(exp, m, h)
            rhs = iterated_reference(group, alpha, m, h)
            if sp.expand(lhs - rhs) != 0:
                bad += 1
                click.echo(f"MISMATCH general: m={m}, h={h}", err=True)
    rterms = radial_leibniz_expand(group, alpha)
    r2x = sum(x**2 for x in xs)
    for m0 in [sp.Integer(1), R2, 1 + 2 * R2]:
        for h in h_battery:
            lhs = evaluate_radial_expansion(group, rterms, m0, h)
            rhs = iterated_reference(group, alpha, m0.subs(R2, r2x), h)
            if sp.expand(lhs - rhs) != 0:
                bad += 1
                click.echo(f"MISMATCH radial: m0={m0}, h={h}", err=True)
    n_checks = len(m_battery) * len(h_battery) + 3 * len(h_battery)
    click.echo(f"{n_checks - bad}/{n_checks} identities exact for alpha={list(alpha)}")
    if bad:
        sys.exit(1)


def _load_config(path, seed=None, out_dir=None):
    from .harness import ExperimentConfig

    try:
        cfg = ExperimentConfig.from_json(path)
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        raise click.UsageError(f"bad config: {exc}")
    if seed is not None:
        cfg.seed = seed
    if out_dir is not None:
        cfg.output_dir = out_dir
    return cfg


@main.command("multiplier-sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", default=None)
@click.option("--plots/--no-plots", default=None)
def sweep_cmd(config_path, seed, out_dir, plots):
    """Run the L^p ratio sweep described by a config file."""
    from .harness import boundedness_sweep

    cfg = _load_config(config_path, seed, out_dir)
    if plots is not None:
        cfg.plots = plots
    try:
        res = boundedness_sweep(cfg)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    out = rpt.ensure_outdir(cfg.output_dir)
    rpt.write_lines(os.path.join(out, "sweep.csv"), res.table_lines())
    summary = {
        "multiplier": res.metadata["multiplier"],
        "sup_bound": res.metadata["sup_bound"],
        "max_ratio": res.max_ratio(),
        "plancherel_ok": res.plancherel_ok,
        "seed": cfg.seed,
    }
    rpt.write_json(os.path.join(out, "sweep_summary.json"), summary)
    if cfg.plots:
        rpt.fig_sweep(res, os.path.join(out, "sweep.png"))
    click.echo(f"wrote {out}/sweep.csv  max ratio {res.max_ratio():.6g}")
    if not res.plancherel_ok:
        click.echo(f"Plancherel p=2 bound violated; see {out}/sweep_summary.json", err=True)
        sys.exit(1)


@main.command("domination")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--t-nodes", default=41, show_default=True)
@click.option("--out", "out_dir", default=None)
@click.option("--plots/--no-plots", default=None)
def domination_cmd(config_path, t_nodes, out_dir, plots):
    """Measure the pointwise domination constants for a config."""
    from .harness import domination_check

    cfg = _load_config(config_path, None, out_dir)
    if plots is not None:
        cfg.plots = plots
    try:
        results = domination_check(cfg, t_nodes=t_nodes)
    except (ConfigError, DomainError) as exc:
        raise click.UsageError(str(exc))
    out = rpt.ensure_outdir(cfg.output_dir)
    rows = [
        [r.field, f"{r.pointwise_constant:.12e}", f"{r.integrated_constant:.12e}",
         str(r.denominator_floor_hits)]
        for r in results
    ]
    rpt.write_csv(
        os.path.join(out, "domination.csv"),
        "field,pointwise_constant,integrated_constant,floor_hits",
        rows,
    )
    rpt.write_json(
        os.path.join(out, "domination_summary.json"),
        {
            "multiplier": results[0].multiplier if results else "",
            "s": cfg.s,
            "delta": cfg.delta,
            "constants": {r.field: r.pointwise_constant for r in results},
        },
    )
    if cfg.plots:
        rpt.fig_domination(results, os.path.join(out, "domination.png"))
    finite = all(
        np.isfinite(r.pointwise_constant) and np.isfinite(r.integrated_constant)
        for r in results
    )
    click.echo(
        "constants: "
        + ", ".join(f"{r.field}: {r.pointwise_constant:.4g}" for r in results)
    )
    if not finite:
        click.echo(f"non-finite constant; see {out}/domination_summary.json", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
