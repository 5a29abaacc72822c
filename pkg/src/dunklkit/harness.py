"""Multiplier operators, L^p sweeps, and the pointwise domination check.

The multiplier operator acts spectrally, F(T_m f) = m . F f, so the p=2
ratio obeys the Plancherel bound ||T_m f||_2 <= sup|m| ||f||_2 exactly.
L^p sweeps over function batteries accumulate desk-scale evidence for
the boundedness theorems: a sweep can falsify (ratios blowing up under
refinement) or accumulate evidence, never prove.

The domination check measures the constant in the square-function
inequality that drives the multiplier theorems,

    g_{k+1,delta}(T_m f, x) <= C g*_{s,delta}(f, x),

in both the integrated form (ratio of the two square functions) and the
proof-level pointwise form: the quotient of |G_{k+1,delta} T_m f(x, 2t)|^2
(note the factor 2: G is evaluated at time 2t against the t of the
right side) by t^{-2s/delta - d_k/(2 delta)} times the translated-weight
integral of |d_t T_{t,delta} f|^2.

Two theorem modes are enforced: the radial-multiplier mode requires m
radial (any 1 < p < infinity); the radial-battery mode requires every
battery field radial and p >= 2 only, since duality is unavailable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .fields import ScalarField, dilate, field_from_expr, gaussian, poly_times_gaussian
from .grid import QuadratureGrid, SampledField, make_grid, norm_lp
from .hormander import MultiplierSpec, multiplier_from_dsl
from .root_system import ReflectionGroupSpec, group_from_config
from .semigroup import (
    SquareFunctionProfile,
    TimeGrid,
    G_fields,
    _dt_semigroup_fields,
    g_function,
    g_star_grid,
    make_profile,
    validate_weight_translation,
)
from .transform import DunklTransform


def apply_multiplier(tr: DunklTransform, m: MultiplierSpec, f) -> SampledField:
    """T_m f = inverse(m . F f)."""
    F = tr.forward(f, tail_check=False)
    mv = m.values(tr.grid.points)
    return tr.inverse(SampledField(tr.grid, mv * F.values, "frequency"), tail_check=False)


def lp_norm(grid: QuadratureGrid, f, p: float) -> float:
    """||f||_p against h^2 dx (p = inf for the grid max)."""
    return norm_lp(grid, f, p)


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

MODE_RADIAL_MULTIPLIER = "radial-multiplier"  # theorem: m radial, any p
MODE_RADIAL_BATTERY = "radial-battery"        # theorem: f radial, p >= 2


@dataclass
class ExperimentConfig:
    group: dict
    grid: dict                      # {"n": int, "length": float}
    multiplier: str                 # DSL text
    battery: list                   # list of field spec dicts, or ["standard"] ...
    p_list: list
    s: float
    delta: float | None = None
    mode: str = MODE_RADIAL_MULTIPLIER
    seed: int = 1234
    t_range: tuple = (1e-3, 1e3)
    t_nodes: int = 61
    dilations: tuple = (0.5, 1.0, 2.0)
    output_dir: str = "out"
    plots: bool = True

    @classmethod
    def from_json(cls, path_or_text: str) -> "ExperimentConfig":
        if os.path.exists(path_or_text):
            with open(path_or_text) as fh:
                data = json.load(fh)
        else:
            data = json.loads(path_or_text)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad experiment config: {exc}") from exc

    def build(self):
        group = group_from_config(self.group)
        grid = make_grid(group, n=int(self.grid.get("n", 128)),
                         length=float(self.grid.get("length", 12.0)))
        tr = DunklTransform(group, grid)
        m = multiplier_from_dsl(self.multiplier, group.d)
        battery = build_battery(group, self.battery)
        self.validate(m, battery)
        return tr, m, battery

    def validate(self, m: MultiplierSpec, battery) -> None:
        if self.mode not in (MODE_RADIAL_MULTIPLIER, MODE_RADIAL_BATTERY):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_RADIAL_MULTIPLIER and not m.radial:
            raise ConfigError(
                "radial-multiplier mode requires a radial multiplier; "
                f"{m.label!r} is not radial"
            )
        if self.mode == MODE_RADIAL_BATTERY:
            if any(p < 2 for p in self.p_list):
                raise ConfigError(
                    "radial-battery mode admits p >= 2 only (no duality below 2)"
                )
            bad = [f.label for f in battery if not f.is_radial]
            if bad:
                raise ConfigError(
                    f"radial-battery mode requires radial fields; non-radial: {bad}"
                )


def bandpass_field(group: ReflectionGroupSpec, scale: float = 1.0) -> ScalarField:
    """(d_k - r^2/scale^2) exp(-r^2 / 2 scale^2) -- radial with exactly
    vanishing h^2-mean: its transform is scale^{d_k+2} |xi|^2
    exp(-scale^2 |xi|^2 / 2), zero to second order at the origin, so the
    field is fully resolved by a truncated grid (no sub-resolution
    spectral mass)."""
    dk = group.d_k
    a = 1.0 / (2.0 * scale * scale)
    f = field_from_expr(
        group.d,
        f"({dk} - r**2/{scale * scale}) * exp(-r**2 * {a})",
        label=f"bandpass(scale={scale:g})",
    )
    return f


def build_battery(group: ReflectionGroupSpec, spec) -> list:
    """Battery of ScalarFields from spec dicts or a named preset.

    Presets: "radial-gaussians" (Gaussians and dilates, all radial),
    "radial-bandpass" (zero-mean radial fields, spectrum vanishing at
    the origin) and "standard" (Gaussians plus Gaussian-modulated
    polynomials).
    """
    d = group.d
    if isinstance(spec, str):
        spec = [spec]
    fields = []
    for item in spec:
        if item == "radial-gaussians":
            for a in (0.5, 1.0, 2.0):
                fields.append(gaussian(d, a=a))
            fields.append(field_from_expr(d, "r**2 * exp(-r**2)", label="r2gauss"))
        elif item == "radial-bandpass":
            for scale in (0.7, 1.0, 1.5):
                fields.append(bandpass_field(group, scale))
        elif item == "standard":
            for a in (0.5, 1.0, 2.0):
                fields.append(gaussian(d, a=a))
            fields.append(poly_times_gaussian(d, "x1", a=1.0))
            fields.append(poly_times_gaussian(d, "x1**2", a=1.0))
            fields.append(field_from_expr(d, "r**2 * exp(-r**2)", label="r2gauss"))
            if d >= 2:
                fields.append(poly_times_gaussian(d, "x1*x2", a=1.0))
        elif isinstance(item, dict):
            kind = item.get("kind", "expr")
            if kind == "gaussian":
                fields.append(gaussian(d, a=float(item.get("a", 1.0))))
            elif kind == "poly_gaussian":
                fields.append(
                    poly_times_gaussian(d, item["poly"], a=float(item.get("a", 1.0)))
                )
            elif kind == "expr":
                fields.append(field_from_expr(d, item["expr"], label=item.get("label", "")))
            else:
                raise ConfigError(f"unknown battery kind {kind!r}")
        else:
            raise ConfigError(f"bad battery item {item!r}")
    return fields


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list                     # dicts: field, p, norm_Tmf, norm_f, ratio, dilation_dev
    plancherel_ok: bool
    metadata: dict = field(default_factory=dict)

    def max_ratio(self) -> float:
        return max(r["ratio"] for r in self.rows)

    def table_lines(self) -> list:
        """Stable text rows for CSV/golden files."""
        header = "field,p,norm_Tmf,norm_f,ratio,dilation_dev"
        lines = [header]
        for r in self.rows:
            lines.append(
                f"{r['field']},{r['p']:g},{r['norm_Tmf']:.12e},"
                f"{r['norm_f']:.12e},{r['ratio']:.12e},{r['dilation_dev']:.12e}"
            )
        return lines


def boundedness_sweep(config: ExperimentConfig) -> SweepResult:
    """Measure ||T_m f||_p / ||f||_p across the battery, with a
    dilation-stability column over f_lambda(x) = f(lambda x)."""
    tr, m, battery = config.build()
    rows = []
    plancherel_ok = True
    for f in battery:
        for p in config.p_list:
            Tmf = apply_multiplier(tr, m, f)
            num = lp_norm(tr.grid, Tmf, p)
            den = lp_norm(tr.grid, f, p)
            ratio = num / den
            if p == 2 and ratio > m.sup_bound + 1e-6:
                plancherel_ok = False
            base = None
            devs = []
            for lam in config.dilations:
                fl = dilate(f, lam)
                rl = lp_norm(tr.grid, apply_multiplier(tr, m, fl), p) / lp_norm(
                    tr.grid, fl, p
                )
                if lam == 1.0:
                    base = rl
                devs.append(rl)
            base = base if base is not None else ratio
            dil_dev = max(abs(rv - base) / base for rv in devs)
            rows.append(
                {
                    "field": f.label,
                    "p": p,
                    "norm_Tmf": num,
                    "norm_f": den,
                    "ratio": ratio,
                    "dilation_dev": dil_dev,
                }
            )
    return SweepResult(
        config=config,
        rows=rows,
        plancherel_ok=plancherel_ok,
        metadata={"multiplier": m.label, "sup_bound": m.sup_bound},
    )


# ---------------------------------------------------------------------------
# domination check
# ---------------------------------------------------------------------------

@dataclass
class DominationResult:
    field: str
    multiplier: str
    s: float
    delta: float
    k: int
    pointwise_constant: float      # sup over (x, t) of the proof-level quotient
    integrated_constant: float     # sup over x of g_{k+1}/g*
    denominator_floor_hits: int    # points dropped for vanishing denominator
    metadata: dict = field(default_factory=dict)


def _translated_weight_matrix_1d(tr: DunklTransform, s: float, c: float) -> np.ndarray:
    """(tau(x) W)(-y) for all grid (x, y) at once, W = (1 + c r^2)^{-s}."""
    xg = tr.grid.points[:, 0]
    rule = tr._rosler[0]
    u, wu = rule.nodes, rule.weights
    yg = -xg
    arg2 = (
        xg[:, None, None] ** 2
        + yg[None, :, None] ** 2
        + 2.0 * xg[:, None, None] * yg[None, :, None] * u[None, None, :]
    )
    np.maximum(arg2, 0.0, out=arg2)
    return (1.0 + c * arg2) ** (-s) @ wu


def domination_check(
    config: ExperimentConfig,
    t_nodes: int = 41,
    t_range: tuple = (1e-2, 1e1),
    validate: bool = True,
) -> list:
    """Per-field domination constants for the configured multiplier.

    Requires the profile pairing s/delta = k (integer).  Pointwise form
    pairs G at time 2t with the right side at time t, exactly as in the
    norm-equivalence proof.  The default t-window stays inside the
    grid's resolvable band: beyond t ~ (3/xi_min)^(2 delta) the spectral
    window is narrower than the smallest grid frequency and both sides
    of the quotient become resolution artifacts.
    """
    tr, m, battery = config.build()
    if tr.group.d != 1:
        raise ConfigError("domination check is implemented for d = 1")
    delta = config.delta
    prof = make_profile(config.s, delta)
    s, delta, k = prof.s, prof.delta, int(round(prof.k))
    if validate:
        validate_weight_translation(tr, s, 1.0)

    tg = TimeGrid.log(t_range[0], t_range[1], t_nodes)
    d_k = tr.group.d_k
    gw = tr.grid.weights
    results = []
    for f in battery:
        Tmf = apply_multiplier(tr, m, f)
        # numerator fields: G_{k+1,delta} T_m f at times 2t
        GT = G_fields(tr, (k + 1) * delta, delta, Tmf, 2.0 * tg.nodes)
        dtf = _dt_semigroup_fields(tr, delta, f, tg.nodes)
        point_sup = 0.0
        floor_hits = 0
        for i, t in enumerate(tg.nodes):
            c = t ** (-1.0 / delta)
            TW = _translated_weight_matrix_1d(tr, s, c)
            den = t ** (-2.0 * s / delta - d_k / (2.0 * delta)) * (
                TW @ (gw * np.abs(dtf[i]) ** 2)
            ).real
            num = np.abs(GT[i]) ** 2
            floor = max(float(den.max()), 1e-300) * 1e-14
            ok = den > floor
            floor_hits += int(np.sum(~ok & (num > floor)))
            if np.any(ok):
                point_sup = max(point_sup, float(np.max(num[ok] / den[ok])))

        # integrated form
        gprof = SquareFunctionProfile(
            s=(k + 1) * delta, delta=delta, k=float(k + 1), t_grid=prof.t_grid
        )
        g_num = g_function(tr, gprof, Tmf)
        g_den = g_star_grid(tr, prof, f, validate=False)
        okx = g_den > max(float(g_den.max()), 1e-300) * 1e-10
        integrated = float(np.max(g_num[okx] / g_den[okx]))
        results.append(
            DominationResult(
                field=f.label,
                multiplier=m.label,
                s=s,
                delta=delta,
                k=k,
                pointwise_constant=point_sup,
                integrated_constant=integrated,
                denominator_floor_hits=floor_hits,
                metadata={"grid_n": tr.grid.n, "t_nodes": t_nodes},
            )
        )
    return results
