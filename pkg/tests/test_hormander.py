import math

import numpy as np
import pytest
import sympy as sp

from dunklkit.errors import DomainError
from dunklkit.grid import make_grid
from dunklkit.hormander import (
    check_derivative_decay,
    check_modified_hormander,
    check_sobolev_form,
    dyadic_hormander_classical,
    m_hat,
    m_hat_field,
    m_tilde,
    m_tilde_field,
    mod_hm_value,
    modi_h_value,
    multiplier_from_dsl,
)
from dunklkit.root_system import make_z2d
from dunklkit.semigroup import TimeGrid
from dunklkit.transform import DunklTransform


# ---------------------------------------------------------------------------
# multiplier DSL
# ---------------------------------------------------------------------------

def test_dsl_shortcuts():
    m1 = multiplier_from_dsl("one", 1)
    assert m1.radial and m1.sup_bound == pytest.approx(1.0)
    m2 = multiplier_from_dsl("imagpow(2.0)", 1)
    assert m2.radial
    vals = m2.values(np.array([[1.0], [2.0]]))
    assert np.allclose(np.abs(vals), 1.0)
    m3 = multiplier_from_dsl("axis_ratio(0.5)", 2)
    assert not m3.radial
    assert m3.sup_bound <= 1.0 + 1e-9


def test_dsl_sympy_expression():
    m = multiplier_from_dsl("x1**2/(1 + r**2)", 2)
    v = m.values(np.array([[1.0, 1.0]]))
    assert v[0] == pytest.approx(1.0 / 3.0)


# ---------------------------------------------------------------------------
# windowed transforms
# ---------------------------------------------------------------------------

def test_m_hat_gaussian_moment_oracle(tr1_zero):
    # kappa = 0, m = 1: closed Gaussian-moment forms
    m = multiplier_from_dsl("one", 1)
    x = np.array([0.8])
    # s = 0: int e^{i x xi} e^{-xi^2} dxi = sqrt(pi) e^{-x^2/4}
    got0 = m_hat(tr1_zero, m, 0.0, 1.0, x, 1.0)
    assert got0 == pytest.approx(math.sqrt(math.pi) * math.exp(-x[0] ** 2 / 4), rel=1e-10)
    # s = 1: int e^{i x xi} xi^2 e^{-xi^2} dxi = sqrt(pi)(1/2 - x^2/4) e^{-x^2/4}
    got1 = m_hat(tr1_zero, m, 1.0, 1.0, x, 1.0)
    want1 = math.sqrt(math.pi) * (0.5 - x[0] ** 2 / 4) * math.exp(-x[0] ** 2 / 4)
    assert got1 == pytest.approx(want1, rel=1e-9)


def test_m_hat_t_invariance_for_one(tr1_half):
    m = multiplier_from_dsl("one", 1)
    x = np.array([0.5])
    vals = [m_hat(tr1_half, m, 2.0, 1.0, x, t) for t in (0.1, 1.0, 10.0)]
    assert abs(vals[0] - vals[1]) <= 1e-8 * abs(vals[1])
    assert abs(vals[2] - vals[1]) <= 1e-8 * abs(vals[1])


def test_m_tilde_equals_m_hat_at_t_one(tr1_half):
    m = multiplier_from_dsl("imagpow(1.0)", 1)
    x = np.array([0.7])
    assert m_tilde(tr1_half, m, 2.0, 1.0, x, 1.0) == pytest.approx(
        m_hat(tr1_half, m, 2.0, 1.0, x, 1.0), rel=1e-12
    )


def test_m_tilde_scaling_relation(tr1_half):
    # m_tilde(x, t) = t^{-(2s + d_k)/(2 delta)} m_hat(t^{-1/(2 delta)} x, t)
    m = multiplier_from_dsl("heat", 1)
    s, delta = 2.0, 1.0
    d_k = tr1_half.group.d_k
    for t in (0.5, 2.0):
        for x0 in (0.4, 1.1):
            x = np.array([x0])
            lhs = m_tilde(tr1_half, m, s, delta, x, t)
            rhs = t ** (-(2 * s + d_k) / (2 * delta)) * m_hat(
                tr1_half, m, s, delta, t ** (-1 / (2 * delta)) * x, t
            )
            assert abs(lhs - rhs) / abs(rhs) < 1e-6


def test_field_and_pointwise_agree(tr1_half):
    m = multiplier_from_dsl("one", 1)
    fld = m_hat_field(tr1_half, m, 2.0, 1.0, 1.0)
    ix = 77
    x = tr1_half.grid.points[ix]
    assert fld[ix] == pytest.approx(m_hat(tr1_half, m, 2.0, 1.0, x, 1.0), rel=1e-11)
    fld2 = m_tilde_field(tr1_half, m, 2.0, 1.0, 0.5)
    assert fld2[ix] == pytest.approx(m_tilde(tr1_half, m, 2.0, 1.0, x, 0.5), rel=1e-11)


# ---------------------------------------------------------------------------
# three routes and the sweep
# ---------------------------------------------------------------------------

def test_three_routes_m_one(tr1_half):
    s = 2.0
    for t in (0.5, 1.0, 2.0):
        m = multiplier_from_dsl("one", 1)
        v1 = modi_h_value(tr1_half, m, s, 1.0, t)
        v2 = mod_hm_value(tr1_half, m, s, 1.0, t, scaled=True)
        v3 = check_sobolev_form(tr1_half, m, s, 1.0, t)
        for a, b in [(v1, v2), (v1, v3), (v2, v3)]:
            assert abs(a - b) / max(abs(a), abs(b)) < 1e-6


def test_sobolev_spectral_fallback_matches(tr1_half):
    # non-even s falls back to the Plancherel route, which must equal the
    # scaled mod-hm value to machine precision
    m = multiplier_from_dsl("one", 1)
    v2 = mod_hm_value(tr1_half, m, 3.0, 1.0, 0.7, scaled=True)
    v3 = check_sobolev_form(tr1_half, m, 3.0, 1.0, 0.7, method="spectral")
    assert v3 == pytest.approx(v2, rel=1e-12)


def test_mod_hm_slope_for_one(tr1_half):
    m = multiplier_from_dsl("one", 1)
    s, delta = 2.0, 1.0
    ts = [0.5, 1.0, 2.0]
    raws = [mod_hm_value(tr1_half, m, s, delta, t, scaled=False) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(raws), 1)[0]
    expect = -2 * s / delta - tr1_half.group.d_k / (2 * delta)
    assert abs(slope - expect) / abs(expect) < 0.02


def test_condition_report_satisfied(tr1_half):
    m = multiplier_from_dsl("one", 1)
    rep = check_modified_hormander(
        tr1_half, m, 2.0, 1.0, t_grid=TimeGrid.log(1e-3, 1e3, 13), refine=True
    )
    assert rep.verdict == "satisfied (up to grid)"
    # per-t values are constant for m = 1
    assert np.max(rep.values) / np.min(rep.values) - 1 < 1e-8
    assert rep.max_equivalence_residual() < 1e-6
    d = rep.to_dict()
    assert d["verdict"] == rep.verdict and len(d["per_t"]) == 13


def test_condition_report_imagpow_stable(tr1_half):
    m = multiplier_from_dsl("imagpow(2.0)", 1)
    rep = check_modified_hormander(
        tr1_half, m, 2.0, 1.0, t_grid=TimeGrid.log(1e-2, 1e2, 9), refine=True
    )
    assert rep.verdict == "satisfied (up to grid)"
    assert np.isfinite(rep.sup)


def test_halfspace_symbol_flagged():
    # a half-space indicator in d = 2 jumps along a hyperplane where the
    # window is nonzero: the weighted integral diverges and the
    # box-growing refinement must flag it, never silently pass
    g = make_z2d(2, [0.0, 0.0])
    tr = DunklTransform(g, make_grid(g, n=48, length=7.0))
    m = multiplier_from_dsl("Heaviside(x1)", 2)
    rep = check_modified_hormander(
        tr, m, 2.0, 1.0, t_grid=TimeGrid.log(0.5, 2, 3), refine=True,
        agreement_ts=(1.0,), sobolev_method="spectral",
    )
    assert rep.verdict == "fails / inconclusive"


def test_sup_is_max_of_per_t(tr1_half):
    m = multiplier_from_dsl("heat", 1)
    rep = check_modified_hormander(
        tr1_half, m, 2.0, 1.0, t_grid=TimeGrid.log(1e-2, 1e2, 9), refine=False
    )
    assert rep.sup == pytest.approx(float(np.max(rep.values)))


def test_remark_split_bound(tr1_half):
    # the |x| <= t^{1/(2 delta)} part of the mod-hm integrand is
    # controlled by sup|m|^2 times the m = 1 unweighted full integral
    # (Plancherel over the full space), up to the bounded weight 2^s
    m = multiplier_from_dsl("imagpow(2.0)", 1)
    m1 = multiplier_from_dsl("one", 1)
    s, delta, t = 2.0, 1.0, 1.0
    grid = tr1_half.grid
    mt = m_tilde_field(tr1_half, m, s, delta, t)
    mt1 = m_tilde_field(tr1_half, m1, s, delta, t)
    r2 = np.sum(grid.points**2, axis=1)
    c = t ** (-1.0 / delta)
    inside = r2 <= t ** (1.0 / delta)
    part = np.sum(grid.weights[inside] * (1 + c * r2[inside]) ** s * np.abs(mt[inside]) ** 2)
    full_1 = np.sum(grid.weights * np.abs(mt1) ** 2)
    assert part <= (2.0**s) * (m.sup_bound**2) * full_1 * (1 + 1e-9)


# ---------------------------------------------------------------------------
# derivative decay
# ---------------------------------------------------------------------------

def test_decay_imagpow_bounded():
    # r^j |m0^(j)(r)| = prod |i tau - i| for m0 = r^{i tau}: bounded
    g = make_z2d(1, [0.5])
    m = multiplier_from_dsl("imagpow(2.0)", 1)
    rep = check_derivative_decay(m, 3, g)
    assert rep.bounded
    tau = 2.0
    assert rep.shell_sups[0] == pytest.approx(1.0, rel=1e-9)
    assert rep.shell_sups[1] == pytest.approx(tau, rel=1e-9)
    assert rep.shell_sups[2] == pytest.approx(tau * math.hypot(tau, 1.0), rel=1e-6)
    # Dai-Wang averaged dyadic integrals are bounded too
    assert all(v < 100 for v in rep.dyadic_integrals.values())


def test_decay_constant_multiplier():
    g = make_z2d(1, [0.5])
    m = multiplier_from_dsl("one", 1)
    rep = check_derivative_decay(m, 3, g)
    for j, v in rep.shell_sups.items():
        if j >= 1:
            assert v == 0.0


def test_decay_nonradial_smooth():
    g = make_z2d(2, [0.25, 0.25])
    m = multiplier_from_dsl("x1/(1 + r**2)**0.5", 2)
    rep = check_derivative_decay(m, 2, g, n_samples=24)
    assert rep.bounded
    assert all(np.isfinite(v) for v in rep.shell_sups.values())


def test_decay_needs_symbolic():
    g = make_z2d(1, [0.0])
    from dunklkit.hormander import MultiplierSpec

    m = MultiplierSpec(d=1, fn=lambda p: np.ones(p.shape[0], dtype=complex))
    with pytest.raises(DomainError):
        check_derivative_decay(m, 1, g)


# ---------------------------------------------------------------------------
# classical dyadic condition
# ---------------------------------------------------------------------------

def test_dyadic_classical_one(tr1_zero):
    m = multiplier_from_dsl("one", 1)
    rep = dyadic_hormander_classical(m, 1, tr=tr1_zero)
    assert all(v == 0.0 for a, v in rep.dyadic_constants.items() if a >= 1)
    assert rep.modified_verdict == "satisfied (up to grid)"
    assert rep.psi_periodicity_residual < 1e-3


def test_dyadic_classical_imagpow(tr1_zero):
    m = multiplier_from_dsl("imagpow(2.0)", 1)
    rep = dyadic_hormander_classical(m, 1, tr=tr1_zero)
    assert all(np.isfinite(v) for v in rep.dyadic_constants.values())
    assert rep.modified_verdict == "satisfied (up to grid)"
    assert rep.psi_periodicity_residual < 1e-3


def test_m_tilde_classical_closed_form(tr1_zero):
    # kappa = 0, m = 1, s = 1: int e^{i x xi} xi^2 e^{-t xi^2} dxi
    #   = sqrt(pi) t^{-3/2} (1/2 - x^2/(4t)) e^{-x^2/(4t)}
    m = multiplier_from_dsl("one", 1)
    for t in (0.5, 1.5):
        for x0 in (0.3, 1.2):
            got = m_tilde(tr1_zero, m, 1.0, 1.0, np.array([x0]), t)
            want = (
                math.sqrt(math.pi)
                * t**-1.5
                * (0.5 - x0**2 / (4 * t))
                * math.exp(-(x0**2) / (4 * t))
            )
            assert got == pytest.approx(want, rel=1e-8, abs=1e-12)


def test_imagpow_verdict_at_minimal_order(tr1_half):
    # s = ceil(d_k / 2) = 1 for kappa = 1/2: finite sup, stable verdict
    m = multiplier_from_dsl("imagpow(2.0)", 1)
    rep = check_modified_hormander(
        tr1_half, m, 1.0, 1.0, t_grid=TimeGrid.log(1e-2, 1e2, 9), refine=True
    )
    assert rep.verdict == "satisfied (up to grid)"


def test_esti_one_monomial_route(tr1_half):
    # integer s = k: the weighted x^alpha moment of m_tilde equals the
    # exact-derivative route int |D^alpha W|^2 h^2 / c^2 (Plancherel +
    # the eigen-relation), W = m |xi|^{2k} e^{-t |xi|^2}
    import sympy as sp
    from dunklkit.fields import sym_vars
    from dunklkit.operators import sym_dunkl_multi

    m = multiplier_from_dsl("one", 1)
    k, t = 1, 0.8
    mt = m_tilde_field(tr1_half, m, float(k), 1.0, t)
    x2 = tr1_half.grid.points[:, 0] ** 2
    lhs = float(np.sum(tr1_half.grid.weights * x2 * np.abs(mt) ** 2))

    xs = sym_vars(1)
    W = xs[0] ** (2 * k) * sp.exp(-t * xs[0] ** 2)
    DW = sym_dunkl_multi(W, (1,), xs, tr1_half.group.kappas)
    vals = sp.lambdify(xs, DW, modules=["numpy"])(tr1_half.grid.points[:, 0])
    rhs = float(
        np.sum(tr1_half.grid.weights * np.abs(vals) ** 2)
    ) / tr1_half.group.mehta**2
    assert lhs == pytest.approx(rhs, rel=1e-8)
