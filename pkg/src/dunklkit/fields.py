"""Scalar fields: callables on R^d with structure flags.

A field carries a vectorized evaluator (points of shape (M, d) map to a
complex array (M,)), plus flags that unlock exact code paths:
``is_polynomial`` fields hold a sympy expression and are differentiated
exactly; ``is_radial`` fields hold a profile r -> value used by the
density form of the translation operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import sympy as sp


def sym_vars(d: int):
    """Coordinate symbols x1..xd (real)."""
    return sp.symbols(f"x1:{d + 1}", real=True)


_R = sp.Symbol("r", nonnegative=True)


def radius_symbol() -> sp.Symbol:
    return _R


def as_points(x, d: int) -> tuple[np.ndarray, bool]:
    """Coerce (d,) or (M, d) input to (M, d); report whether it was a
    single point."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != d:
            raise ValueError(f"point has dimension {arr.shape[0]}, expected {d}")
        return arr[None, :], True
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ValueError(f"expected (M, {d}) points, got shape {arr.shape}")
    return arr, False


@dataclass
class ScalarField:
    """A complex-valued function on R^d with optional structure."""

    d: int
    eval: Callable[[np.ndarray], np.ndarray]
    is_radial: bool = False
    is_polynomial: bool = False
    is_g_invariant: bool = False
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    expr: Optional[sp.Expr] = None
    profile_expr: Optional[sp.Expr] = None
    label: str = ""

    def __call__(self, x) -> np.ndarray:
        pts, single = as_points(x, self.d)
        vals = np.asarray(self.eval(pts), dtype=complex)
        return vals[0] if single else vals


def _lambdify(args, expr):
    fn = sp.lambdify(args, expr, modules=["numpy"])

    def wrapped(*a):
        out = fn(*a)
        return np.asarray(out, dtype=complex) + np.zeros(np.broadcast_shapes(*(np.shape(x) for x in a)), dtype=complex)

    return wrapped


def field_from_expr(d: int, expr, label: str = "") -> ScalarField:
    """Field from a sympy expression (or parseable string) in x1..xd.

    The radial symbol r is accepted and replaced by |x|;  purely radial
    expressions also get a profile.
    """
    xs = sym_vars(d)
    if isinstance(expr, str):
        expr = sp.sympify(expr, locals={"r": _R, **{f"x{j+1}": xs[j] for j in range(d)}})
    expr = sp.sympify(expr)

    radial_only = expr.free_symbols <= {_R}
    r2 = sum(x**2 for x in xs)
    full = expr.subs(_R, sp.sqrt(r2)) if _R in expr.free_symbols else expr
    fn = _lambdify(xs, full)

    profile = None
    profile_expr = None
    if radial_only:
        profile_expr = expr
        pf = _lambdify([_R], expr)
        profile = lambda rr: pf(np.asarray(rr, dtype=float))

    is_poly = full.is_polynomial(*xs)
    # even polynomials in r (polynomials in r^2) are G-invariant; so is
    # anything depending on the coordinates only через x_j^2
    inv = radial_only or all(
        sp.simplify(full - full.subs({x: -x}, simultaneous=True)) == 0 for x in xs
    )

    def evaluator(pts):
        return fn(*(pts[:, j] for j in range(d)))

    def radial_eval(pts):
        return profile(np.sqrt(np.sum(pts * pts, axis=1)))

    return ScalarField(
        d=d,
        eval=radial_eval if radial_only else evaluator,
        is_radial=bool(radial_only),
        is_polynomial=bool(is_poly),
        is_g_invariant=bool(inv),
        profile=profile,
        expr=full,
        profile_expr=profile_expr,
        label=label or str(expr),
    )


def gaussian(d: int, a: float = 0.5, label: str = "") -> ScalarField:
    """exp(-a |x|^2), radial, G-invariant."""
    aa = float(a)

    def profile(rr):
        return np.exp(-aa * np.asarray(rr, dtype=float) ** 2) + 0j

    def evaluator(pts):
        return np.exp(-aa * np.sum(pts * pts, axis=1)) + 0j

    xs = sym_vars(d)
    r2 = sum(x**2 for x in xs)
    return ScalarField(
        d=d,
        eval=evaluator,
        is_radial=True,
        is_polynomial=False,
        is_g_invariant=True,
        profile=profile,
        expr=sp.exp(-aa * r2),
        profile_expr=sp.exp(-aa * _R**2),
        label=label or f"gauss(a={a})",
    )


def poly_times_gaussian(d: int, poly: str, a: float = 1.0, label: str = "") -> ScalarField:
    """p(x) * exp(-a |x|^2) for a polynomial p given as a string."""
    xs = sym_vars(d)
    p = sp.sympify(poly, locals={f"x{j+1}": xs[j] for j in range(d)})
    expr = p * sp.exp(-float(a) * sum(x**2 for x in xs))
    f = field_from_expr(d, expr, label=label or f"({poly})*gauss(a={a})")
    return f


def dilate(f: ScalarField, lam: float) -> ScalarField:
    """f_lam(x) = f(lam x)."""
    lam = float(lam)
    return ScalarField(
        d=f.d,
        eval=lambda pts: f.eval(lam * pts),
        is_radial=f.is_radial,
        is_polynomial=f.is_polynomial,
        is_g_invariant=f.is_g_invariant,
        profile=(lambda rr: f.profile(lam * np.asarray(rr))) if f.profile else None,
        expr=None,
        label=f"{f.label}@dilate({lam})",
    )
