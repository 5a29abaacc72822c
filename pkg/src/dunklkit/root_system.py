"""Z2^d reflection groups: roots, multiplicities, weight, normalization.

Only the product group Z2^d is constructible: the root system is
{+-sqrt(2) e_j, j=1..d} (normalized so |lambda|^2 = 2, which makes the
differential-difference operators carry the coefficient kappa(lambda)/2
verbatim), the reflections are independent sign flips of the
coordinates, and the weight is

    h^2(x) = prod_j (sqrt(2) |x_j|)^(2 kappa_j).

The Mehta-type constant c is fixed by  c^{-1} = int exp(-|x|^2/2) h^2 dx,
which factorizes into one-dimensional Gamma integrals,

    c^{-1} = prod_j 2^(2 kappa_j + 1/2) Gamma(kappa_j + 1/2),

stored in closed form and cross-checked by quadrature at construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import roots_jacobi

from .errors import DomainError, NumericalAccuracyError

#: relative tolerance for the closed-form vs quadrature Mehta cross-check
MEHTA_CHECK_RTOL = 1e-8


@dataclass(frozen=True)
class ReflectionGroupSpec:
    """Immutable description of the reflection group Z2^d.

    Attributes
    ----------
    d : dimension
    kappas : multiplicity kappa_j of the roots +-sqrt(2) e_j
    roots : array (2d, d), rows are the roots (j-th pair = +-sqrt(2) e_j)
    gamma_k : sum of multiplicities over positive roots
    d_k : homogeneous dimension d + 2 gamma_k of the measure h^2 dx
    mehta : the constant c with c^{-1} = int exp(-|x|^2/2) h^2 dx
    """

    d: int
    kappas: tuple[float, ...]
    roots: np.ndarray
    gamma_k: float
    d_k: float
    mehta: float

    def __post_init__(self):
        self.roots.setflags(write=False)

    def axis_of_root(self, lam: np.ndarray) -> int:
        """Index j of the axis a given root vector reflects."""
        j = int(np.argmax(np.abs(lam)))
        if not np.allclose(np.abs(lam), np.sqrt(2.0) * np.eye(self.d)[j], atol=1e-12):
            raise DomainError(f"{lam!r} is not a root of Z2^{self.d}")
        return j

    def kappa_of_root(self, lam: np.ndarray) -> float:
        return self.kappas[self.axis_of_root(lam)]

    def to_config(self) -> dict:
        return {"d": self.d, "kappas": list(self.kappas)}

    def to_json(self) -> str:
        return json.dumps(self.to_config())


def _mehta_axis_closed(kappa: float) -> float:
    # int exp(-x^2/2) (sqrt2 |x|)^(2k) dx = 2^(2k+1/2) Gamma(k+1/2)
    return 2.0 ** (2.0 * kappa + 0.5) * _gamma(kappa + 0.5)


def _mehta_axis_quad(kappa: float, length: float = 14.0, n: int = 160) -> float:
    # Gauss-Jacobi in v = (x/L)^2 absorbs the |x|^(2k) factor exactly;
    # see grid.py for the derivation of the node/weight map.
    zeta, w = roots_jacobi(n, 0.0, kappa - 0.5)
    v = 0.5 * (zeta + 1.0)
    x = length * np.sqrt(v)
    wx = length ** (2.0 * kappa + 1.0) * w / (2.0 ** 1.5)
    return float(np.sum(wx * 2.0 * np.exp(-0.5 * x * x)))


def make_z2d(d: int, kappas) -> ReflectionGroupSpec:
    """Build the Z2^d group spec with per-axis multiplicities.

    Raises DomainError for d < 1 or any negative multiplicity.  The
    closed-form Mehta constant is cross-checked against quadrature.
    """
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    kappas = tuple(float(k) for k in kappas)
    if len(kappas) != d:
        raise DomainError(f"expected {d} multiplicities, got {len(kappas)}")
    if any(k < 0 for k in kappas):
        raise DomainError(f"multiplicities must be nonnegative, got {kappas}")

    eye = np.eye(d)
    roots = np.concatenate([np.sqrt(2.0) * eye, -np.sqrt(2.0) * eye], axis=0)
    gamma_k = float(sum(kappas))
    d_k = d + 2.0 * gamma_k

    c_inv = 1.0
    for k in kappas:
        closed = _mehta_axis_closed(k)
        quad = _mehta_axis_quad(k)
        rel = abs(closed - quad) / closed
        if rel > MEHTA_CHECK_RTOL:
            raise NumericalAccuracyError(
                f"Mehta cross-check failed for kappa={k}", residual=rel
            )
        c_inv *= closed

    return ReflectionGroupSpec(
        d=d, kappas=kappas, roots=roots, gamma_k=gamma_k, d_k=d_k, mehta=1.0 / c_inv
    )


def reflect(spec: ReflectionGroupSpec, lam: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Reflection sigma_lambda(x) = x - <x, lambda> lambda.

    ``lam`` must be a root of ``spec``; ``x`` may be a point (d,) or a
    batch (..., d).
    """
    lam = np.asarray(lam, dtype=float)
    spec.axis_of_root(lam)  # validates membership
    x = np.asarray(x, dtype=float)
    return x - np.tensordot(x, lam, axes=(-1, 0))[..., None] * lam


def flip_axis(x: np.ndarray, j: int) -> np.ndarray:
    """sigma_j(x): flip the sign of coordinate j (batch-friendly)."""
    out = np.array(x, dtype=float, copy=True)
    out[..., j] = -out[..., j]
    return out


def weight(spec: ReflectionGroupSpec, x: np.ndarray) -> np.ndarray:
    """The squared weight h^2(x) = prod_j (2 x_j^2)^(kappa_j).

    G-invariant and homogeneous of degree 2 gamma_k.  Accepts (d,) or
    (..., d) input; returns matching scalar/array.
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    pts = np.atleast_2d(x)
    out = np.ones(pts.shape[:-1])
    for j, k in enumerate(spec.kappas):
        if k != 0.0:
            out = out * (2.0 * pts[..., j] ** 2) ** k
    return float(out[0]) if squeeze else out


def group_from_config(cfg) -> ReflectionGroupSpec:
    """Build a group from {"d": int, "kappas": [..]} (dict or JSON text)."""
    if isinstance(cfg, str):
        cfg = json.loads(cfg)
    return make_z2d(int(cfg["d"]), cfg["kappas"])


def parse_group(text: str) -> ReflectionGroupSpec:
    """Parse the compact CLI form: comma-separated kappas, d inferred.

    "0.5" -> Z2^1 with kappa=0.5;  "0.5,1" -> Z2^2 with kappas (0.5, 1).
    A JSON object {"d":..,"kappas":[..]} is accepted too.
    """
    text = text.strip()
    if text.startswith("{"):
        return group_from_config(text)
    kappas = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    return make_z2d(len(kappas), kappas)
