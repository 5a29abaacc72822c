"""Weighted quadrature grids and sampled fields.

The measure on each axis is (sqrt(2)|x|)^(2 kappa) dx on [-L, L].  With
v = (x/L)^2 the even part of any integrand becomes a smooth function of
v and the weight a Jacobi weight:

    int_{-L}^{L} f(x) (sqrt2 |x|)^(2k) dx
        = (L^(2k+1) / 2^(3/2)) int_0^1 [f(L sqrt v) + f(-L sqrt v)]
                                  v^(k-1/2) dv / ...      (Gauss-Jacobi)

so an n-point Jacobi rule in v yields 2n symmetric nodes +-L sqrt(v_i)
with equal weights.  Odd integrands integrate to zero exactly, matching
the true integral, and even smooth integrands converge spectrally; the
|x|^(2k) cusp never meets the rule.  Zero is never a node.

Full grids are tensor products over the axes.  Sampled fields are flat
complex arrays in C-order over the tensor product, serializable to CSV
with columns x1..xd, re, im.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .errors import DomainError, TailMassError
from .fields import ScalarField
from .root_system import ReflectionGroupSpec, weight

TAIL_WARN = 1e-6
TAIL_ERROR = 1e-3


def _axis_rule(kappa: float, length: float, n_half: int):
    zeta, w = roots_jacobi(n_half, 0.0, kappa - 0.5)
    v = 0.5 * (zeta + 1.0)
    x_pos = length * np.sqrt(v)
    w_pos = length ** (2.0 * kappa + 1.0) * w / (2.0 ** 1.5)
    nodes = np.concatenate([-x_pos[::-1], x_pos])
    weights = np.concatenate([w_pos[::-1], w_pos])
    return nodes, weights


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product quadrature for int . h^2(x) dx on [-L, L]^d.

    ``axis_nodes[j]`` / ``axis_weights[j]`` hold the 1D rule for axis j
    (weights already include the axis factor of h^2).  ``points`` is the
    flattened (M, d) tensor grid, ``weights`` the matching product
    weights.
    """

    group: ReflectionGroupSpec
    n: int
    length: float
    axis_nodes: tuple[np.ndarray, ...]
    axis_weights: tuple[np.ndarray, ...]
    points: np.ndarray
    weights: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axis_nodes)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def flip_indices(self) -> np.ndarray:
        """Index permutation mapping node x to node -x (exact by the
        symmetric construction)."""
        idx = np.arange(self.size).reshape(self.shape)
        for ax in range(self.group.d):
            idx = np.flip(idx, axis=ax)
        return idx.reshape(-1)

    def refine(self, factor: int = 2, length_factor: float = 1.0) -> "QuadratureGrid":
        return make_grid(
            self.group, n=self.n * factor, length=self.length * length_factor
        )


def make_grid(group: ReflectionGroupSpec, n: int = 128, length: float = 12.0) -> QuadratureGrid:
    """Build the grid with ``n`` nodes per axis (n even) on [-L, L]^d."""
    if n < 4 or n % 2:
        raise DomainError(f"n must be even and >= 4, got {n}")
    if 2 * n - 2 < 1.5 * length * length:
        import warnings

        warnings.warn(
            f"grid n={n} under-resolves oscillations at L={length} "
            f"(rule degree {2 * n - 2} < 1.5 L^2 = {1.5 * length * length:.0f}); "
            "transforms may alias",
            stacklevel=2,
        )
    nodes, weights = [], []
    for k in group.kappas:
        nd, wt = _axis_rule(k, float(length), n // 2)
        nodes.append(nd)
        weights.append(wt)
    mesh = np.meshgrid(*nodes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    wmesh = np.meshgrid(*weights, indexing="ij")
    wfull = np.ones(points.shape[0])
    for wm in wmesh:
        wfull = wfull * wm.reshape(-1)
    return QuadratureGrid(
        group=group,
        n=n,
        length=float(length),
        axis_nodes=tuple(nodes),
        axis_weights=tuple(weights),
        points=points,
        weights=wfull,
    )


@dataclass
class SampledField:
    """Complex values on a grid, tagged with the side they live on."""

    grid: QuadratureGrid
    values: np.ndarray
    side: str = "physical"  # or "frequency"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)
        if self.values.shape[0] != self.grid.size:
            raise DomainError(
                f"value array length {self.values.shape[0]} != grid size {self.grid.size}"
            )

    def tensor(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def flipped(self) -> "SampledField":
        """Values at -x; exact because the grid is symmetric."""
        return SampledField(self.grid, self.values[self.grid.flip_indices()], self.side)


def sample(grid: QuadratureGrid, f, side: str = "physical") -> SampledField:
    """Sample a ScalarField/callable on the grid (idempotent for
    SampledFields on the same grid)."""
    if isinstance(f, SampledField):
        if f.grid is not grid and f.grid.size != grid.size:
            raise DomainError("sampled field lives on a different grid")
        return f
    if isinstance(f, ScalarField):
        return SampledField(grid, f(grid.points), side)
    return SampledField(grid, np.asarray(f(grid.points), dtype=complex), side)


def integrate(grid: QuadratureGrid, values: np.ndarray) -> complex:
    """int values(x) h^2(x) dx over the truncated box."""
    return complex(np.sum(grid.weights * np.asarray(values).reshape(-1)))


def norm_l2(grid: QuadratureGrid, f) -> float:
    v = sample(grid, f).values
    return float(np.sqrt(np.sum(grid.weights * np.abs(v) ** 2)))


def norm_lp(grid: QuadratureGrid, f, p: float) -> float:
    """||f||_p against h^2 dx; p = inf returns the grid max."""
    v = sample(grid, f).values
    if np.isinf(p):
        return float(np.max(np.abs(v)))
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}")
    return float(np.sum(grid.weights * np.abs(v) ** p) ** (1.0 / p))


def tail_indicator(field: SampledField) -> float:
    """max |f| on the outermost node shell relative to the global max."""
    t = np.abs(field.tensor())
    peak = float(t.max())
    if peak == 0.0:
        return 0.0
    border = 0.0
    for ax in range(t.ndim):
        sl = [slice(None)] * t.ndim
        for edge in (0, -1):
            sl[ax] = edge
            border = max(border, float(t[tuple(sl)].max()))
    return border / peak


def check_tail(field: SampledField, context: str = "") -> None:
    """Escalating truncation check: warn above TAIL_WARN, raise above
    TAIL_ERROR."""
    ind = tail_indicator(field)
    if ind > TAIL_ERROR:
        raise TailMassError(
            f"{context or 'field'}: boundary/peak ratio {ind:.2e} exceeds {TAIL_ERROR:.0e}"
        )
    if ind > TAIL_WARN:
        import warnings

        warnings.warn(
            f"{context or 'field'}: boundary/peak ratio {ind:.2e}", stacklevel=2
        )


# ---------------------------------------------------------------------------
# CSV serialization (columns x1..xd, re, im)
# ---------------------------------------------------------------------------

def field_to_csv(field: SampledField, path) -> None:
    d = field.grid.group.d
    header = ",".join([f"x{j+1}" for j in range(d)] + ["re", "im"])
    data = np.column_stack(
        [field.grid.points, field.values.real, field.values.imag]
    )
    np.savetxt(
        path,
        data,
        delimiter=",",
        header=header + f"\n side={field.side}",
        fmt="%.17e",
    )


def field_from_csv(grid: QuadratureGrid, path, side: str = "physical") -> SampledField:
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    d = grid.group.d
    if data.shape[0] != grid.size:
        raise DomainError(
            f"CSV has {data.shape[0]} rows, grid has {grid.size} nodes"
        )
    if not np.allclose(data[:, :d], grid.points, atol=1e-9):
        raise DomainError("CSV coordinates do not match the grid")
    return SampledField(grid, data[:, d] + 1j * data[:, d + 1], side)
