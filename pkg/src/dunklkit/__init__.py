"""dunklkit: desk-scale numerics and exact symbolics for Dunkl analysis
on Z2^d reflection groups."""

from .root_system import ReflectionGroupSpec, make_z2d, reflect, weight

__all__ = ["ReflectionGroupSpec", "make_z2d", "reflect", "weight"]
__version__ = "0.1.0"
