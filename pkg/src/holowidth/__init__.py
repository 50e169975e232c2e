"""Kolmogorov widths of parametric elliptic solution manifolds.

Box parametrizations and their localization, Taylor coefficients of the
affine diffusion map with Cauchy/factorial bounds, best n-term selection,
and snapshot-based width estimates.
"""

from ._accel import backend
from .multiidx import IndexSet, MultiIndex
from .pde import DiscreteField, Grid

__version__ = "0.1.0"

__all__ = ["IndexSet", "MultiIndex", "Grid", "DiscreteField", "backend", "__version__"]
