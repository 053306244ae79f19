"""Effective diffusivity of Langevin dynamics in periodic potentials.

Three independent routes to the same physics: direct ensemble simulation,
a Hermite-Fourier Galerkin solve of the kinetic cell problem, and closed
forms from the energy-graph (small friction) and overdamped (large friction)
limits.
"""

__version__ = "0.1.0"

from .estimate import DiffusionEstimate
from .numerics import QuadratureSpec
from .potential import PeriodicPotential, load_potential

__all__ = [
    "__version__",
    "DiffusionEstimate",
    "QuadratureSpec",
    "PeriodicPotential",
    "load_potential",
    "dstar",
    "dbar",
]


def dstar(V, beta, **kw):
    """Small-friction limit of gamma * D_gamma (closed formula)."""
    from .fw_graph import dstar as _dstar

    return _dstar(load_potential(V), beta, **kw)


def dbar(V, beta, **kw):
    """Overdamped limit of gamma * D_gamma (closed formula)."""
    from .smoluchowski import dbar as _dbar

    return _dbar(load_potential(V), beta, **kw)
