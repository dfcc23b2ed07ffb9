"""Deterministic solver and verification laboratory for the Landau kinetic
equation in a 1D slab with Maxwell-reflection walls.

Subpackage map:

    grid         velocity lattice, slab geometry, quadrature, wall moments
    weights      admissible weights, multiplier calculus, wall constants
    collision    Landau kernels, the bilinear operator Q, splittings
    boundary     Maxwell reflection, wall traces, upwind transport
    solver       nonlinear / linearized / Picard time integration
    diagnostics  norms, decay fits, slab elliptic solves, hypocoercivity probe
    records      run records (JSON / CSV / binary / SVG persistence)
    config, cli  strict INI configs and the command-line front end
"""

from .grid import SlabField, SlabGeometry, VelocityGrid
from .solver import RunConfig, SlabSolver, picard_iterate, run
from .weights import WeightSpec

__version__ = "0.1.0"

__all__ = ["SlabField", "SlabGeometry", "VelocityGrid", "RunConfig",
           "SlabSolver", "WeightSpec", "picard_iterate", "run",
           "__version__"]
