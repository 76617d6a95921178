from .lattice import Lattice, BoundaryData, build_lattice, chart_derivatives
from .schemas import MapGrid, GrowthClass, GrowthProfile, ConvexGauge
from .solver import LatticeEnergy, solve, solve_family, discrete_laplacian_V
from .serialization import FORMAT_HEADER, dump_grid, load_grid
from .estimates import (
    require_nonnegative_curvature,
    gradient_ratio,
    gradient_estimate_check,
    classify_growth,
)
from .liouville import (
    submartingale_phi_check,
    liouville_lower_bound_check,
    liouville_decay_demo,
    recurrence_liouville_bridge,
)

__all__ = [
    "Lattice",
    "BoundaryData",
    "build_lattice",
    "chart_derivatives",
    "MapGrid",
    "GrowthClass",
    "GrowthProfile",
    "ConvexGauge",
    "LatticeEnergy",
    "solve",
    "solve_family",
    "discrete_laplacian_V",
    "FORMAT_HEADER",
    "dump_grid",
    "load_grid",
    "require_nonnegative_curvature",
    "gradient_ratio",
    "gradient_estimate_check",
    "classify_growth",
    "submartingale_phi_check",
    "liouville_lower_bound_check",
    "liouville_decay_demo",
    "recurrence_liouville_bridge",
]
