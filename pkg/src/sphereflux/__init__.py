"""Central-upwind finite volume solver for scalar conservation laws on the sphere."""

from .geometry import SphericalCoord, TangentFrame, cross, tangent_frame, to_cartesian
from .grid import Band, Cell, Edge, SphereGrid, build_grid, cell_center, validate_grid
from .fluxes import (
    EdgeSpeeds,
    FluxModel,
    FoliatedFluxSpec,
    SeparableFluxModel,
    discrete_divergence_residual,
    edge_flux_H,
    get_model,
    local_speeds,
    make_confined_x1,
    make_foliated,
    model_names,
)
from .solver import (
    CellField,
    CentralUpwindOperator,
    NonFiniteStateError,
    SlopeField,
    SolverConfig,
    compute_slopes,
    edge_traces,
    integrate,
    minmod3,
    rhs,
    ssp_rk3_step,
    ssp_rk3_update,
)
from .metrics import RunReport, l2_error, solution_range, total_mass
from .cases import CaseSpec, case_catalog, get_case, make_initial, project_initial

__version__ = "0.1.0"

__all__ = [
    "Band", "Cell", "CellField", "CaseSpec", "CentralUpwindOperator", "Edge",
    "EdgeSpeeds", "FluxModel", "FoliatedFluxSpec", "NonFiniteStateError",
    "RunReport", "SeparableFluxModel", "SlopeField", "SolverConfig",
    "SphereGrid", "SphericalCoord", "TangentFrame",
    "build_grid", "case_catalog", "cell_center", "compute_slopes", "cross",
    "discrete_divergence_residual", "edge_flux_H", "edge_traces", "get_case",
    "get_model", "integrate", "l2_error", "local_speeds", "make_confined_x1",
    "make_foliated", "make_initial", "minmod3", "model_names",
    "project_initial", "rhs", "solution_range", "ssp_rk3_step",
    "ssp_rk3_update", "tangent_frame", "to_cartesian", "total_mass",
    "validate_grid",
]
