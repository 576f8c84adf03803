"""Numerical laboratory for U(1)-invariant special Lagrangian geometry in C^3."""

from .calibration import (
    ComplexPoint3,
    FiberChartPoint,
    TangentFrame,
    fiber_points,
    field_equation_residual,
    frame_from_chart,
    imomega_residual,
    omega_residual,
)
from .elliptic import (
    BoundarySpec,
    DomainSpec,
    SolutionField,
    geometric_schedule,
    load_field,
    mean_flux,
    reconstruct_u,
    save_field,
    solve_disc,
    solve_disc_limit,
    solve_strip,
    solve_strip_limit,
)
from .models import (
    BaseCoordF,
    BaseCoordHL,
    NaSlice,
    explicit_F,
    explicit_Fprime,
    hl_discriminant_contains,
    hl_map,
    holo_disc_area,
    na_oracle,
    na_oracle_grid,
    na_slice_formulas,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
