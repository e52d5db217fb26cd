"""Planar closed-curve registration toolkit.

Geodesic shooting of an embedded closed polygon carried by a moving
triangular mesh, discretized with a sixth-order nonconforming element,
plus ensemble Kalman inversion for the initial curve momentum.
"""

from .assembly import (
    DofMap,
    SparseOperator,
    assemble_curve_rhs,
    assemble_operator,
    build_dofmap,
    solve_spd,
)
from .eki import EKIConfig, EKIResult, initial_ensemble, run_eki
from .errors import (
    AllMembersFailed,
    CurveMatchError,
    ForwardError,
    NotConverged,
    NotPositiveDefinite,
    SingularCell,
    SingularGram,
    SolverError,
    TangledMesh,
    UsageError,
)
from .forward import Scenario, ShootResult, forward_operator, shoot
from .mesh import (
    CurveLoop,
    Mesh,
    MeshGenConfig,
    curve_polygon,
    generate_template_mesh,
)
from .momentum import synthetic_momentum
from .raster import RasterField, RasterSpec, rasterize, smooth

__version__ = "0.1.0"

__all__ = [
    "AllMembersFailed",
    "CurveLoop",
    "CurveMatchError",
    "DofMap",
    "EKIConfig",
    "EKIResult",
    "ForwardError",
    "Mesh",
    "MeshGenConfig",
    "NotConverged",
    "NotPositiveDefinite",
    "RasterField",
    "RasterSpec",
    "Scenario",
    "ShootResult",
    "SingularCell",
    "SingularGram",
    "SolverError",
    "SparseOperator",
    "TangledMesh",
    "UsageError",
    "assemble_curve_rhs",
    "assemble_operator",
    "build_dofmap",
    "curve_polygon",
    "forward_operator",
    "generate_template_mesh",
    "initial_ensemble",
    "rasterize",
    "run_eki",
    "shoot",
    "smooth",
    "solve_spd",
    "synthetic_momentum",
]
