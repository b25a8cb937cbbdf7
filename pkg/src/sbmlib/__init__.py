"""Smoothed boundary method solvers on structured grids.

Imposes Neumann, Dirichlet, mixed and contact-angle boundary conditions on
diffuse interfaces embedded in regular grids: diffusion, coupled
surface-bulk diffusion, linear elastostatics and phase-field evolution,
plus a validation harness and a config-driven CLI.
"""

from .backend import backend_name
from .grid import (
    AXISYMMETRIC_RZ,
    CARTESIAN,
    ComplexScalarField,
    Grid,
    ScalarField,
    SymTensorField,
    VectorField,
)
from .domain import (
    DomainParameter,
    SignedDistance,
    interface_metrics,
    reinitialize_distance,
    tanh_from_distance,
    three_phase_weights,
)
from .stencils import (
    BoxBC,
    FaceClosure,
    FIXED_GRADIENT,
    FIXED_VALUE,
    ZERO_GRADIENT,
    conservative_div,
    conservative_div_rz,
    cross_derivative,
    gradient,
)
from .diffusion import (
    BoundarySpec,
    DiffusionProblem,
    analytic_1d_steady,
    relative_error,
    run_1d_validation,
    step_diffusion_mixed,
)
from .surface_bulk import (
    SurfaceBulkProblem,
    cylinder_error_report,
    solve_helmholtz_adlr,
    solve_sharp_cylinder,
    step_coupled,
    surface_laplacian,
)
from .contact_angle import (
    PhaseFieldState,
    conservation_metric,
    measure_contact_angle,
    sbm_chemical_potential,
    step_allen_cahn,
    step_cahn_hilliard,
)
from .elasticity import (
    ElasticProblem,
    IsotropicMaterial,
    compute_stress,
    lame_from_engineering,
    mean_stress,
    solve_displacements_adlr,
)
from .fileio import export_field, load_voxels, read_sbmf, write_sbmf

__version__ = "0.1.0"
