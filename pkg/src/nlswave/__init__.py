"""Energy-conserving leap-frog finite elements for the cubic nonlinear
Schrödinger equation with wave operator,

    u_tt - Lap u + i u_t + |u|^2 u + w(x) u = g   in 2D.
"""
from .mesh import Disk, TriangleMesh, UnitSquare, disk_mesh, read_mesh, refine, unit_square_mesh, write_mesh
from .quadrature import TriangleQuadrature, integrate_on_triangle, rule_for_degree
from .fem import (
    FeSpace,
    ScalarField,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    assemble_weighted_mass,
    build_space,
    h1_seminorm_error,
    interpolate,
    l2_error,
    ritz_project,
)
from .sparse import BreakdownError, CompositeOperator, MaxIterationsError, SolverError, solve_bicgstab
from .problems import ProblemSpec, example1, example2, residual_check, zero_problem
from .scheme import (
    EnergyBreakdown,
    EnergyRecorder,
    ErrorRecorder,
    LeapFrog,
    SchemeConfig,
    SchemeState,
    discrete_energy,
    initialize,
    run,
    step,
)

__version__ = "0.1.0"
