"""Solver and validation toolkit for normalized solutions of the planar
two-component Schrodinger-Poisson system with logarithmic interaction."""

from logsp.grid import (
    BoundaryDecayWarning,
    Field,
    Grid2D,
    LogKernelTable,
    integrate,
    log_convolution,
    make_field,
    make_grid,
    make_log_kernel_table,
    read_field,
    spectral_laplacian,
    write_field,
)
from logsp.functionals import (
    FunctionalBreakdown,
    ModelParams,
    StatePair,
    eval_I,
    eval_breakdown,
    l2_gradient,
    make_state,
    multipliers,
)
from logsp.fiber import (
    FiberProfile,
    FiberRoots,
    OmegaKind,
    SingleRoot,
    classify_omega,
    fiber_profile,
    fiber_roots,
    rescale,
    two_root_condition,
)
from logsp.regimes import (
    GNConstant,
    Regime,
    RegimeKind,
    classify_regime,
    gn_constant,
    mass_threshold,
)
from logsp.solver import (
    SolveOptions,
    SolveReport,
    eval_I_minus,
    initial_state,
    solve_excited,
    solve_ground,
)
from logsp.validate import (
    IdentityReport,
    M_value,
    check_kernel_bounds,
    check_transform,
    identity_report,
    nehari_residual,
    pohozaev_residual,
)

__version__ = "0.1.0"
