"""Solvers and oracles for the time-fractional wave equation on a line segment.

Two convolution time-stepping schemes (the classical piecewise-linear
quadrature weights and a corrected variant that restores second-order
accuracy for nonsmooth data), P1 finite elements in space, analytic
reference solutions through Mittag-Leffler functions and inverse-Laplace
contours, and a harness that reproduces the benchmark convergence tables.
"""

from .experiments import (
    ConvergenceTable,
    ReferenceSpec,
    StudyConfig,
    get_problem,
    load_preset,
    observed_order,
    preset_names,
    run_study,
)
from .fem import FemOperators, Mesh1D, assemble, eigen_smallest, l2_project, load_power
from .kernels import (
    ContourSpec,
    KernelTable,
    betahat,
    bhat,
    build_kernels,
    certify_denominator,
    psi,
    psi_modified,
)
from .ode import (
    ConstantSource,
    PowerSource,
    ScalarProblem,
    SolutionHistory,
    SumSource,
    TabulatedSource,
    ZeroSource,
    solve_l1,
    solve_ml1,
)
from .oracle import ExactEval, discrete_contour, exact_scalar, fine_grid_reference
from .pde import (
    PdeHistory,
    PdeProblem,
    PowerProfile,
    l2_error,
    ratio_diagnostic,
    solve_pde,
    spectral_decompose_solve,
)
from .special import MlParams, cpow, gamma, mittag_leffler, zeta

__version__ = "0.1.0"
