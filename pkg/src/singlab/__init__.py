"""Numerical laboratory for boundary singularities of positive solutions of
-Delta(u) + u^p - M|grad u|^q = 0."""

__version__ = "0.1.0"

from .regimes import (  # noqa: F401
    Params,
    ExponentSet,
    CriticalConstants,
    RegimeReport,
    ParameterDomainError,
    exponents,
    classify,
    critical_constants,
    constant_profile_roots,
    m_star,
    m_star_star,
    m_star_star_r,
)
from .profile import (  # noqa: F401
    ProfileProblem,
    ProfileSolution,
    solve_min_profile,
    solve_psi,
    existence_threshold,
)
from .radial import (  # noqa: F401
    RadialTrajectory,
    integrate,
    ko_check,
    osserman_check,
    osserman_min_lambda,
    supersolution_radius,
    fit_blowup_exponent,
    eikonal_solution,
)
from .halfplane import (  # noqa: F401
    PolarGrid,
    Field,
    SolveReport,
    poisson_kernel,
    solve_absorption,
    solve_full,
    fundamental_solution,
    strong_limit,
    diagnostics,
    removability_probe,
)
