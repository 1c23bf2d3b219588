"""Spherical bipartite mixed-degree models: limiting free energy, counting
bounds for local minima, the induced ground-state bound, and finite-size
Monte Carlo oracles for all of them."""

__version__ = "0.1.0"

from .errors import (
    AlphaUndefinedError,
    AlphaZeroError,
    BadGammaError,
    BipartiteGlassError,
    BudgetExceededError,
    DegenerateModelError,
    DomainError,
    EmptyMixtureError,
    MissingFamilyError,
    MixingWarning,
    NegativeCoefficientError,
    NonSymmetricError,
    NoSignChangeError,
)
from .mixture import (
    MixtureConstants,
    MixtureSpec,
    XiJet,
    constants,
    is_plain_product,
    normalize_to_unit_variance,
    validate,
    xi_jet,
)
from .free_energy import (
    FixedPoint,
    FreeEnergyResult,
    crisanti_sommers_endpoint,
    grid_minimize_p,
    limiting_free_energy,
    p_eval,
    p_on_grid,
    solve_fixed_point,
)
from .complexity import (
    ComplexityCurve,
    OptimizerDiag,
    a_star,
    curve,
    goe_rate,
    j_lower,
    lambda0_pure,
    smallest_zero_m0,
    theta0_pure,
    upsilon0_pure,
    upsilon_k_coupled,
)
from .random_matrix import (
    ConditionalHessian,
    CovarianceReport,
    GoeMatrix,
    sample_conditional_hessian,
    sample_goe,
    sample_offdiag_block,
    verify_hessian_covariance,
)

__all__ = [
    "__version__",
    "AlphaUndefinedError", "AlphaZeroError", "BadGammaError",
    "BipartiteGlassError", "BudgetExceededError", "DegenerateModelError",
    "DomainError", "EmptyMixtureError", "MissingFamilyError", "MixingWarning",
    "NegativeCoefficientError", "NonSymmetricError", "NoSignChangeError",
    "MixtureConstants", "MixtureSpec", "XiJet", "constants",
    "is_plain_product", "normalize_to_unit_variance", "validate", "xi_jet",
    "FixedPoint", "FreeEnergyResult", "crisanti_sommers_endpoint",
    "grid_minimize_p", "limiting_free_energy", "p_eval", "p_on_grid",
    "solve_fixed_point",
    "ComplexityCurve", "OptimizerDiag", "a_star", "curve", "goe_rate",
    "j_lower", "lambda0_pure", "smallest_zero_m0", "theta0_pure",
    "upsilon0_pure", "upsilon_k_coupled",
    "ConditionalHessian", "CovarianceReport", "GoeMatrix",
    "sample_conditional_hessian", "sample_goe", "sample_offdiag_block",
    "verify_hessian_covariance",
]
