"""Semantic exception hierarchy shared by all modules."""


class BipartiteGlassError(Exception):
    """Base class for all model/validation/numerics errors raised by this package."""


class EmptyMixtureError(BipartiteGlassError):
    """All interaction coefficients are zero."""


class BadGammaError(BipartiteGlassError):
    """Split ratio outside the open interval (0, 1)."""


class NegativeCoefficientError(BipartiteGlassError):
    """An interaction coefficient is negative."""


class AlphaUndefinedError(BipartiteGlassError):
    """Radicand of the conditional-fluctuation scale is materially negative.

    Signals a model that was not normalized to unit variance before use.
    """


class AlphaZeroError(BipartiteGlassError):
    """Lower-bound machinery requires strictly positive conditional fluctuation
    on both parties; a pure party has none."""


class DegenerateModelError(BipartiteGlassError):
    """Model excluded from the complexity bounds (the plain product interaction)."""


class MissingFamilyError(BipartiteGlassError):
    """A per-index function family required by the coupled combiner is absent."""


class NoSignChangeError(BipartiteGlassError):
    """Root scan found no zero of the upper bound in the configured window."""


class NonSymmetricError(BipartiteGlassError):
    """A symmetric matrix was expected."""


class BudgetExceededError(BipartiteGlassError):
    """Requested coefficient tensor exceeds the configured memory budget."""


class DomainError(BipartiteGlassError):
    """Argument outside the mathematical domain of the operation."""


class MixingWarning(UserWarning):
    """Metropolis acceptance rate left the healthy range; estimates may be biased."""
