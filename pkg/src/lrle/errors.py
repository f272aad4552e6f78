"""Exception hierarchy shared by all lrle modules."""


class LRLEError(ValueError):
    """Base class for all errors raised by the package."""


class NonInjectiveGauge(LRLEError):
    """A fixed point needed for the canonical gauge is singular."""


class DegenerateSpectrum(LRLEError):
    """The leading transfer eigenvalue is not separated from the rest."""


class NonUnitary(LRLEError):
    pass


class NotIsometry(LRLEError):
    pass


class NormalizationViolation(LRLEError):
    pass


class NotNormalized(LRLEError):
    pass


class WrongShape(LRLEError):
    pass


class DomainError(LRLEError):
    pass


class BudgetExceeded(LRLEError):
    """Enumeration would visit more branches than the caller allowed."""


class CriterionViolated(LRLEError):
    pass


class WrongBondDimension(LRLEError):
    pass


class DimensionError(LRLEError):
    pass
