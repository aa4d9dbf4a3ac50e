"""Exception hierarchy shared by every koplab module."""


class KoplabError(Exception):
    """Base class for all library errors."""


class ParameterOutOfRange(KoplabError, ValueError):
    pass


class DomainError(KoplabError, ValueError):
    """An argument lies outside the domain of a function (e.g. q <= -1)."""


class BandOutOfRange(KoplabError, ValueError):
    pass


class SizeMismatch(KoplabError, ValueError):
    pass


class SingularMultiplier(KoplabError, ValueError):
    pass


class QuadratureFailure(KoplabError, RuntimeError):
    pass


class ConvergenceFailure(KoplabError, RuntimeError):
    pass


class EmptyTrajectory(KoplabError, ValueError):
    pass


class MissingComponent(KoplabError, ValueError):
    pass


class VacuumError(KoplabError, RuntimeError):
    """Density reached zero or below somewhere on the grid."""


class BlowUp(KoplabError, RuntimeError):
    """The numerical solution left any reasonable bound."""


class DegenerateFit(KoplabError, ValueError):
    pass
