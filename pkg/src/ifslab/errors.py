"""Exception hierarchy shared by every ifslab module."""


class IFSError(Exception):
    """Base class for all library errors."""


class SingularSystem(IFSError, ArithmeticError):
    pass


class NotSimilarity(IFSError, ValueError):
    pass


class UnsupportedDimension(IFSError, ValueError):
    pass


class DepthTooSmall(IFSError, ValueError):
    pass


class NoContractiveDepth(IFSError):
    pass


class NotTrapping(IFSError):
    pass


class BudgetExceeded(IFSError):
    pass


class EmptyInput(IFSError, ValueError):
    pass


class NotApplicable(IFSError, ValueError):
    pass


class NoFeasibleCone(IFSError):
    pass


class NotBounded(IFSError, ValueError):
    pass


class RegionOutsideDisk(IFSError, ValueError):
    pass


class SchemaError(IFSError, ValueError):
    pass


class SingularLinearPart(IFSError, ValueError):
    pass


class CertificateInconsistency(IFSError):
    """A computed certificate contradicts a guaranteed mathematical fact.

    The CLI maps every subclass to exit status 2.
    """


class NestingViolation(CertificateInconsistency):
    pass


class MonotonicityViolation(CertificateInconsistency):
    pass
