"""Exception hierarchy shared by all modules."""


class ThetaMulError(Exception):
    """Base class for every error raised by thetamul."""


class InvalidPolarization(ThetaMulError, ValueError):
    pass


class NotSymmetric(ThetaMulError, ValueError):
    pass


class NotPositive(ThetaMulError, ValueError):
    pass


class LatticeMembership(ThetaMulError, ValueError):
    pass


class SizeLimit(ThetaMulError):
    pass


class NotHalvable(ThetaMulError, ValueError):
    pass


class InjectivityOfPsiFailed(ThetaMulError):
    """Two domain elements of the pairing map hit the same class."""


class NearDegenerate(ThetaMulError):
    """Truncation radius would exceed the lattice-point cap."""


class NearDegenerateWarning(UserWarning):
    pass


class DegenerateSampling(ThetaMulError):
    pass


class IllConditioned(ThetaMulError):
    pass


class ResidualTooLarge(ThetaMulError):
    pass


class BlockLeak(ThetaMulError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class VerdictMismatch(ThetaMulError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EmptyKernel(ThetaMulError):
    pass


class SpanMismatch(ThetaMulError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
