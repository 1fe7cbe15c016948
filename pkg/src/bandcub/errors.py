"""Exception types raised by bandcub."""


class BandcubError(Exception):
    """Base class for all library errors."""


class RhoTooLarge(BandcubError, ValueError):
    pass


class NotALattice(BandcubError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotAFrame(BandcubError):
    pass


class PositivityFailed(BandcubError):
    """Raised when the corrected weights are not all positive.

    The offending weight vector is kept on ``weights`` so callers can inspect
    how far from positive the construction landed.
    """

    def __init__(self, message, weights):
        super().__init__(message)
        self.weights = weights


class CutoffExceeded(BandcubError, ValueError):
    pass


class TruncationTooSmall(BandcubError):
    pass


class InsufficientExactness(BandcubError):
    pass


class UnsupportedManifold(BandcubError):
    pass
