"""Exception types raised by freewrap."""


class FreewrapError(Exception):
    """Base class for all library errors."""


class NegativeMassError(FreewrapError, ValueError):
    def __init__(self, msg="negative mass"):
        super().__init__(msg)


class NoConvergenceError(FreewrapError, RuntimeError):
    """Newton inversion exhausted its iteration budget."""

    def __init__(self, msg="no-convergence"):
        super().__init__(msg)


class LeftDomainError(FreewrapError, RuntimeError):
    """An iterate left the upper half-plane or the unit disk."""

    def __init__(self, msg="left-domain"):
        super().__init__(msg)


class FixedPointStallError(FreewrapError, RuntimeError):
    def __init__(self, msg="fixed-point-stall"):
        super().__init__(msg)


class EtaDerivativeZeroError(FreewrapError, ValueError):
    def __init__(self, msg="eta-derivative-zero"):
        super().__init__(msg)


class NonFiniteEvaluationError(FreewrapError, FloatingPointError):
    def __init__(self, msg="nan-in-evaluation"):
        super().__init__(msg)


class WindowTooSmallError(FreewrapError, ValueError):
    def __init__(self, msg="window-too-small"):
        super().__init__(msg)


class InsufficientMassError(FreewrapError, ValueError):
    def __init__(self, msg="insufficient-mass"):
        super().__init__(msg)


class InconsistentBetaError(FreewrapError, ValueError):
    """The drift solved at two sample points disagrees."""
