"""Exception hierarchy shared by all subpackages."""


class BlockEqError(Exception):
    """Base class for every error raised by blockeq."""


class ProfileError(BlockEqError, ValueError):
    pass


class NonIntegerDimension(ProfileError):
    pass


class OutOfRange(BlockEqError, ValueError):
    pass


class NegativeVariance(ProfileError):
    pass


class CapExceeded(BlockEqError, MemoryError):
    pass


class OnCut(BlockEqError, ValueError):
    """Spectral parameter lies on [-2, 2] and no boundary side was given."""


class NotConverged(BlockEqError, ArithmeticError):
    pass


class OddOffset(BlockEqError, ValueError):
    pass


class NearPole(BlockEqError, ArithmeticError):
    pass


class UnsupportedPair(BlockEqError, ValueError):
    pass


class UncoveredPair(BlockEqError, ValueError):
    pass


class EmptyGrid(BlockEqError, ValueError):
    pass


class GridMismatch(BlockEqError, ValueError):
    pass


class ConvergenceFailure(BlockEqError, ArithmeticError):
    """The dense eigensolver did not converge."""


class ConfigError(BlockEqError, ValueError):
    pass


class CampaignFailed(BlockEqError, RuntimeError):
    pass
