"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
GuardExceededError -> 3, ConvergenceError -> 4.
"""


class InvalidSpecError(ValueError):
    """Ladder parameters out of range or structurally inconsistent."""


class UnsupportedReflectionError(ValueError):
    """Requested reflection does not exist for this ladder."""


class InvalidLoopError(ValueError):
    """A site sequence does not trace bonds of the ladder."""


class InconsistentSectorError(ValueError):
    """Vortex sector values missing, non-(+-1), or unsolvable."""


class MalformedMatrixError(ValueError):
    """Matrix fails a structural requirement (e.g. antisymmetry)."""


class GuardExceededError(RuntimeError):
    """A size guard tripped before an expensive computation."""


class ConvergenceError(RuntimeError):
    """Iterative solver failed its residual requirement."""


class LabelingError(RuntimeError):
    """Eigenstates could not be resolved into integer loop labels."""


class ConfigError(ValueError):
    """CLI configuration invalid; message carries the failing path."""
