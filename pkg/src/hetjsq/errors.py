"""Exception hierarchy shared by all hetjsq modules.

The CLI maps these onto exit codes: ConfigError -> 2, Unstable -> 3,
NoConvergence -> 4.
"""


class HetJsqError(Exception):
    """Base class for all library errors."""


class ConfigError(HetJsqError, ValueError):
    """Invalid or inconsistent input configuration."""


class EmptyClassList(ConfigError):
    pass


class NonPositiveCapacity(ConfigError):
    pass


class FractionsDontSumToOne(ConfigError):
    pass


class NonIntegerClassSizes(ConfigError):
    """N * fraction_j is not an integer for some class."""


class NTooSmall(ConfigError):
    pass


class TooManyClasses(ConfigError):
    """Exact enumeration refused; the instance is too large."""


class NoSamples(ConfigError):
    """A statistic was requested from a run that produced no samples."""


class DomainError(HetJsqError, ValueError):
    """Argument outside the mathematical domain of the map."""


class Unstable(HetJsqError):
    """The offered load is outside the scheme's stability region."""


class UnstableRegime(Unstable):
    """Arrival rate outside the asymptotic SQ(2) stability region."""


class Unreachable(Unstable):
    """The requested load cannot be carried by the given class prefix."""


class NoConvergence(HetJsqError):
    """An iterative computation failed to reach its target residual."""


class ShootingBracketEmpty(NoConvergence):
    """The equilibrium shooting bracket is empty or failed to certify."""
