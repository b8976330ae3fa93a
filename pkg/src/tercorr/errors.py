"""Exception types shared across the toolkit.

Two families: parameter problems (bad or infeasible inputs, caught before
any heavy work starts) and numerical problems (a computation ran but its
result cannot be trusted). The command-line layer maps the families onto
distinct exit codes, so library code should always raise the most specific
subclass that applies.
"""


class ParameterError(ValueError):
    """Invalid or infeasible input parameters."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to meet its accuracy contract."""


class CapacityError(ParameterError):
    """Expected event or grid count exceeds the configured memory budget."""


class GridTooCoarseError(ParameterError):
    """Sampling grid too coarse to resolve the requested correlation time."""


class InfeasibleRateError(ParameterError):
    """Requested mean rate is not achievable for the given source timescale."""


class EmptyStreamError(ParameterError):
    """Operation requires a nonempty time-tag stream."""


class InsufficientDataError(ParameterError):
    """Not enough events to build the requested statistic."""


class WindowEmptyError(ParameterError):
    """No usable histogram bins inside the requested fit window."""


class ParseError(ParameterError):
    """Malformed input file; the message names the offending line."""


class TruncationError(NumericalError):
    """Waiting-time distribution has not decayed to the floor at the grid end."""


class InstabilityError(NumericalError):
    """Integration step too coarse for a stable forward iteration."""


class PoorFitError(NumericalError):
    """Fit residual exceeds the acceptance threshold."""


class CoverageError(NumericalError):
    """Efficiency curve does not cover the requested rate range."""
