"""Exception types shared across the package."""


class SpecParseError(ValueError):
    """A mechanism spec string or record could not be parsed."""


class CurveValidationError(ValueError):
    """A curve violates its structural invariants beyond repairable noise."""


class TruncationError(RuntimeError):
    """A privacy profile window demonstrably clips the supremum it feeds."""


class WindowTooSmall(ValueError):
    """The requested loss window cannot reach the target truncation mass."""


class AccumulatedErrorExceeded(RuntimeError):
    """Tracked discretisation error exceeds the caller's budget."""


class BracketFailure(RuntimeError):
    """No noise multiplier inside the search bracket attains the target."""


class NoFixedPoint(RuntimeError):
    """The trade-off curve has no usable fixed point alpha = f(alpha)."""


class PreconditionUnmet(RuntimeError):
    """The composition-count ratio fails the eta-ratio precondition."""


class DivergentMoment(RuntimeError):
    """A log-derivative moment integral failed to converge."""
