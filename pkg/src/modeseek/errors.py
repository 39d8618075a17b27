"""Exception types shared across the toolkit."""


class InputError(ValueError):
    """Invalid argument: bad shapes, ranges, or option combinations."""


class UnsupportedKernelError(InputError):
    """Operation is not defined for the requested kernel."""


class NumericError(RuntimeError):
    """Numerical failure while running an algorithm."""


class NoSolutionError(NumericError):
    """A per-point bandwidth calibration has no solution."""


class OutOfSupportError(NumericError):
    """Query point has vanishing weight under every component."""


class IsolatedPointError(NumericError):
    """Finite-support kernel has no data point inside its neighborhood."""
