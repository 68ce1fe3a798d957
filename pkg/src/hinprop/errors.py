"""Exception types shared across the package."""


class HinpropError(Exception):
    """Base class for errors raised by this package."""


class GraphError(HinpropError):
    """Invalid graph input: unknown types, undeclared node ids, bad weights."""


class ConfigError(HinpropError):
    """A configuration file or override failed validation."""


class ConvergenceError(HinpropError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    Carries the best iterate seen so far and the residual at termination so
    callers can inspect or salvage partial results.
    """

    def __init__(self, message, best=None, residual=None, n_iter=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.n_iter = n_iter
