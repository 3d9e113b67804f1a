class ConfigError(ValueError):
    """A scenario or experiment parameter is out of range or malformed."""

    def __init__(self, param, message):
        self.param = param
        super().__init__(f"{param}: {message}")


class InfeasibleError(RuntimeError):
    """No solution satisfying the hard constraints could be produced.

    ``result`` carries the best (constraint-violating) solution found, when
    one exists, so callers that only need a number can still report it.
    """

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)


class ConstraintViolation(ValueError):
    """A power constraint (C2 per pair, C3 network-wide) is violated."""

    def __init__(self, constraint, message, pair_index=None):
        self.constraint = constraint
        self.pair_index = pair_index
        super().__init__(f"{constraint} violated: {message}")
