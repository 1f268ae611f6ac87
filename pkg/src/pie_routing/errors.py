"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid parameters or graph data."""


class EdgeListParseError(ValidationError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EstimationError(RuntimeError):
    """Degree-exponent estimation is impossible or divergent."""


class ConvergenceError(RuntimeError):
    """A distributed protocol failed to converge within the round budget."""


class ForestInvariantError(RuntimeError):
    """A converged forest violates a structural invariant; carries diagnostics."""

    def __init__(self, message: str, offenders=None):
        super().__init__(message)
        self.offenders = list(offenders) if offenders is not None else []
