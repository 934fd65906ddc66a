"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Non-finite or out-of-range model parameter."""


class ValidationError(ValueError):
    """Configuration or setup invariant violated."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ContractViolation(ValueError):
    """Caller broke a precondition (shapes, definiteness, consistency)."""


class SolverError(RuntimeError):
    """Iterative solve did not reach its tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepRejected(ValueError):
    """Requested time step exceeds the CFL limit."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class FormatError(ValueError):
    """Malformed field/report file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
