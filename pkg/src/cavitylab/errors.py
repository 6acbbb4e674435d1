"""Exception hierarchy shared by all modules.

Each class carries an ``exit_code`` used by the command-line runner.
"""


class CavityLabError(Exception):
    exit_code = 1


class ConfigError(CavityLabError):
    """Invalid or inconsistent run configuration (schema, units, dimensions)."""

    exit_code = 2

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class DimensionError(ConfigError):
    """Basis dimension exceeds the configured memory budget or dense limit."""


class InvalidModelError(CavityLabError):
    exit_code = 3


class InvalidArgumentError(CavityLabError, ValueError):
    exit_code = 3


class ConvergenceError(CavityLabError):
    """Iterative eigensolver exhausted its budget.

    ``eigenvalues`` and ``residuals`` hold the best Ritz estimates reached.
    """

    exit_code = 4

    def __init__(self, message, eigenvalues=None, residuals=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues
        self.residuals = residuals


class PropagationError(CavityLabError):
    exit_code = 5

    def __init__(self, message, step=None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step
