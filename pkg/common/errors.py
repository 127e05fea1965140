"""Error types raised by the shell laboratory."""


class ShellLabError(Exception):
    """Base class for every error raised by this project."""


class GeometryError(ShellLabError, ValueError):
    """Degenerate interface parameterization or evaluation outside the collar."""


class SolverError(ShellLabError, RuntimeError):
    """Assembly, factorization or eigensolver failure."""


class OracleError(SolverError):
    """The shooting oracle could not bracket the requested roots."""


class HypothesisError(ShellLabError, ValueError):
    """A theorem was evaluated outside of its hypotheses."""


class FitError(ShellLabError, ValueError):
    """Least-squares fit could not be formed."""


class ConfigError(ShellLabError, ValueError):
    """Invalid experiment configuration."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None) -> None:
        """Initialize config error.

        Args:
            message: Human readable description
            path: Config file path, if known
            line: 1-based line number inside the file, if known
        """
        self.message = message
        self.path = path
        self.line = line
        super().__init__(self.render())

    def render(self) -> str:
        """Render as ``path:line: message``."""
        if self.path is None:
            return self.message
        if self.line is None:
            return f"{self.path}: {self.message}"
        return f"{self.path}:{self.line}: {self.message}"
