"""Exception hierarchy, warning categories and CLI exit codes."""

from __future__ import annotations

from enum import IntEnum


class ExitCode(IntEnum):
    """Stable process exit codes for the ``genreg`` command."""

    OK = 0
    USAGE = 2
    NOT_CONVERGED = 3
    IO = 4


class GenRegError(Exception):
    """Base class for all errors raised by genreg."""

    exit_code: ExitCode = ExitCode.USAGE


class ValidationError(GenRegError, ValueError):
    """Invalid parameters, dimensions or graph invariants."""

    exit_code = ExitCode.USAGE


class DegenerateInputError(ValidationError):
    """Input for which the requested quantity is undefined."""


class SolverError(GenRegError, RuntimeError):
    """A numerical kernel failed (singular Newton system, SVD failure)."""

    exit_code = ExitCode.NOT_CONVERGED

    def __init__(self, message: str, iteration: int | None = None) -> None:
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class DataFileError(GenRegError, OSError):
    """A data file could not be read or is malformed."""

    exit_code = ExitCode.IO


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration or time limit."""


class RankDeficientWarning(UserWarning):
    """The augmented design has a nontrivial kernel."""
