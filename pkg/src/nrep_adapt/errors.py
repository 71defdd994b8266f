"""Exception hierarchy shared by every nrep_adapt module."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union


class NrepError(RuntimeError):
    """Root of all errors raised by nrep_adapt."""


class DomainError(NrepError, ValueError):
    """Raised when an argument lies outside the domain an operation accepts."""


class ContractViolation(NrepError):
    """Raised when operands that must share a Fock basis do not."""


class NumericalError(NrepError, ArithmeticError):
    """Raised when a numerical kernel cannot produce a finite, converged result."""


class ParseError(NrepError, ValueError):
    """Raised when an input file is malformed."""

    def __init__(self, path: Union[str, Path, None], line_no: Optional[int], message: str):
        self.path = str(path) if path is not None else "<string>"
        self.line_no = line_no
        self.message = message
        where = f"{self.path}:{line_no}" if line_no is not None else self.path
        super().__init__(f"{where}: {message}")


class ConfigError(NrepError, ValueError):
    """Raised when an experiment config is invalid; names the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        self.message = message
        super().__init__(f"config key '{key}': {message}")


class AnnealingAborted(NumericalError):
    """Raised when an annealing run hits a non-finite distance; keeps what was computed."""

    def __init__(self, message: str, trace=None, ansatz=None):
        self.trace = trace
        self.ansatz = ansatz
        super().__init__(message)
