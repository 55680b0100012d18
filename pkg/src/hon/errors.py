"""Exception types raised across the package."""

from __future__ import annotations


class HONError(Exception):
    """Base class for all package errors."""


class MalformedLine(HONError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyInput(HONError):
    pass


class SupportViolation(HONError):
    pass


class DanglingPrefix(HONError):
    pass


class UnknownEntity(HONError):
    pass


class NonConvergence(HONError):
    def __init__(self, max_iter: int):
        super().__init__(f"power iteration did not converge in {max_iter} iterations")
        self.max_iter = max_iter


class UniverseMismatch(HONError):
    pass


class InfeasibleConfig(HONError):
    pass
