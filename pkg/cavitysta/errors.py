"""
Exception hierarchy for cavitysta
Every error carries a stable machine code and a one-line message
"""

from typing import Any, Dict, Optional


class CavityStaError(Exception):
    """Base class for all simulator errors"""

    code = "INTERNAL_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self):
        return self.message


class SignMismatch(CavityStaError):
    """The detuning difference cannot realize the requested counter-diabatic coupling"""
    code = "SIGN_MISMATCH"


class TruncationError(CavityStaError):
    """The Fock truncation is too small for the requested operator"""
    code = "TRUNCATION"


class DegenerateInput(CavityStaError):
    code = "DEGENERATE_INPUT"


class NotHermitian(CavityStaError):
    code = "NOT_HERMITIAN"


class GaugeBreak(CavityStaError):
    """Consecutive eigenvectors lost overlap (grid too coarse or a level crossing)"""
    code = "GAUGE_BREAK"


class StepFailure(CavityStaError):
    code = "STEP_FAILURE"


class PositivityLoss(CavityStaError):
    code = "POSITIVITY_LOSS"


class NonPhysicalInput(CavityStaError):
    code = "NON_PHYSICAL_INPUT"


class InvariantViolation(CavityStaError):
    """A hard run invariant (norm, trace, hermiticity, positivity) was broken"""
    code = "INVARIANT_VIOLATION"

    def __init__(self, check: str, message: str):
        super().__init__(f"{check}: {message}", details={"check": check})
        self.check = check


class ConfigError(CavityStaError):
    code = "CONFIG_ERROR"

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, details={"line": line, "key": key})
        self.line = line
        self.key = key


class CheckFailed(CavityStaError):
    """A diagnostic report ran to completion but missed its acceptance limits"""
    code = "CHECK_FAILED"
