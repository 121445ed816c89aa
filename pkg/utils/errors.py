"""
Error types shared by the scattering library and the CLI
"""

from typing import Any, Dict, Optional


class ScatteringError(Exception):
    """Base error. `details` is copied verbatim into JSON reports."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, "details": self.details}


# Input problems (CLI exit code 2)

class InputError(ScatteringError):
    pass


class ParseError(InputError):
    pass


class ValidationError(InputError):
    pass


class DomainError(InputError):
    pass


class TruncationTooSmall(InputError):
    pass


class UsageError(InputError):
    pass


# Numerical problems (CLI exit code 1)

class NumericalError(ScatteringError):
    pass


class ZeroArgument(NumericalError):
    pass


class ResolventSingular(NumericalError):
    pass


class GammaSingular(NumericalError):
    pass


class RankAmbiguous(NumericalError):
    pass


class MatchingAmbiguous(NumericalError):
    pass


class NoCrossing(NumericalError):
    pass


class RefinementExhausted(NumericalError):
    pass


class NotInteger(NumericalError):
    pass


class QuadratureStalled(NumericalError):
    pass


class PacketNotCleared(NumericalError):
    pass