from typing import Any, Dict, Optional


class LabError(Exception):
    """
    Base class for every failure raised by the laboratory. Each subclass carries the process exit code used by the CLI and an optional dictionary with machine-readable details (seed, last iterate, error estimate).

    Attributes:
        exit_code (int): Exit status reported by `main.py` when the error escapes a command.
        details (Dict[str, Any]): Extra context serialized into `error.json`.
    """
    exit_code: int = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.details: Dict[str, Any] = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error': self.__class__.__name__,
            'message': str(self),
            'details': self.details,
            'exit_code': self.exit_code,
        }


class ParameterError(LabError, ValueError):
    exit_code = 2


class ConfigError(LabError):
    exit_code = 2


class DomainError(LabError, ValueError):
    exit_code = 2


class NumericalError(LabError):
    exit_code = 3


class ConvergenceError(NumericalError):
    exit_code = 3


class OutOfRegimeError(LabError):
    exit_code = 4
