"""Steering detection through conditional coherence distillation."""

from .qmat import DomainError, ValidationError

__version__ = "0.1.0"

__all__ = ["DomainError", "ValidationError", "__version__"]
