#!/usr/bin/env python3

from typing import Optional


class ReproductionError(Exception):
    """Base class for every failure the reproduction pipeline reports"""

    exit_code = 3

    def __init__(self, message: str, stage: Optional[str] = None, instance: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.instance = instance

    def to_record(self) -> dict:
        """Machine-readable failure record for the manifest"""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "stage": self.stage,
            "instance": self.instance,
            "exit_code": self.exit_code,
        }


class ReproductionMismatch(ReproductionError):
    exit_code = 1


class InvariantViolation(ReproductionError):
    exit_code = 1


class PrecisionExhausted(ReproductionError):
    exit_code = 2


class CacheInvalid(ReproductionError):
    exit_code = 3


class SchemaMismatch(ReproductionError):
    exit_code = 3


class ConfigError(ReproductionError):
    exit_code = 3


class DomainError(ReproductionError, ValueError):
    exit_code = 3


class PreconditionError(ReproductionError, ValueError):
    exit_code = 3


class PrecisionInsufficient(Exception):
    """Raised when an interval comparison cannot be decided at the current precision"""
