"""
Custom exception classes for BroadcastBench
Provides structured error handling with error codes
"""
from typing import Optional


class ServiceError(Exception):
    """
    Base exception class for all workbench errors.
    Allows optional error code and message.
    """
    def __init__(self, message: str, error_code: str = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or "SERVICE_ERROR"

    def __str__(self):
        return f"[{self.error_code}] {self.message}"

    def to_dict(self):
        """Convert exception to dictionary for API responses and reports"""
        return {
            "error": self.error_code,
            "message": self.message
        }


class InstanceError(ServiceError):
    """
    Raised when an instance file is malformed or violates a model invariant.

    Common error codes:
    - MALFORMED: JSON syntax or shape error
    - UNKNOWN_PAGE: request references a page that does not exist
    - DUPLICATE_PAGE: two pages share an id
    - DEADLINE_BEFORE_ARRIVAL: deadline <= arrival
    - SLACK_TOO_SMALL: slack < page length
    - SLOTTED_VIOLATION: non-integer time or non-unit page in a slotted instance
    - UNICAST_SHARED_PAGE: two requests share a page in the unicast setting
    - NEGATIVE_ARRIVAL, BAD_LENGTH, BAD_WEIGHT, BAD_MULTIPLICITY
    """
    def __init__(self, message: str, error_code: str = "INVALID_INSTANCE", entity: Optional[str] = None):
        super().__init__(message, error_code)
        self.entity = entity

    def to_dict(self):
        data = super().to_dict()
        if self.entity is not None:
            data["entity"] = self.entity
        return data


class ConfigurationError(ServiceError):
    """
    Raised for invalid policy or simulation configuration.

    Common error codes:
    - MISSING_PARAMETER: c not given for a waiting policy
    - BAD_PARAMETER: c <= 1, speed < 1
    - MODE_NOT_SUPPORTED: preemptive mode with a policy lacking a preemption rule,
      or a slotted instance run preemptively
    """
    def __init__(self, message: str, error_code: str = "INVALID_CONFIG"):
        super().__init__(message, error_code)


class PolicyMismatchError(ServiceError):
    """
    Raised when a policy or metric needs request fields the instance lacks
    (deadlines for the slack-based policies and the delay-factor metrics).
    """
    def __init__(self, message: str, error_code: str = "POLICY_MISMATCH"):
        super().__init__(message, error_code)


class OracleLimitError(ServiceError):
    """Raised when an instance exceeds the exhaustive oracle's size guard."""
    def __init__(self, message: str, error_code: str = "ORACLE_CAP_EXCEEDED"):
        super().__init__(message, error_code)


class AdversaryError(ServiceError):
    """
    Raised for invalid LF adversary parameters.

    Common error codes:
    - K_TOO_SMALL: k override breaks R_0 <= 1/(3s)
    - BAD_PARAMETER: s < 1 or c < 2
    """
    def __init__(self, message: str, error_code: str = "INVALID_ADVERSARY"):
        super().__init__(message, error_code)


class VerificationError(ServiceError):
    """
    Raised when an empirical check of a proven bound or an exact replay fails.
    Always indicates a bug in the workbench, never a user error.
    """
    def __init__(self, message: str, error_code: str = "VERIFICATION_FAILED", details: Optional[dict] = None):
        super().__init__(message, error_code)
        self.details = details or {}

    def to_dict(self):
        data = super().to_dict()
        if self.details:
            data["details"] = self.details
        return data


__all__ = [
    "ServiceError",
    "InstanceError",
    "ConfigurationError",
    "PolicyMismatchError",
    "OracleLimitError",
    "AdversaryError",
    "VerificationError",
]
