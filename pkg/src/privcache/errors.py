"""Semantic exception hierarchy for the privcache package."""

from __future__ import annotations


class PrivcacheError(Exception):
    """Base error for this package."""


class UsageError(PrivcacheError, ValueError):
    """Malformed selector, argument, or call contract violation."""


class ModelError(PrivcacheError):
    """A probability object violates its construction invariants."""


class DomainError(PrivcacheError):
    """Query outside the mathematical domain: zero-mass conditioning event,
    off-support sample request, leakage budget outside [0, H(X)]."""


class ConfigError(PrivcacheError):
    """Invalid system parameters or experiment configuration document."""


class ProtocolError(PrivcacheError):
    """Wire-format violation: unparseable codeword, mismatched widths."""


class AuditError(PrivcacheError):
    """An end-to-end invariant failed during a pipeline audit.

    Carries the offending demand vector (or None for global invariants)
    and the invariant name, so CI output pinpoints the breach.
    """

    def __init__(self, violations: tuple[str, ...]):
        self.violations = violations
        super().__init__("; ".join(violations))
