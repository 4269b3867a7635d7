"""Exception hierarchy shared by all riskforms modules.

The split mirrors the CLI exit-code contract: validation and domain errors
exit with status 1, resource errors with status 2.
"""


class RiskFormsError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RiskFormsError, ValueError):
    """Malformed data: shape mismatches, bad probability vectors, invalid specs."""


class DomainError(RiskFormsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ResourceError(RiskFormsError, RuntimeError):
    """A configured resource limit (e.g. the policy enumeration cap) was exceeded."""
