"""Exception hierarchy shared by all bathchain modules."""


class BathchainError(Exception):
    """Base class; `code` is the machine-parsable prefix used by the CLI."""

    code = "ERROR"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InvalidParameter(BathchainError):
    code = "INVALID_PARAMETER"


class DivergentIntegral(BathchainError):
    code = "DIVERGENT_INTEGRAL"


class QuadratureFailure(BathchainError):
    code = "QUADRATURE_FAILURE"


class Breakdown(BathchainError):
    """Numerical breakdown of a recurrence (nonpositive beta, lost digits)."""

    code = "BREAKDOWN"


class InsufficientCoefficients(BathchainError):
    code = "INSUFFICIENT_COEFFICIENTS"


class NotConverged(BathchainError):
    code = "NOT_CONVERGED"


class DomainError(BathchainError):
    code = "DOMAIN_ERROR"


class UnsupportedTopology(BathchainError):
    code = "UNSUPPORTED_TOPOLOGY"


class TruncationOverflow(BathchainError):
    code = "TRUNCATION_OVERFLOW"


class NonHermitianTerm(BathchainError):
    code = "NON_HERMITIAN_TERM"


class DimensionMismatch(BathchainError):
    code = "DIMENSION_MISMATCH"


class TooLarge(BathchainError):
    code = "TOO_LARGE"


class ConfigError(BathchainError):
    code = "CONFIG"
