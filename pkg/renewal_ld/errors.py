"""Exception hierarchy for renewal-ld.

Every error that can reach the command line carries the process exit code
it maps to.
"""


class RenewalLDError(Exception):
    """Base class for toolkit errors."""

    exit_code = 1


class ConfigError(RenewalLDError):
    """Invalid or inconsistent experiment configuration."""

    exit_code = 2


class OutputError(RenewalLDError):
    """Reading or writing an artifact failed."""

    exit_code = 3


class InsufficientDataError(RenewalLDError):
    """Not enough usable points to produce a result."""

    exit_code = 4


class VerificationFailure(RenewalLDError):
    """At least one enabled verification check failed."""

    exit_code = 5


class QuadratureError(RenewalLDError):
    """Adaptive quadrature did not reach the requested tolerance.

    Attributes:
        t: Time point whose integral failed, if known.
        error_estimate: Last error estimate of the integral.
    """

    exit_code = 4

    def __init__(self, message: str, t: float | None = None, error_estimate: float = float("nan")):
        super().__init__(message)
        self.t = t
        self.error_estimate = error_estimate


class TruncationError(RenewalLDError):
    """Series truncation remainder exceeds the requested tolerance.

    Attributes:
        required_k_max: Table depth that would bring the remainder below tolerance.
    """

    exit_code = 4

    def __init__(self, message: str, required_k_max: int):
        super().__init__(message)
        self.required_k_max = required_k_max


class ConvergenceError(RenewalLDError):
    """A constant search did not stabilize on its grid."""

    exit_code = 4


class PreconditionError(RenewalLDError):
    """A bound was evaluated outside its admissible parameter range.

    Attributes:
        admissible: The limiting admissible value (e.g. minimal d).
    """

    exit_code = 4

    def __init__(self, message: str, admissible: float):
        super().__init__(message)
        self.admissible = admissible
