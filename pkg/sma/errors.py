"""
Exception hierarchy shared by the library and the command-line driver.

Every error carries the process exit code the driver returns for it.
"""


class SmaError(Exception):
    """Base class for all library errors"""

    exit_code = 1


class ConfigError(SmaError):
    """Unparseable config file, unknown key or invalid value"""

    exit_code = 2


class PreconditionError(SmaError):
    """An operation was called outside its domain"""

    exit_code = 3


class SupportError(PreconditionError):
    """A point, window or object leaves the support disk |x| < P"""


class DimensionError(PreconditionError):
    """Array shapes do not match the sampling grid"""


class PhantomError(PreconditionError):
    """Invalid disk or ambiguous boundary point"""


class KernelError(PreconditionError):
    """Kernel fails normalization, parity or order-1 exactness"""


class NoiseModelError(PreconditionError):
    """Noise model violates the parity sigma(a, p) = sigma(a + pi, -p)"""


class CoverageError(PreconditionError):
    """A quadrature domain is not covered by the patch or image"""


class NumericalError(SmaError):
    """Numerical failure in an otherwise valid computation"""

    exit_code = 1


class SingularCovarianceError(NumericalError):
    """2x2 covariance matrix is not positive definite"""


class FactorizationError(NumericalError):
    """Cholesky factorization failed even after diagonal jitter"""
