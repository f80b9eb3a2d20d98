"""Exception types shared across the package."""


class VqsdpError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(VqsdpError):
    """Operand dimensions are inconsistent or not a power of two."""


class HermiticityError(VqsdpError):
    """A matrix that must be Hermitian is not, within tolerance."""


class MapShapeError(VqsdpError):
    """A linear map produced outputs of inconsistent shape."""


class ParamError(VqsdpError):
    """Circuit parameter vector has the wrong length."""


class UnsupportedGeneratorError(VqsdpError):
    """Layer generator violates the +/-1/2 spectrum convention."""


class FormError(VqsdpError):
    """Instance form (general/standard, equality/inequality) is incompatible."""


class ParseError(VqsdpError):
    """Instance or trace file is malformed."""


class ProjectionError(VqsdpError):
    """A vector that must be componentwise nonnegative is not."""


class DivergenceError(VqsdpError):
    """The objective became non-finite during optimization."""


class OracleError(VqsdpError):
    """The classical reference solver failed to converge."""


class DegenerateJacobianError(VqsdpError):
    """The constraint Jacobian is numerically zero everywhere."""
