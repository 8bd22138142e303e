"""Exception types shared across the package."""


class DamseepError(Exception):
    """Base class for all damseep errors."""


class GeometryError(DamseepError):
    """Section or intervention geometry is invalid."""


class MeshingError(DamseepError):
    """Triangulation could not satisfy the quality/size contract."""


class SolverError(DamseepError):
    """Linear or nonlinear solve failed outright."""


class PostprocError(DamseepError):
    """A derived quantity cannot be computed from this solution."""


class ConfigError(DamseepError):
    """Run configuration file is malformed or inconsistent."""


class ValidationError(DamseepError):
    """Instrument data cannot support the requested validation."""
