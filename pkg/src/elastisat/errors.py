"""Exception types shared across the package."""


class ElastisatError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(ElastisatError):
    """A physical or numerical parameter is outside its admissible range."""


class DegenerateBasisError(ElastisatError):
    """The Galerkin basis is linearly dependent (mass matrix not SPD)."""


class SingularConfigurationError(ElastisatError):
    """det(Dzeta) <= 0 somewhere: local interpenetration of matter."""


class ImpactProximityError(ElastisatError):
    """A material point is at (or inside) the impact radius around the planet."""


class NoConvergenceError(ElastisatError):
    """Iterative solver failed to reach its tolerance.

    Carries the residual history so callers can report a trace.
    """

    def __init__(self, message, residual_trace=None):
        super().__init__(message)
        self.residual_trace = list(residual_trace) if residual_trace is not None else []


class DegenerateCatalogError(ElastisatError):
    """Rigid-body catalog requested for a non-triaxial inertia tensor."""


class InsufficientDataError(ElastisatError):
    """A trajectory tail is too short for the requested diagnostic window."""


class ConfigError(ElastisatError):
    """Scenario configuration is malformed or violates its schema."""
