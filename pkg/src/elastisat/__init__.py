"""Galerkin-reduced simulator for a dissipative elastic satellite.

The deformation of an ellipsoidal body orbiting a fixed point mass is
expanded in vector polynomials; the reduced dynamics conserves angular
momentum exactly, dissipates energy through Kelvin-Voigt viscosity, and
admits synchronous relative equilibria that the solver and classifier
in this package locate and detect.
"""

from .body_model import (
    DeformationBasis,
    DeformationState,
    ReferenceBody,
    build_ellipsoid_body,
    ellipsoid_quadrature,
    evaluate_map,
    identity_coefficients,
    mass_matrix,
    monomial_exponents,
    rigid_state,
    skew,
)
from .classifier import (
    CaptureMetrics,
    CaptureThresholds,
    Classification,
    Outcome,
    capture_metrics,
    classify_outcome,
    group_orbit_distance,
    two_body_energy,
    windowed_dissipation,
)
from .dissipation import (
    ViscosityParams,
    cauchy_green_rate,
    dissipation_rate,
    max_cauchy_green_rate,
    viscous_force,
)
from .dynamics import (
    IntegratorSettings,
    Trajectory,
    comoving_decomposition,
    equations_of_motion,
    instantaneous_spin,
    integrate,
    rigidity_diagnostic,
)
from .energetics import (
    EnergyBreakdown,
    MaterialParams,
    angular_momentum,
    conservative_force,
    elastic_energy,
    energy_breakdown,
    gravitational_energy,
    gravity_third_derivatives,
    kinetic_energy,
    kirchhoff_stress,
    self_gravity_energy,
    stored_energy_density,
)
from .equilibria import (
    NondegeneracyReport,
    RelativeEquilibrium,
    RigidBodyModel,
    RigidEquilibrium,
    augmented_hamiltonian,
    nondegeneracy_spectrum,
    rigid_quadrupole_catalog,
    solve_relative_equilibrium,
    synchronous_guess,
)
from .errors import (
    ConfigError,
    DegenerateBasisError,
    DegenerateCatalogError,
    ElastisatError,
    ImpactProximityError,
    InsufficientDataError,
    InvalidParameterError,
    NoConvergenceError,
    SingularConfigurationError,
)
from .scenario import Scenario, load_scenario, load_sweep, scenario_from_mapping, sweep_point

__all__ = [
    "CaptureMetrics",
    "CaptureThresholds",
    "Classification",
    "ConfigError",
    "DeformationBasis",
    "DeformationState",
    "DegenerateBasisError",
    "DegenerateCatalogError",
    "ElastisatError",
    "EnergyBreakdown",
    "ImpactProximityError",
    "InsufficientDataError",
    "IntegratorSettings",
    "InvalidParameterError",
    "MaterialParams",
    "NoConvergenceError",
    "NondegeneracyReport",
    "Outcome",
    "ReferenceBody",
    "RelativeEquilibrium",
    "RigidBodyModel",
    "RigidEquilibrium",
    "Scenario",
    "SingularConfigurationError",
    "Trajectory",
    "ViscosityParams",
    "angular_momentum",
    "augmented_hamiltonian",
    "build_ellipsoid_body",
    "capture_metrics",
    "cauchy_green_rate",
    "classify_outcome",
    "comoving_decomposition",
    "conservative_force",
    "dissipation_rate",
    "elastic_energy",
    "ellipsoid_quadrature",
    "energy_breakdown",
    "equations_of_motion",
    "evaluate_map",
    "gravitational_energy",
    "gravity_third_derivatives",
    "group_orbit_distance",
    "identity_coefficients",
    "instantaneous_spin",
    "integrate",
    "kinetic_energy",
    "kirchhoff_stress",
    "load_scenario",
    "load_sweep",
    "mass_matrix",
    "max_cauchy_green_rate",
    "monomial_exponents",
    "nondegeneracy_spectrum",
    "rigid_quadrupole_catalog",
    "rigid_state",
    "rigidity_diagnostic",
    "scenario_from_mapping",
    "self_gravity_energy",
    "skew",
    "solve_relative_equilibrium",
    "stored_energy_density",
    "sweep_point",
    "synchronous_guess",
    "two_body_energy",
    "viscous_force",
    "windowed_dissipation",
]
