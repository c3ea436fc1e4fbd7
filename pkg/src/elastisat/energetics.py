"""Conservative energies, their generalized forces, and related tensors.

Every potential is evaluated by the body's quadrature rule, and every
generalized force is the exact gradient of the discretized potential with
respect to the Galerkin coefficients, so the discrete system is exactly
Hamiltonian when dissipation is off.

Stored energy is Saint Venant-Kirchhoff,

    W(F) = (1/eps) * [ (lam/2) (tr E)^2 + mu tr(E^2) ],   E = (F^T F - I)/2,

a function of the Cauchy-Green tensor only, hence frame-indifferent by
construction. The 1/eps factor is the stiffness scale: smaller eps means a
stiffer body.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .body_model import DeformationState, ReferenceBody, require_regular
from .errors import ImpactProximityError, InvalidParameterError, SingularConfigurationError

_I3 = np.eye(3)


@dataclass(frozen=True)
class MaterialParams:
    """Material and gravitational constants.

    lam, mu: Lame-type coefficients of the stored energy (pressure units).
    epsilon: stiffness scale; the stored energy carries a 1/epsilon factor.
    kM: gravitational parameter of the fixed planet (length^3/time^2).
    self_gravity_k: gravitational constant of the body's self-attraction
        (0 disables self-gravity).
    softening: length added in quadrature to the self-gravity kernel.
    """

    lam: float = 1.0
    mu: float = 1.0
    epsilon: float = 1.0
    kM: float = 1.0
    self_gravity_k: float = 0.0
    softening: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidParameterError(f"lam must be >= 0, got {self.lam}")
        if self.mu <= 0:
            raise InvalidParameterError(f"mu must be > 0, got {self.mu}")
        if self.epsilon <= 0:
            raise InvalidParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if self.kM <= 0:
            raise InvalidParameterError(f"kM must be > 0, got {self.kM}")
        if self.self_gravity_k < 0:
            raise InvalidParameterError(f"self_gravity_k must be >= 0, got {self.self_gravity_k}")
        if self.softening < 0:
            raise InvalidParameterError(f"softening must be >= 0, got {self.softening}")


@dataclass
class EnergyBreakdown:
    """Energies, total, angular momentum, and dissipation rate at one instant."""

    K: float
    U_g: float
    U_sg: float
    U_e: float
    H: float
    L: np.ndarray
    dissipation_rate: float = 0.0

    @classmethod
    def assemble(cls, K, U_g, U_sg, U_e, L, dissipation_rate=0.0):
        return cls(K=K, U_g=U_g, U_sg=U_sg, U_e=U_e, H=K + U_g + U_sg + U_e,
                   L=np.asarray(L, dtype=float), dissipation_rate=dissipation_rate)


def cauchy_green(F) -> np.ndarray:
    """Right Cauchy-Green tensor C = F^T F."""
    F = np.asarray(F, dtype=float)
    return F.T @ F


def stored_energy_density(x, F, params: MaterialParams) -> float:
    """Saint Venant-Kirchhoff stored energy density W(x, F); requires det F > 0."""
    F = np.asarray(F, dtype=float)
    if np.linalg.det(F) <= 0.0:
        raise SingularConfigurationError("stored energy requires det F > 0")
    E = 0.5 * (cauchy_green(F) - _I3)
    tr = np.trace(E)
    return (0.5 * params.lam * tr * tr + params.mu * np.sum(E * E)) / params.epsilon


def elastic_first_piola(F, params: MaterialParams) -> np.ndarray:
    """dW/dF = F S with the second Piola-Kirchhoff stress S = (lam tr E I + 2 mu E)/eps."""
    F = np.asarray(F, dtype=float)
    E = 0.5 * (cauchy_green(F) - _I3)
    S = (params.lam * np.trace(E) * _I3 + 2.0 * params.mu * E) / params.epsilon
    return F @ S


def kirchhoff_stress(x, F, params: MaterialParams) -> np.ndarray:
    """Kirchhoff stress tau[i,j] = F[i,a] dW/dF[j,a]; symmetric by frame indifference."""
    F = np.asarray(F, dtype=float)
    if np.linalg.det(F) <= 0.0:
        raise SingularConfigurationError("Kirchhoff stress requires det F > 0")
    tau = F @ elastic_first_piola(F, params).T
    norm = np.linalg.norm(tau)
    if norm > 0 and np.linalg.norm(tau - tau.T) > 1e-12 * norm:
        raise AssertionError("Kirchhoff stress lost symmetry")
    return tau


# --- node-level helpers reused by the force assembly ---

def _green_strain_nodes(F):
    C = np.einsum("qki,qkj->qij", F, F)
    return 0.5 * (C - _I3)


def _stored_energy_nodes(F, params: MaterialParams):
    E = _green_strain_nodes(F)
    tr = np.trace(E, axis1=1, axis2=2)
    return (0.5 * params.lam * tr**2 + params.mu * np.einsum("qij,qij->q", E, E)) / params.epsilon


def _first_piola_nodes(F, params: MaterialParams):
    E = _green_strain_nodes(F)
    tr = np.trace(E, axis1=1, axis2=2)
    S = (params.lam * tr[:, None, None] * _I3 + 2.0 * params.mu * E) / params.epsilon
    return np.einsum("qik,qkj->qij", F, S)


def _softened_inverse_distances(Z, softening):
    """Pairwise 1/sqrt(|Zq - Zq'|^2 + delta^2) with zeroed diagonal, plus displacements."""
    diff = Z[:, None, :] - Z[None, :, :]
    s2 = np.einsum("qpi,qpi->qp", diff, diff) + softening**2
    if softening == 0.0:
        np.fill_diagonal(s2, 1.0)  # diagonal excluded below anyway
    inv = 1.0 / np.sqrt(s2)
    np.fill_diagonal(inv, 0.0)
    return inv, diff


def gravitational_energy(
    body: ReferenceBody, state: DeformationState, params: MaterialParams,
    impact_radius: float = 0.0,
) -> float:
    """U_g = quadrature of -kM rho0 / |zeta(x)| over the body."""
    Z, _ = require_regular(body, state, impact_radius)
    return float(-params.kM * body.density * np.sum(body.weights / np.linalg.norm(Z, axis=1)))


def self_gravity_energy(
    body: ReferenceBody, state: DeformationState, params: MaterialParams
) -> float:
    """Softened double quadrature of -k rho0 rho0' / |zeta(x) - zeta(x')|.

    Pairs are double-counted, matching the defining double integral, so the
    gradient used by conservative_force is consistent with this value.
    """
    if params.self_gravity_k == 0.0:
        return 0.0
    Z = body.node_positions(state.q)
    m = body.density * body.weights
    inv, _ = _softened_inverse_distances(Z, params.softening)
    return float(-params.self_gravity_k * np.einsum("q,p,qp->", m, m, inv))


def elastic_energy(body: ReferenceBody, state: DeformationState, params: MaterialParams) -> float:
    """U_e = quadrature of the stored energy density."""
    F = body.node_gradients(state.q)
    return float(np.dot(body.weights, _stored_energy_nodes(F, params)))


def kinetic_energy(body: ReferenceBody, state: DeformationState) -> float:
    """K = (1/2) qdot^T M qdot via the scalar Gram matrix."""
    Adot = state.qdot.reshape(-1, 3)
    return float(0.5 * np.einsum("ab,ai,bi->", body.S, Adot, Adot))


def angular_momentum(body: ReferenceBody, state: DeformationState) -> np.ndarray:
    """L = integral of zeta x rho0 zetadot; exact for polynomial states."""
    A = state.q.reshape(-1, 3)
    Adot = state.qdot.reshape(-1, 3)
    cross = np.cross(A[:, None, :], Adot[None, :, :])
    return np.einsum("ab,abi->i", body.S, cross)


def potential_energy(
    body: ReferenceBody, state: DeformationState, params: MaterialParams,
    impact_radius: float = 0.0,
) -> float:
    """U_g + U_sg + U_e."""
    return (
        gravitational_energy(body, state, params, impact_radius)
        + self_gravity_energy(body, state, params)
        + elastic_energy(body, state, params)
    )


def conservative_force(
    body: ReferenceBody, state: DeformationState, params: MaterialParams,
    impact_radius: float = 0.0,
) -> np.ndarray:
    """Generalized force f = -grad_q (U_g + U_sg + U_e), the exact discrete gradient."""
    Z, F = require_regular(body, state, impact_radius)
    m = body.density * body.weights

    # gravity: dU_g/dZ_q = kM m_q Z_q / |Z_q|^3
    r3 = np.linalg.norm(Z, axis=1) ** 3
    dU_dZ = params.kM * (m / r3)[:, None] * Z

    if params.self_gravity_k > 0.0:
        inv, diff = _softened_inverse_distances(Z, params.softening)
        coeff = m[:, None] * m[None, :] * inv**3
        dU_dZ += 2.0 * params.self_gravity_k * np.einsum("qp,qpi->qi", coeff, diff)

    grad = body.P.T @ dU_dZ
    grad += np.einsum("q,qij,qaj->ai", body.weights, _first_piola_nodes(F, params), body.Gm)
    return -grad.reshape(-1)


def gravity_third_derivatives(Y, kM: float):
    """Closed-form third derivatives of V_g = -kM/|chi| at chi = Y.

    Returns the (1,1,1), (1,1,2) and (1,1,3) entries:

        d3V/d(chi1)^3        = 3 kM Y1 (5 Y1^2 - 3 r^2) / r^7
        d3V/d(chi1)^2 dchi2  = 3 kM Y2 (5 Y1^2 -   r^2) / r^7
        d3V/d(chi1)^2 dchi3  = 3 kM Y3 (5 Y1^2 -   r^2) / r^7
    """
    Y = np.asarray(Y, dtype=float)
    r = np.linalg.norm(Y)
    if r == 0.0:
        raise InvalidParameterError("third derivatives of -kM/|chi| are singular at Y = 0")
    r7 = r**7
    y1, y2, y3 = Y
    d111 = 3.0 * kM * y1 * (5.0 * y1**2 - 3.0 * r**2) / r7
    d112 = 3.0 * kM * y2 * (5.0 * y1**2 - r**2) / r7
    d113 = 3.0 * kM * y3 * (5.0 * y1**2 - r**2) / r7
    return d111, d112, d113


def energy_breakdown(
    body: ReferenceBody, state: DeformationState, params: MaterialParams,
    dissipation_rate: float = 0.0, impact_radius: float = 0.0,
) -> EnergyBreakdown:
    """All conservative monitors at one instant (dissipation rate supplied by caller)."""
    return EnergyBreakdown.assemble(
        K=kinetic_energy(body, state),
        U_g=gravitational_energy(body, state, params, impact_radius),
        U_sg=self_gravity_energy(body, state, params),
        U_e=elastic_energy(body, state, params),
        L=angular_momentum(body, state),
        dissipation_rate=dissipation_rate,
    )


def rotate_coefficients(q: np.ndarray, R) -> np.ndarray:
    """Coefficients of R zeta given those of zeta (block rotation action)."""
    R = np.asarray(R, dtype=float)
    return (q.reshape(-1, 3) @ R.T).reshape(-1)
