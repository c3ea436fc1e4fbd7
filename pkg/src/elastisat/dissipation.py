"""Kelvin-Voigt-type viscous force and the exact power balance it obeys.

The nonconservative force is the weak form of the viscous first
Piola-Kirchhoff stress P_v = eta F Cdot, with Cdot the rate of the
Cauchy-Green tensor. Since F Cdot : Fdot = |Cdot|^2 / 2 identically, the
power drained from the system is

    dH/dt = -qdot . g = -(eta/2) * integral of |Cdot|^2  <=  0,

vanishing exactly when the instantaneous motion is rigid (Cdot = 0), and
the force exerts no net torque, so angular momentum is untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .body_model import DeformationState, ReferenceBody
from .errors import InvalidParameterError


@dataclass(frozen=True)
class ViscosityParams:
    """Viscous coefficient eta >= 0 (pressure * time); eta = 0 is conservative."""

    eta: float = 0.0

    def __post_init__(self):
        if self.eta < 0:
            raise InvalidParameterError(f"eta must be >= 0, got {self.eta}")


def cauchy_green_rate(F, Fdot) -> np.ndarray:
    """Cdot = Fdot^T F + F^T Fdot; zero exactly for rigid instantaneous motion."""
    F = np.asarray(F, dtype=float)
    Fdot = np.asarray(Fdot, dtype=float)
    return Fdot.T @ F + F.T @ Fdot


def _cauchy_green_rate_nodes(F, Fdot):
    FtFd = np.matmul(np.swapaxes(F, 1, 2), Fdot)
    return FtFd + np.swapaxes(FtFd, 1, 2)


def viscous_force(
    body: ReferenceBody, state: DeformationState, params: ViscosityParams
) -> np.ndarray:
    """Generalized viscous force g, to be subtracted from the conservative force."""
    if params.eta == 0.0:
        return np.zeros_like(state.q)
    F = body.node_gradients(state.q)
    Fdot = body.node_gradients(state.qdot)
    Cdot = _cauchy_green_rate_nodes(F, Fdot)
    Pv = params.eta * np.einsum("qik,qkj->qij", F, Cdot)
    return np.einsum("q,qij,qaj->ai", body.weights, Pv, body.Gm).reshape(-1)


def dissipation_rate(
    body: ReferenceBody, state: DeformationState, params: ViscosityParams
) -> float:
    """Hdot = -(eta/2) * quadrature of |Cdot|^2; always <= 0."""
    if params.eta == 0.0:
        return 0.0
    F = body.node_gradients(state.q)
    Fdot = body.node_gradients(state.qdot)
    Cdot = _cauchy_green_rate_nodes(F, Fdot)
    return float(-0.5 * params.eta * np.dot(body.weights, np.einsum("qij,qij->q", Cdot, Cdot)))


def max_cauchy_green_rate(body: ReferenceBody, state: DeformationState) -> float:
    """Largest Frobenius norm of Cdot over the quadrature nodes (rigidity gauge)."""
    F = body.node_gradients(state.q)
    Fdot = body.node_gradients(state.qdot)
    Cdot = _cauchy_green_rate_nodes(F, Fdot)
    return float(np.sqrt(np.max(np.einsum("qij,qij->q", Cdot, Cdot))))
