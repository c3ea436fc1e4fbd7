"""Reference body, polynomial deformation basis, and ellipsoid quadrature.

The undeformed satellite is a triaxial ellipsoid with uniform density.
Deformations are expanded in vector-valued monomials of total degree
<= ``basis_degree``; every integral over the body is evaluated with a
tensorized Gauss-Legendre rule mapped onto the ellipsoid, so the same
rule that defines the moments also defines every energy functional.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    DegenerateBasisError,
    ImpactProximityError,
    InvalidParameterError,
    SingularConfigurationError,
)


def monomial_exponents(degree: int) -> list[tuple[int, int, int]]:
    """Exponent triples of all scalar monomials with total degree <= degree.

    Ordered by total degree, then lexicographically, starting with the
    constant monomial. Degree 1 gives [1, x, y, z].
    """
    out = []
    for d in range(degree + 1):
        for px in range(d, -1, -1):
            for py in range(d - px, -1, -1):
                out.append((px, py, d - px - py))
    return out


def _eval_monomials(exponents, x):
    """Values of each monomial at points x, shape (npts, nmono)."""
    x = np.atleast_2d(x)
    cols = [x[:, 0] ** px * x[:, 1] ** py * x[:, 2] ** pz for px, py, pz in exponents]
    return np.stack(cols, axis=1)


def _eval_monomial_gradients(exponents, x):
    """Gradients of each monomial at points x, shape (npts, nmono, 3)."""
    x = np.atleast_2d(x)
    n = x.shape[0]
    grads = np.zeros((n, len(exponents), 3))
    for a, (px, py, pz) in enumerate(exponents):
        if px > 0:
            grads[:, a, 0] = px * x[:, 0] ** (px - 1) * x[:, 1] ** py * x[:, 2] ** pz
        if py > 0:
            grads[:, a, 1] = py * x[:, 0] ** px * x[:, 1] ** (py - 1) * x[:, 2] ** pz
        if pz > 0:
            grads[:, a, 2] = pz * x[:, 0] ** px * x[:, 1] ** py * x[:, 2] ** (pz - 1)
    return grads


def ellipsoid_quadrature(semi_axes, order: int):
    """Gauss-Legendre product rule on the ellipsoid, exact for total degree <= order.

    Spherical-product transform x = (a r s cos(phi), b r s sin(phi), c r u)
    with s = sqrt(1 - u^2): Gauss-Legendre in the radial variable r on (0, 1)
    and in u = cos(theta) on (-1, 1), equispaced periodic rule in phi. All
    nodes are strictly interior and all weights positive.

    Returns (nodes (n, 3), weights (n,)).
    """
    a, b, c = semi_axes
    n_r = (order + 4) // 2       # integrates r^(order+2)
    n_u = (order + 2) // 2       # integrates u^order
    n_phi = order + 1            # trig degree <= order

    r_nodes, r_weights = leggauss(n_r)
    r_nodes = 0.5 * (r_nodes + 1.0)          # map to (0, 1)
    r_weights = 0.5 * r_weights
    u_nodes, u_weights = leggauss(n_u)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    phi_weight = 2.0 * np.pi / n_phi

    R, U, PHI = np.meshgrid(r_nodes, u_nodes, phi, indexing="ij")
    WR, WU = np.meshgrid(r_weights, u_weights, indexing="ij")
    s = np.sqrt(1.0 - U**2)
    nodes = np.stack(
        [a * R * s * np.cos(PHI), b * R * s * np.sin(PHI), c * R * U], axis=-1
    ).reshape(-1, 3)
    weights = (a * b * c * WR[..., None] * WU[..., None] * phi_weight * R**2).reshape(-1)
    return nodes, weights


@dataclass(frozen=True)
class DeformationBasis:
    """Vector-polynomial modes phi_(a,i)(x) = m_a(x) e_i up to a total degree.

    ``exponents`` lists the scalar monomials m_a; the mode count is
    3 * len(exponents). Coefficient vectors are laid out component-fastest:
    q[3a + i] multiplies m_a(x) e_i, so q.reshape(-1, 3) has one monomial
    per row.
    """

    degree: int
    exponents: tuple[tuple[int, int, int], ...]

    @property
    def n_monomials(self) -> int:
        return len(self.exponents)

    @property
    def count(self) -> int:
        return 3 * len(self.exponents)


@dataclass(frozen=True)
class ReferenceBody:
    """Immutable reference configuration with its quadrature and moments.

    All integral operators downstream reduce to contractions against the
    precomputed node tables: monomial values ``P`` (nodes x monomials),
    monomial gradients ``Gm`` (nodes x monomials x 3), and the scalar Gram
    matrix ``S`` of the monomials in the rho0-weighted inner product. The
    full mass matrix is kron(S, I3).
    """

    semi_axes: tuple[float, float, float]
    density: float
    basis: DeformationBasis
    quadrature_order: int
    nodes: np.ndarray            # (nq, 3)
    weights: np.ndarray          # (nq,)
    mass: float
    first_moment: np.ndarray     # (3,)
    second_moment: np.ndarray    # (3, 3)
    P: np.ndarray = field(repr=False)      # (nq, nm) monomial values
    Gm: np.ndarray = field(repr=False)     # (nq, nm, 3) monomial gradients
    S: np.ndarray = field(repr=False)      # (nm, nm) scalar Gram matrix
    mu_vec: np.ndarray = field(repr=False) # (nm,) integral of rho0 * m_a
    _S_cho: tuple = field(repr=False, compare=False)

    @property
    def n_modes(self) -> int:
        return self.basis.count

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    @property
    def mean_radius(self) -> float:
        a, b, c = self.semi_axes
        return float((a * b * c) ** (1.0 / 3.0))

    def inertia_tensor(self) -> np.ndarray:
        """Inertia tensor about the centroid, tr(J) I - J with J the second moment."""
        J = self.second_moment
        return np.trace(J) * np.eye(3) - J

    def node_positions(self, q: np.ndarray) -> np.ndarray:
        """Images zeta(x_q) of all quadrature nodes, shape (nq, 3)."""
        return self.P @ q.reshape(-1, 3)

    def node_gradients(self, q: np.ndarray) -> np.ndarray:
        """Deformation gradients Dzeta(x_q) at all nodes, shape (nq, 3, 3)."""
        return np.einsum("ai,qaj->qij", q.reshape(-1, 3), self.Gm)

    def barycenter(self, q: np.ndarray) -> np.ndarray:
        """Mass center of the deformed body (exact for polynomial maps)."""
        return (self.mu_vec @ q.reshape(-1, 3)) / self.mass

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        """Solve M x = rhs with the prefactored mass matrix."""
        return cho_solve(self._S_cho, rhs.reshape(-1, 3)).reshape(rhs.shape)


@dataclass
class DeformationState:
    """Galerkin coefficients of the map zeta and its velocity.

    zeta(x) = sum_k q[k] phi_k(x) and likewise for qdot; momenta are
    p = M qdot. Layout is component-fastest (see DeformationBasis).
    """

    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.qdot = np.asarray(self.qdot, dtype=float)
        if self.q.shape != self.qdot.shape or self.q.ndim != 1:
            raise InvalidParameterError("q and qdot must be equal-length 1-D arrays")

    def copy(self) -> "DeformationState":
        return DeformationState(self.q.copy(), self.qdot.copy())


def build_ellipsoid_body(
    semi_axes,
    density_value: float = 1.0,
    basis_degree: int = 1,
    quadrature_order: int = 8,
) -> ReferenceBody:
    """Construct the reference ellipsoid, its basis, quadrature, and moments.

    Moments are computed by the quadrature itself, so the moment invariants
    double as quadrature-exactness checks.
    """
    semi_axes = tuple(float(s) for s in semi_axes)
    if len(semi_axes) != 3 or any(s <= 0 for s in semi_axes):
        raise InvalidParameterError(f"semi-axes must be three positive lengths, got {semi_axes}")
    if density_value <= 0:
        raise InvalidParameterError(f"density must be positive, got {density_value}")
    if basis_degree not in (1, 2):
        raise InvalidParameterError(f"basis_degree must be 1 or 2, got {basis_degree}")
    if quadrature_order < 2:
        raise InvalidParameterError(f"quadrature_order must be >= 2, got {quadrature_order}")
    # the Gram matrix has integrands of degree 2*basis_degree
    quadrature_order = max(quadrature_order, 2 * basis_degree)

    nodes, weights = ellipsoid_quadrature(semi_axes, quadrature_order)
    exponents = tuple(monomial_exponents(basis_degree))
    basis = DeformationBasis(degree=basis_degree, exponents=exponents)

    P = _eval_monomials(exponents, nodes)
    Gm = _eval_monomial_gradients(exponents, nodes)
    rho_w = density_value * weights
    S = np.einsum("q,qa,qb->ab", rho_w, P, P)
    S = 0.5 * (S + S.T)
    mu_vec = rho_w @ P

    mass = float(np.sum(rho_w))
    first_moment = rho_w @ nodes
    second_moment = np.einsum("q,qi,qj->ij", rho_w, nodes, nodes)

    try:
        S_cho = cho_factor(S)
    except np.linalg.LinAlgError as exc:
        raise DegenerateBasisError(f"mass matrix is not positive definite: {exc}") from exc

    return ReferenceBody(
        semi_axes=semi_axes,
        density=density_value,
        basis=basis,
        quadrature_order=quadrature_order,
        nodes=nodes,
        weights=weights,
        mass=mass,
        first_moment=first_moment,
        second_moment=second_moment,
        P=P,
        Gm=Gm,
        S=S,
        mu_vec=mu_vec,
        _S_cho=S_cho,
    )


def evaluate_map(body: ReferenceBody, state: DeformationState, x):
    """Evaluate (zeta(x), Dzeta(x)) at one material point by exact polynomial evaluation."""
    x = np.asarray(x, dtype=float).reshape(1, 3)
    A = state.q.reshape(-1, 3)
    zeta = (_eval_monomials(body.basis.exponents, x) @ A)[0]
    grad = np.einsum("ai,aj->ij", A, _eval_monomial_gradients(body.basis.exponents, x)[0])
    return zeta, grad


def mass_matrix(body: ReferenceBody) -> np.ndarray:
    """Full Galerkin mass matrix M_jk = integral of rho0 phi_j . phi_k = kron(S, I3)."""
    M = np.kron(body.S, np.eye(3))
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise DegenerateBasisError(f"mass matrix is not positive definite: {exc}") from exc
    return M


def identity_coefficients(body: ReferenceBody) -> np.ndarray:
    """Coefficient vector of the identity map zeta(x) = x."""
    A = np.zeros((body.basis.n_monomials, 3))
    for a, exp in enumerate(body.basis.exponents):
        for i in range(3):
            unit = tuple(1 if j == i else 0 for j in range(3))
            if exp == unit:
                A[a, i] = 1.0
    return A.reshape(-1)


def rigid_state(
    body: ReferenceBody,
    rotation=None,
    translation=None,
    velocity=None,
    spin=None,
) -> DeformationState:
    """State of a rigid placement zeta(x) = R x + c with zetadot = v + spin x (R x).

    Any argument left as None defaults to the identity / zero.
    """
    R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
    c = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
    v = np.zeros(3) if velocity is None else np.asarray(velocity, dtype=float)
    w = np.zeros(3) if spin is None else np.asarray(spin, dtype=float)

    nm = body.basis.n_monomials
    A = np.zeros((nm, 3))
    Adot = np.zeros((nm, 3))
    A[0] = c
    Adot[0] = v
    lin = {exp: a for a, exp in enumerate(body.basis.exponents)}
    W = skew(w)
    for j in range(3):
        a = lin[tuple(1 if k == j else 0 for k in range(3))]
        A[a] = R[:, j]
        Adot[a] = W @ R[:, j]
    return DeformationState(A.reshape(-1), Adot.reshape(-1))


def skew(v) -> np.ndarray:
    """Matrix of the cross product: skew(v) u = v x u."""
    v = np.asarray(v, dtype=float)
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def require_regular(body: ReferenceBody, state: DeformationState, impact_radius: float = 0.0):
    """Raise unless det(Dzeta) > 0 at every node and no node is at/inside the impact radius.

    Returns (node positions, node gradients) so callers can reuse them.
    """
    Z = body.node_positions(state.q)
    F = body.node_gradients(state.q)
    dets = np.linalg.det(F)
    if np.any(dets <= 0.0):
        raise SingularConfigurationError(
            f"det(Dzeta) <= 0 at {int(np.sum(dets <= 0.0))} quadrature node(s)"
        )
    dmin = float(np.min(np.linalg.norm(Z, axis=1)))
    if dmin <= impact_radius:
        raise ImpactProximityError(
            f"material point at distance {dmin:.3e} <= impact radius {impact_radius:.3e}"
        )
    return Z, F
