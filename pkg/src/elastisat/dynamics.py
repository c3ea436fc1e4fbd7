"""Equations of motion in Galerkin coordinates and their time integration.

The reduced system is M qddot = f(q) - g(q, qdot) with the constant mass
matrix M prefactored once, f the exact gradient force of the conservative
potentials and g the viscous force. Trajectories carry per-sample energy
monitors and rigidity diagnostics; termination is event-based (impact,
escape ceiling, loss of regularity).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .body_model import DeformationState, ReferenceBody, require_regular
from .dissipation import (
    ViscosityParams,
    _cauchy_green_rate_nodes,
    dissipation_rate,
    max_cauchy_green_rate,
    viscous_force,
)
from .energetics import MaterialParams, conservative_force, energy_breakdown, EnergyBreakdown
from .errors import ImpactProximityError, InvalidParameterError, SingularConfigurationError

MONITOR_COLUMNS = (
    "t", "K", "U_g", "U_sg", "U_e", "H",
    "Lx", "Ly", "Lz", "diss_rate", "Cdot_max", "Y_norm", "omega_norm",
)

_SCIPY_METHODS = {"dop853": "DOP853", "rk45": "RK45"}


@dataclass(frozen=True)
class IntegratorSettings:
    """Time-integration controls.

    method: 'dop853' (adaptive embedded RK, order 8, default), 'rk45'
        (adaptive embedded RK, order 5), or 'rk4' (fixed step; uses
        max_step as its step size).
    impact_radius: terminate when any material point gets this close to
        the planet; escape_radius: hard ceiling on the barycenter distance
        that stops runaway runs (classification happens downstream).
    """

    method: str = "dop853"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    t_end: float = 1.0
    max_step: float = np.inf
    record_every: float | None = None
    impact_radius: float = 1e-2
    escape_radius: float = 1e3

    def __post_init__(self):
        if self.method not in ("dop853", "rk45", "rk4"):
            raise InvalidParameterError(f"unknown integrator method {self.method!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InvalidParameterError("tolerances must be positive")
        if self.t_end <= 0:
            raise InvalidParameterError("t_end must be positive")
        if self.method == "rk4" and not np.isfinite(self.max_step):
            raise InvalidParameterError("fixed-step rk4 needs a finite max_step")
        if self.record_every is not None and self.record_every <= 0:
            raise InvalidParameterError("record_every must be positive")

    @property
    def sample_interval(self) -> float:
        return self.record_every if self.record_every is not None else self.t_end / 500.0


@dataclass
class Trajectory:
    """Recorded integration output: states, monitors, diagnostics, termination."""

    times: np.ndarray
    q_history: np.ndarray        # (n, 3N)
    qdot_history: np.ndarray     # (n, 3N)
    monitors: list[EnergyBreakdown]
    cdot_max: np.ndarray
    y_norm: np.ndarray
    omega_norm: np.ndarray
    termination: str             # completed | impact-detected | escape-detected | step-failure
    termination_reason: str = ""

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> DeformationState:
        return DeformationState(self.q_history[i].copy(), self.qdot_history[i].copy())

    @property
    def final_state(self) -> DeformationState:
        return self.state(len(self.times) - 1)

    def tail(self, t_from: float) -> "Trajectory":
        """Sub-trajectory with times >= t_from (shared termination tag)."""
        keep = self.times >= t_from
        idx = np.nonzero(keep)[0]
        return Trajectory(
            times=self.times[idx],
            q_history=self.q_history[idx],
            qdot_history=self.qdot_history[idx],
            monitors=[self.monitors[i] for i in idx],
            cdot_max=self.cdot_max[idx],
            y_norm=self.y_norm[idx],
            omega_norm=self.omega_norm[idx],
            termination=self.termination,
            termination_reason=self.termination_reason,
        )

    def monitor_rows(self) -> np.ndarray:
        """Monitor table in the frozen MONITOR_COLUMNS order, shape (n, 13)."""
        rows = np.empty((len(self.times), len(MONITOR_COLUMNS)))
        for i, (t, mon) in enumerate(zip(self.times, self.monitors)):
            rows[i] = (
                t, mon.K, mon.U_g, mon.U_sg, mon.U_e, mon.H,
                mon.L[0], mon.L[1], mon.L[2], mon.dissipation_rate,
                self.cdot_max[i], self.y_norm[i], self.omega_norm[i],
            )
        return rows


_EYE3 = np.eye(3)


def _node_gradients_fast(Gm, A):
    """F at every node: F_q = A^T Dm(x_q), as one BLAS contraction."""
    return np.tensordot(Gm, A, axes=([1], [0])).transpose(0, 2, 1)


def _stress_divergence(weights, Gm, P):
    """Galerkin force of a nodal first-Piola field: sum_q w_q P_q Dm_q^T per mode."""
    return np.tensordot(weights[:, None, None] * P, Gm, axes=([0, 2], [0, 2])).T


def _accel(body, A, Adot, material, viscosity):
    """Acceleration coefficients, reusing one pass of node tables."""
    Z = body.P @ A
    F = _node_gradients_fast(body.Gm, A)
    m = body.density * body.weights

    r2 = np.sum(Z * Z, axis=1)
    dU_dZ = material.kM * (m / (r2 * np.sqrt(r2)))[:, None] * Z
    if material.self_gravity_k > 0.0:
        diff = Z[:, None, :] - Z[None, :, :]
        s2 = np.einsum("qpi,qpi->qp", diff, diff) + material.softening**2
        np.fill_diagonal(s2, 1.0)
        inv3 = s2 ** (-1.5)
        np.fill_diagonal(inv3, 0.0)
        coeff = m[:, None] * m[None, :] * inv3
        dU_dZ += 2.0 * material.self_gravity_k * np.einsum("qp,qpi->qi", coeff, diff)

    E = 0.5 * (np.matmul(F.transpose(0, 2, 1), F) - _EYE3)
    trE = E[:, 0, 0] + E[:, 1, 1] + E[:, 2, 2]
    S2 = (material.lam * trE[:, None, None] * _EYE3 + 2.0 * material.mu * E) / material.epsilon
    P1 = np.matmul(F, S2)

    if viscosity.eta > 0.0:
        Fdot = _node_gradients_fast(body.Gm, Adot)
        Cdot = _cauchy_green_rate_nodes(F, Fdot)
        P1 = P1 + viscosity.eta * np.matmul(F, Cdot)

    rhs = -(body.P.T @ dU_dZ) - _stress_divergence(body.weights, body.Gm, P1)
    return body.solve_mass(rhs)


def equations_of_motion(
    body: ReferenceBody,
    state: DeformationState,
    material: MaterialParams,
    viscosity: ViscosityParams = ViscosityParams(0.0),
    impact_radius: float = 0.0,
):
    """(qdot, qddot) of the reduced system M qddot = f_conservative - g_viscous."""
    require_regular(body, state, impact_radius)
    A = state.q.reshape(-1, 3)
    Adot = state.qdot.reshape(-1, 3)
    return state.qdot.copy(), _accel(body, A, Adot, material, viscosity).reshape(-1)


def instantaneous_spin(body: ReferenceBody, state: DeformationState):
    """Best-fit rigid angular velocity about the barycenter and the orbital rate.

    Returns (omega_spin, omega_orbit): omega_spin solves the weighted
    least-squares fit zetadot ~ cdot + omega x (zeta - c) over the nodes;
    omega_orbit = c x cdot / |c|^2.
    """
    Z = body.node_positions(state.q)
    Zd = body.node_positions(state.qdot)
    m = body.density * body.weights
    c = body.barycenter(state.q)
    cd = body.barycenter(state.qdot)
    rel = Z - c
    reld = Zd - cd
    L_c = np.einsum("q,qi->i", m, np.cross(rel, reld))
    r2 = np.einsum("qi,qi->q", rel, rel)
    I_c = np.einsum("q,ij->ij", m * r2, np.eye(3)) - np.einsum("q,qi,qj->ij", m, rel, rel)
    omega_spin = np.linalg.solve(I_c, L_c)
    c2 = float(np.dot(c, c))
    omega_orbit = np.cross(c, cd) / c2 if c2 > 0 else np.zeros(3)
    return omega_spin, omega_orbit


def comoving_decomposition(body: ReferenceBody, state: DeformationState):
    """Mass-weighted orthogonal-Procrustes factorization zeta(x) ~ R (x + Y).

    Fits the quadrature-node images against the reference nodes; returns
    (R in SO(3), Y, xi_residual) with xi_residual the mass-weighted RMS
    misfit (zero exactly for rigid placements of the reference shape).
    """
    Z, _ = require_regular(body, state)
    m = body.density * body.weights
    total = float(np.sum(m))
    xbar = body.first_moment / body.mass
    zbar = body.barycenter(state.q)
    Xc = body.nodes - xbar
    Zc = Z - zbar
    Hcorr = (m[:, None] * Xc).T @ Zc
    U, _, Vt = np.linalg.svd(Hcorr)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = zbar - R @ xbar
    Y = R.T @ t
    misfit = Z - (body.nodes @ R.T + t)
    residual = float(np.sqrt(np.einsum("q,qi,qi->", m, misfit, misfit) / total))
    return R, Y, residual


def rigidity_diagnostic(body: ReferenceBody, state: DeformationState):
    """(max node |Cdot|, max pairwise distance drift rate); both zero iff rigid."""
    cdot = max_cauchy_green_rate(body, state)
    Z = body.node_positions(state.q)
    Zd = body.node_positions(state.qdot)
    dz = Z[:, None, :] - Z[None, :, :]
    dzd = Zd[:, None, :] - Zd[None, :, :]
    dist2 = np.einsum("qpi,qpi->qp", dz, dz)
    np.fill_diagonal(dist2, 1.0)
    drift = np.abs(np.einsum("qpi,qpi->qp", dz, dzd)) / np.sqrt(dist2)
    np.fill_diagonal(drift, 0.0)
    return cdot, float(np.max(drift))


def _monitor_sample(body, state, material, viscosity):
    mon = energy_breakdown(
        body, state, material,
        dissipation_rate=dissipation_rate(body, state, viscosity),
    )
    cdot = max_cauchy_green_rate(body, state)
    _, Y, _ = comoving_decomposition(body, state)
    omega_spin, _ = instantaneous_spin(body, state)
    return mon, cdot, float(np.linalg.norm(Y)), float(np.linalg.norm(omega_spin))


def _build_trajectory(body, times, states, material, viscosity, termination, reason):
    n = len(times)
    nq = states.shape[1] // 2
    monitors, cdots, ys, oms = [], np.empty(n), np.empty(n), np.empty(n)
    for i in range(n):
        st = DeformationState(states[i, :nq], states[i, nq:])
        mon, cd, yn, om = _monitor_sample(body, st, material, viscosity)
        monitors.append(mon)
        cdots[i], ys[i], oms[i] = cd, yn, om
    return Trajectory(
        times=np.asarray(times, dtype=float),
        q_history=states[:, :nq].copy(),
        qdot_history=states[:, nq:].copy(),
        monitors=monitors,
        cdot_max=cdots,
        y_norm=ys,
        omega_norm=oms,
        termination=termination,
        termination_reason=reason,
    )


def integrate(
    body: ReferenceBody,
    state0: DeformationState,
    material: MaterialParams,
    viscosity: ViscosityParams,
    settings: IntegratorSettings,
) -> Trajectory:
    """Integrate the reduced equations of motion from state0 to t_end.

    Stops early with the matching termination tag when a material point
    reaches the impact radius, the barycenter crosses the escape ceiling,
    or the configuration loses regularity (det Dzeta -> 0, mapped to
    step-failure since the model cannot be continued through it).
    """
    require_regular(body, state0, settings.impact_radius)
    nq = body.n_modes
    y0 = np.concatenate([state0.q, state0.qdot])

    def rhs(t, y):
        A = y[:nq].reshape(-1, 3)
        Adot = y[nq:].reshape(-1, 3)
        acc = _accel(body, A, Adot, material, viscosity)
        return np.concatenate([y[nq:], acc.reshape(-1)])

    def impact_event(t, y):
        Z = body.P @ y[:nq].reshape(-1, 3)
        return float(np.min(np.linalg.norm(Z, axis=1))) - settings.impact_radius

    def escape_event(t, y):
        c = body.barycenter(y[:nq])
        return settings.escape_radius - float(np.linalg.norm(c))

    def singular_event(t, y):
        F = np.einsum("ai,qaj->qij", y[:nq].reshape(-1, 3), body.Gm)
        return float(np.min(np.linalg.det(F)))

    for ev in (impact_event, escape_event, singular_event):
        ev.terminal = True
        ev.direction = -1.0

    dt = min(settings.sample_interval, settings.t_end)
    n_samples = max(1, int(round(settings.t_end / dt)))
    t_eval = np.linspace(0.0, settings.t_end, n_samples + 1)

    if settings.method in _SCIPY_METHODS:
        sol = solve_ivp(
            rhs,
            (0.0, settings.t_end),
            y0,
            method=_SCIPY_METHODS[settings.method],
            rtol=settings.rel_tol,
            atol=settings.abs_tol,
            max_step=settings.max_step,
            t_eval=t_eval,
            events=[impact_event, escape_event, singular_event],
            dense_output=False,
        )
        times = list(sol.t)
        states = list(sol.y.T)
        if sol.status == 1:
            tags = ["impact-detected", "escape-detected", "step-failure"]
            reasons = ["impact radius reached", "escape ceiling crossed",
                       "configuration became singular (det Dzeta -> 0)"]
            which = next(i for i, te in enumerate(sol.t_events) if len(te) > 0)
            termination, reason = tags[which], reasons[which]
            t_ev = sol.t_events[which][0]
            if not times or times[-1] < t_ev:
                times.append(t_ev)
                states.append(sol.y_events[which][0])
        elif sol.status == 0:
            termination, reason = "completed", ""
        else:
            termination, reason = "step-failure", sol.message
        if not times:  # event fired before the first sample beyond t=0
            times, states = [0.0], [y0]
    else:  # fixed-step rk4
        times, states, termination, reason = _integrate_rk4(
            rhs, y0, settings, impact_event, escape_event, singular_event
        )

    return _build_trajectory(
        body, np.array(times), np.array(states), material, viscosity, termination, reason
    )


def _integrate_rk4(rhs, y0, settings, *events):
    h = settings.max_step
    record_stride = max(1, int(round(settings.sample_interval / h)))
    tags = ["impact-detected", "escape-detected", "step-failure"]
    reasons = ["impact radius reached", "escape ceiling crossed",
               "configuration became singular (det Dzeta -> 0)"]
    times, states = [0.0], [y0.copy()]
    t, y = 0.0, y0.copy()
    n_steps = int(np.ceil(settings.t_end / h))
    termination, reason = "completed", ""
    for step in range(1, n_steps + 1):
        hh = min(h, settings.t_end - t)
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * hh, y + 0.5 * hh * k1)
        k3 = rhs(t + 0.5 * hh, y + 0.5 * hh * k2)
        k4 = rhs(t + hh, y + hh * k3)
        y = y + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t + hh
        hit = next((i for i, ev in enumerate(events) if ev(t, y) <= 0.0), None)
        if hit is not None:
            times.append(t)
            states.append(y.copy())
            termination, reason = tags[hit], reasons[hit]
            break
        if step % record_stride == 0 or t >= settings.t_end:
            times.append(t)
            states.append(y.copy())
    return times, states, termination, reason
