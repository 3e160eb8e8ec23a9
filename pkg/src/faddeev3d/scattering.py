"""Inhomogeneous system and amplitude layer.

The breakup T-matrices live on dense 5-D grids (p, x_p, x^q0_pq, x_q, q),
parametrically dependent on the beam momentum q0.  Driving terms are
two-body t-matrices hitting the initial-channel bound state; one kernel
application integrates d^3 q'' of t * R0 * T_partner at shifted arguments;
the solver iterates T = D + K T and accelerates the partial sums with the
epsilon algorithm.  In-scope energies lie below the breakup threshold, so
no moving logarithmic singularities arise; the tau-pole principal-value
quadrature ships here for use between the elastic and breakup thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .atlas import GreenFunctionSpec, _triple_params, q_limits
from .errors import (
    DivergenceError,
    KinematicsError,
    SingularRegionError,
    ValidationError,
)
from .grids import QuadratureGrid
from .interp import interp5d
from .kinematics import (
    SphericalMomentum,
    breakup_args,
    compose_cosine,
    dihedral_cosine,
    elastic_args_grid,
    kernel_args,
    kernel_args_grid,
    kernel_term_geometry,
)
from .masses import MassSet
from .twobody import SeparablePotential, TwoBodyBoundState, tau

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class Axes5D:
    """Storage axes of the T-matrix tables.

    These are interpolation tables, not quadrature rules: the cosine axes
    span [-1, 1] inclusive and the momentum axes start at 0, so that every
    shifted-argument lookup stays inside the hull.
    """

    p: np.ndarray
    x_p: np.ndarray
    x_dihedral: np.ndarray
    x_q: np.ndarray
    q: np.ndarray

    def nodes(self) -> tuple[np.ndarray, ...]:
        return (self.p, self.x_p, self.x_dihedral, self.x_q, self.q)

    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.nodes())


def table_axes(
    n_p: int,
    n_xp: int,
    n_xd: int,
    n_xq: int,
    n_q: int,
    p_max: float,
    q_max: float,
) -> Axes5D:
    """Uniform table axes; p_max must cover the largest shifted momentum
    (q_table + q'' for the kernel, q + q0 for the elastic terms)."""
    return Axes5D(
        np.linspace(0.0, p_max, n_p),
        np.linspace(-1.0, 1.0, n_xp),
        np.linspace(-1.0, 1.0, n_xd),
        np.linspace(-1.0, 1.0, n_xq),
        np.linspace(0.0, q_max, n_q),
    )


@dataclass
class BreakupTMatrix:
    """Dense T-matrix table over (p, x_p, x^q0, x_q, q) at fixed q0."""

    q0: float
    axes: Axes5D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.axes.shape():
            raise ValidationError(
                f"T-matrix values shape {self.values.shape} does not match axes {self.axes.shape()}"
            )

    def zeros_like(self) -> "BreakupTMatrix":
        return replace(self, values=np.zeros_like(self.values))

    def at(self, points: np.ndarray) -> np.ndarray:
        return interp5d(self.axes.nodes(), self.values, points)


class DrivingTerm(BreakupTMatrix):
    """Inhomogeneous term of one row; same storage as a T-matrix table."""


@dataclass
class ScatteringModel:
    """Problem definition shared by the driving/kernel/amplitude operations."""

    masses: MassSet
    potentials: dict[int, SeparablePotential] = field(repr=False)
    energy: float
    q0: float
    axes: Axes5D
    qpp_grid: QuadratureGrid
    xpp_grid: QuadratureGrid
    phipp_grid: QuadratureGrid
    initial_channel: int = 1

    def __post_init__(self):
        if self.initial_channel != 1:
            raise ValidationError("the initial channel is the pair (2,3) with spectator 1")
        for i, pot in self.potentials.items():
            if pot.rank != 1:
                raise ValidationError(f"scattering layer is rank-1 only; pair {i} has rank {pot.rank}")


def channel_energy(masses: MassSet, bound_state: TwoBodyBoundState, q0: float) -> float:
    """On-shell three-body energy of channel 1: q0^2/(2 nu_1) - |E_B|."""
    return q0 * q0 / (2.0 * masses.nu(1)) - abs(bound_state.energy)


def _row_tau(model: ScatteringModel, row: int, q: float) -> float:
    nu = model.masses.nu(row)
    return float(tau(model.potentials[row], model.energy - q * q / (2.0 * nu)).tau_matrix[0, 0])


def driving_term(
    model: ScatteringModel,
    row: int,
    bound_states: dict[int, TwoBodyBoundState],
) -> DrivingTerm:
    """Both inhomogeneous terms of one row of the coupled system.

    The shifted arguments are the kernel arguments evaluated at q'' = q0
    (along the axis); the bound-state wave function of the initial pair
    (2,3) enters at the corresponding shifted momentum.
    """
    if row not in (1, 2, 3):
        raise ValidationError(f"row must be 1, 2 or 3, got {row!r}")
    if 1 not in bound_states or bound_states[1] is None:
        raise ValidationError("driving term needs the bound state of the initial pair (2,3)")
    wave = bound_states[1].wave_function
    pot = model.potentials[row]
    axes = model.axes
    p_dummy = SphericalMomentum(1.0, 1.0, 0.0)
    q0_vec = SphericalMomentum(model.q0, 1.0, 0.0)

    shape = axes.shape()
    values = np.zeros(shape)
    g_p = pot.form_factors[0](axes.p)
    for d, x_q in enumerate(axes.x_q):
        for e, q in enumerate(axes.q):
            tau_row = _row_tau(model, row, q)
            acc = 0.0
            for term in (1, 2):
                ka = kernel_args(row, term, p_dummy, SphericalMomentum(q, x_q, 0.0), q0_vec, model.q0, model.masses)
                acc += float(pot.form_factors[0](np.asarray(ka.f))) * wave(ka.g)
            values[:, :, :, d, e] = (tau_row * acc) * g_p[:, None, None]
    return DrivingTerm(model.q0, axes, values)


def _check_singular_region(model: ScatteringModel, variant: int, q: float) -> None:
    # for 0 < q < q_wedge the q'' integration sweeps across the band where
    # |y0| <= 1, regardless of whether a node lands inside it
    if model.energy <= 0.0 or q <= 0.0:
        return
    spec = GreenFunctionSpec(variant, model.masses, model.energy)
    q_vee, q_wedge = q_limits(spec)
    if q < q_wedge:
        raise SingularRegionError(
            f"free Green function variant {variant} is log-singular in q'' at "
            f"q = {q:.6g} MeV for E = {model.energy:.6g} MeV "
            f"(band limits q_vee = {q_vee:.6g}, q_wedge = {q_wedge:.6g}); "
            "integrate on a segmented grid that jumps over the singular band"
        )


def apply_kernel(
    model: ScatteringModel,
    row: int,
    t_partners: dict[int, BreakupTMatrix],
) -> BreakupTMatrix:
    """One application of the row's integral operator to the coupled partners."""
    if row not in (1, 2, 3):
        raise ValidationError(f"row must be 1, 2 or 3, got {row!r}")
    axes = model.axes
    pot = model.potentials[row]
    qpp = model.qpp_grid.nodes[:, None, None]
    w_q = model.qpp_grid.weights[:, None, None]
    x_pp = model.xpp_grid.nodes[None, :, None]
    w_x = model.xpp_grid.weights[None, :, None]
    phi_pp = model.phipp_grid.nodes[None, None, :]
    w_phi = model.phipp_grid.weights[None, None, :]
    measure = w_q * np.square(qpp) * w_x * w_phi / FOUR_PI

    geos = [kernel_term_geometry(row, term, model.masses) for term in (1, 2)]
    for geo in geos:
        if geo.partner not in t_partners:
            raise ValidationError(f"row {row} needs the partner T-matrix {geo.partner}")
    green_coefs = []
    for geo in geos:
        mu_bc, mu_ac, mc, _ = _triple_params(GreenFunctionSpec(geo.variant, model.masses, model.energy))
        green_coefs.append((1.0 / (2.0 * mu_bc), 1.0 / (2.0 * mu_ac), 1.0 / mc))
    for geo in geos:
        for q in axes.q:
            _check_singular_region(model, geo.variant, float(q))

    g_p = pot.form_factors[0](axes.p)
    values = np.zeros(axes.shape())
    for d, x_q in enumerate(axes.x_q):
        for e, q in enumerate(axes.q):
            tau_row = _row_tau(model, row, q)
            acc = 0.0
            for geo, (ca, cb, cc) in zip(geos, green_coefs):
                ka = kernel_args_grid(geo, q, x_q, qpp, x_pp, phi_pp)
                green = 1.0 / (model.energy - ca * q * q - cb * np.square(qpp) - cc * q * qpp * ka["y_qqpp"])
                pts = np.stack(
                    [
                        ka["g"].ravel(),
                        ka["x_g"].ravel(),
                        ka["x_dihedral"].ravel(),
                        ka["x_qpp"].ravel(),
                        np.broadcast_to(qpp, ka["g"].shape).ravel(),
                    ],
                    axis=1,
                )
                t_vals = t_partners[geo.partner].at(pts).reshape(ka["g"].shape)
                integrand = pot.form_factors[0](ka["f"]) * green * t_vals
                acc += float(np.sum(measure * integrand))
            values[:, :, :, d, e] = (tau_row * acc) * g_p[:, None, None]
    return BreakupTMatrix(model.q0, axes, values)


# ---------------------------------------------------------------------------
# iterative solution with series acceleration
# ---------------------------------------------------------------------------


def wynn_epsilon(seq: list[np.ndarray]) -> list[np.ndarray]:
    """Diagonal entries of Wynn's epsilon table for a partial-sum sequence.

    Returns the even-column diagonal [S_0, e_2(S), e_4(S), ...]; works
    elementwise on arrays.  Tiny differences are floored to keep converged
    elements finite.
    """
    floor = 1e-300
    eps_prev = [np.zeros_like(np.asarray(s, dtype=float)) for s in seq]
    eps_curr = [np.asarray(s, dtype=float) for s in seq]
    diagonal = [eps_curr[0]]
    col = 0
    while len(eps_curr) >= 2:
        nxt = []
        for j in range(len(eps_curr) - 1):
            diff = eps_curr[j + 1] - eps_curr[j]
            diff = np.where(np.abs(diff) < floor, np.where(diff < 0, -floor, floor), diff)
            nxt.append(eps_prev[j + 1] + 1.0 / diff)
        eps_prev, eps_curr = eps_curr, nxt
        col += 1
        if col % 2 == 0:
            diagonal.append(eps_curr[0])
    return diagonal


def neumann_pade_solve(
    model: ScatteringModel,
    bound_states: dict[int, TwoBodyBoundState],
    max_order: int = 20,
    tol: float = 1e-8,
):
    """Iterate T = D + K T; accept the epsilon-accelerated partial sums.

    Convergence is steered by a probe functional (the central grid point of
    T_1); acceptance compares successive diagonal accelerants of the full
    fields in max-norm.  Returns (T1, T2, T3, diagnostics).
    """
    if max_order < 2:
        raise ValidationError("need at least two iterations to accelerate")
    driving = {i: driving_term(model, i, bound_states) for i in (1, 2, 3)}
    current = {i: driving[i] for i in (1, 2, 3)}
    snapshots = {i: [driving[i].values.copy()] for i in (1, 2, 3)}
    probe_idx = tuple(s // 2 for s in model.axes.shape())
    probe_seq = [float(driving[1].values[probe_idx])]
    increments: list[float] = []
    residuals: list[float] = []

    converged = False
    for _ in range(max_order):
        new = {}
        for row in (1, 2, 3):
            kt = apply_kernel(model, row, {j: current[j] for j in (1, 2, 3) if j != row})
            new[row] = BreakupTMatrix(model.q0, model.axes, driving[row].values + kt.values)
        inc = max(float(np.max(np.abs(new[i].values - current[i].values))) for i in (1, 2, 3))
        increments.append(inc)
        current = new
        for i in (1, 2, 3):
            snapshots[i].append(current[i].values.copy())
        probe_seq.append(float(current[1].values[probe_idx]))

        diag = wynn_epsilon(probe_seq)
        if len(diag) >= 2:
            scale = max(abs(float(diag[-1])), abs(float(diag[-2])), 1e-300)
            if abs(float(diag[-1]) - float(diag[-2])) < tol * scale:
                field_diag = {i: wynn_epsilon(snapshots[i]) for i in (1, 2, 3)}
                resid = max(
                    float(np.max(np.abs(field_diag[i][-1] - field_diag[i][-2])))
                    for i in (1, 2, 3)
                )
                residuals.append(resid)
                field_scale = max(
                    max(float(np.max(np.abs(field_diag[i][-1]))) for i in (1, 2, 3)), 1e-300
                )
                if resid < tol * field_scale:
                    accelerated = {
                        i: BreakupTMatrix(model.q0, model.axes, field_diag[i][-1]) for i in (1, 2, 3)
                    }
                    converged = True
                    current = accelerated
                    break

    if not converged:
        growing = len(increments) >= 3 and increments[-1] > increments[-2] > increments[-3]
        ratio = increments[-1] / increments[-2] if len(increments) >= 2 and increments[-2] else float("inf")
        if growing:
            raise DivergenceError(
                f"Neumann iteration diverged after {max_order} orders", ratio
            )
        raise DivergenceError(
            f"acceleration did not converge within {max_order} orders", ratio
        )
    diagnostics = {
        "orders": len(increments),
        "increments": increments,
        "acceleration_residuals": residuals,
        "probe": probe_seq,
    }
    return current[1], current[2], current[3], diagnostics


# ---------------------------------------------------------------------------
# amplitudes
# ---------------------------------------------------------------------------


def _mag(a: float, b: float, y: float) -> float:
    return math.sqrt(max(a * a + b * b + 2.0 * a * b * y, 0.0))


def elastic_born_terms(
    model: ScatteringModel,
    q: SphericalMomentum,
    bound_states: dict[int, TwoBodyBoundState],
) -> complex:
    """The two R0^-1 channel-overlap terms of the elastic amplitude."""
    m = model.masses
    e = model.energy
    q0 = model.q0
    x_q = q.cos_theta
    psi1 = bound_states[1].wave_function
    psi2 = bound_states[2].wave_function
    psi3 = bound_states[3].wave_function
    term2 = (
        psi1(_mag(m.m1 / (m.m1 + m.m3) * q.mag, q0, x_q))
        * (e - q.mag**2 / (2.0 * m.mu(2, 3)) - q0**2 / (2.0 * m.mu(1, 3)) - q.mag * q0 * x_q / m.m3)
        * psi2(_mag(q.mag, m.m2 / (m.m2 + m.m3) * q0, x_q))
    )
    term3 = (
        psi1(_mag(m.m1 / (m.m1 + m.m2) * q.mag, q0, x_q))
        * (e - q.mag**2 / (2.0 * m.mu(2, 3)) - q0**2 / (2.0 * m.mu(1, 2)) - q.mag * q0 * x_q / m.m2)
        * psi3(_mag(q.mag, m.m3 / (m.m2 + m.m3) * q0, x_q))
    )
    return complex(term2 + term3)


def elastic_amplitude(
    model: ScatteringModel,
    t2: BreakupTMatrix,
    t3: BreakupTMatrix,
    q: SphericalMomentum,
    bound_states: dict[int, TwoBodyBoundState],
) -> complex:
    """Elastic amplitude: two Born-like terms plus the two integral terms."""
    if abs(q.mag - model.q0) > 1e-9 * max(model.q0, 1.0):
        raise KinematicsError(
            f"elastic kinematics need |q| = |q0|, got {q.mag!r} vs {model.q0!r}"
        )
    m = model.masses
    born = elastic_born_terms(model, q, bound_states)
    psi1 = bound_states[1].wave_function

    qp = model.qpp_grid.nodes[:, None, None]
    w_q = model.qpp_grid.weights[:, None, None]
    x_p = model.xpp_grid.nodes[None, :, None]
    w_x = model.xpp_grid.weights[None, :, None]
    phi_p = model.phipp_grid.nodes[None, None, :]
    w_phi = model.phipp_grid.weights[None, None, :]
    measure = w_q * np.square(qp) * w_x * w_phi

    cf = {2: m.m1 / (m.m1 + m.m3), 3: m.m1 / (m.m1 + m.m2)}
    total = 0.0
    for k, t_k in ((2, t2), (3, t3)):
        ea = elastic_args_grid(k, m, q.mag, q.cos_theta, qp, x_p, phi_p)
        overlap = psi1(
            np.sqrt(
                np.maximum(
                    (cf[k] * q.mag) ** 2 + np.square(qp) + 2.0 * cf[k] * q.mag * qp * ea["y_qq"],
                    0.0,
                )
            )
        )
        pts = np.stack(
            [
                ea["p_k"].ravel(),
                ea["x_pk"].ravel(),
                ea["x_dihedral"].ravel(),
                np.broadcast_to(x_p, ea["p_k"].shape).ravel(),
                np.broadcast_to(qp, ea["p_k"].shape).ravel(),
            ],
            axis=1,
        )
        t_vals = t_k.at(pts).reshape(ea["p_k"].shape)
        total += float(np.sum(measure * overlap * t_vals))
    return born + complex(total)


def breakup_amplitude(
    t1: BreakupTMatrix,
    t2: BreakupTMatrix,
    t3: BreakupTMatrix,
    p: SphericalMomentum,
    q: SphericalMomentum,
    masses: MassSet,
) -> float:
    """U0 = T1 at (p, q) plus T2, T3 at the re-coupled breakup arguments."""
    y_pq = compose_cosine(p.cos_theta, p.phi, q.cos_theta, q.phi)
    xd, _ = dihedral_cosine(float(y_pq), p.cos_theta, q.cos_theta)
    total = float(t1.at(np.array([[p.mag, p.cos_theta, xd, q.cos_theta, q.mag]]))[0])
    for k, t_k in ((2, t2), (3, t3)):
        ba = breakup_args(k, p, q, masses)
        total += float(
            t_k.at(np.array([[ba.p_k, ba.x_pk, ba.x_dihedral, ba.x_qk, ba.q_k]]))[0]
        )
    return total


# ---------------------------------------------------------------------------
# principal-value quadrature for the tau pole
# ---------------------------------------------------------------------------


def pv_subtracted_integral(
    f,
    q_pole: float,
    grid: QuadratureGrid,
    upper: float | None = None,
) -> float:
    """PV int dq f(q) / (q_pole^2 - q^2) by pole subtraction.

    The subtracted integrand (f(q) - f(q_pole))/(q_pole^2 - q^2) is regular;
    the analytic remainder vanishes on [0, inf) and equals
    ln((L+q_p)/(L-q_p))/(2 q_p) on [0, L].  This is the treatment for the
    two-body propagator pole at E - q^2/(2 nu) = -E_B between the elastic
    and breakup thresholds.
    """
    if q_pole <= 0.0:
        raise ValidationError(f"pole momentum must be positive, got {q_pole!r}")
    q = grid.nodes
    fq = np.asarray(f(q), dtype=float)
    f_pole = float(f(np.asarray(q_pole)))
    with np.errstate(divide="ignore", invalid="ignore"):
        sub = (fq - f_pole) / (q_pole**2 - np.square(q))
    on_pole = np.isclose(q, q_pole, rtol=1e-12, atol=0.0)
    if np.any(on_pole):
        h = 1e-6 * q_pole
        deriv = (float(f(np.asarray(q_pole + h))) - float(f(np.asarray(q_pole - h)))) / (2.0 * h)
        sub = np.where(on_pole, -deriv / (2.0 * q_pole), sub)
    value = float(np.dot(grid.weights, sub))
    if upper is not None:
        if upper <= q_pole:
            raise ValidationError("upper limit must exceed the pole momentum")
        value += f_pole * math.log((upper + q_pole) / (upper - q_pole)) / (2.0 * q_pole)
    return value
