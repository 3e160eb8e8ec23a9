"""Bound states of the coupled three-body system.

The homogeneous coupled equations are discretised on the spectator-momentum
grid into a 3N x 3N eigenproblem with zero diagonal blocks,

    a_ij[m, n] = tau_i(E - q_m^2 / (2 nu_i)) w_n q_n^2
                 * (1 / 4pi) int dx'' dphi''  g_i(f) R0 g_j(g),

one row term per coupled partner.  The 1/(4pi) is the s-wave angular
normalisation that keeps the radial two-body propagator convention
consistent with the full d^3q'' measure.  A binding energy is an E < 0
where the largest kernel eigenvalue eta(E) equals 1; the eigenvector
splits into the three spectator amplitudes phi_i, from which the
wave-function components follow by the linear half-sum relations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .atlas import GreenFunctionSpec, _triple_params
from .errors import NoBoundStateError, NumericalError, PoleCollisionError, ValidationError
from .grids import QuadratureGrid
from .interp import cubic_interp_1d
from .kinematics import kernel_term_geometry
from .masses import MassSet
from .twobody import SeparablePotential, tau, tau_rank1_values, two_body_poles

FOUR_PI = 4.0 * math.pi


@dataclass
class KernelMatrix:
    """Discretised homogeneous kernel: six off-diagonal N x N blocks."""

    blocks: dict[tuple[int, int], np.ndarray]
    energy: float
    grid: QuadratureGrid
    masses: MassSet
    potentials: dict[int, SeparablePotential] = field(repr=False)

    @property
    def size(self) -> int:
        return self.grid.size

    def block(self, i: int, j: int) -> np.ndarray:
        if i == j:
            return np.zeros((self.size, self.size))
        return self.blocks[(i, j)]

    def matrix(self) -> np.ndarray:
        n = self.size
        full = np.zeros((3 * n, 3 * n))
        for (i, j), blk in self.blocks.items():
            full[(i - 1) * n : i * n, (j - 1) * n : j * n] = blk
        return full

    def matvec(self, v: np.ndarray) -> np.ndarray:
        n = self.size
        parts = [v[0:n], v[n : 2 * n], v[2 * n : 3 * n]]
        out = np.zeros_like(v)
        for (i, j), blk in self.blocks.items():
            out[(i - 1) * n : i * n] += blk @ parts[j - 1]
        return out


def _row_tau_values(
    energy: float, q_nodes: np.ndarray, masses: MassSet, pot: SeparablePotential, partition: int
) -> np.ndarray:
    nu = masses.nu(partition)
    return tau_rank1_values(pot, energy - np.square(q_nodes) / (2.0 * nu))


def _cached_poles(pot: SeparablePotential) -> list[float]:
    # idempotent, so a racy double computation is harmless
    poles = getattr(pot, "_pole_cache", None)
    if poles is None:
        poles = two_body_poles(pot)
        pot._pole_cache = poles
    return poles


def _check_pole_collision(
    energy: float, q_grid: QuadratureGrid, masses: MassSet, potentials: dict[int, SeparablePotential]
) -> None:
    for i, pot in potentials.items():
        for pole in _cached_poles(pot):
            if energy > pole:
                nu = masses.nu(i)
                q_pole = math.sqrt(2.0 * nu * (energy - pole))
                node = int(np.argmin(np.abs(q_grid.nodes - q_pole)))
                raise PoleCollisionError(
                    f"pair-{i} bound state at {pole:.6g} MeV puts a tau pole at "
                    f"q = {q_pole:.6g} MeV inside the grid (nearest node {node}: "
                    f"{q_grid.nodes[node]:.6g} MeV); lower the energy window"
                )


def assemble_kernel(
    energy: float,
    q_grid: QuadratureGrid,
    x_grid: QuadratureGrid,
    phi_grid: QuadratureGrid,
    masses: MassSet,
    potentials: dict[int, SeparablePotential],
    workers: int = 1,
    backend: str | None = None,
) -> KernelMatrix:
    """Assemble the six kernel blocks at the given (negative) energy."""
    if not energy < 0.0:
        raise ValidationError(f"bound-state kernel needs E < 0, got {energy!r}")
    if sorted(potentials) != [1, 2, 3]:
        raise ValidationError("need one potential per pair, keyed by spectator 1, 2, 3")
    for i, pot in potentials.items():
        if pot.rank != 1:
            raise ValidationError(
                f"three-body kernel supports rank-1 potentials only; pair {i} has rank {pot.rank}"
            )
    _check_pole_collision(energy, q_grid, masses, potentials)

    q_nodes = q_grid.nodes
    angular_norm = float(np.sum(phi_grid.weights)) / FOUR_PI
    col_weight = q_grid.weights * q_nodes**2 * angular_norm
    tau_rows = {
        i: _row_tau_values(energy, q_nodes, masses, potentials[i], i) for i in (1, 2, 3)
    }

    def one_term(row: int, term: int) -> tuple[tuple[int, int], np.ndarray]:
        geo = kernel_term_geometry(row, term, masses)
        mu_bc, mu_ac, mc, _ = _triple_params(GreenFunctionSpec(geo.variant, masses, energy))
        bare = kernels.block_bare(
            q_nodes,
            q_nodes,
            x_grid.nodes,
            x_grid.weights,
            geo.cf,
            geo.cg,
            potentials[row].form_factors[0],
            potentials[geo.partner].form_factors[0],
            1.0 / (2.0 * mu_bc),
            1.0 / (2.0 * mu_ac),
            1.0 / mc,
            energy,
            backend=backend,
        )
        return (row, geo.partner), tau_rows[row][:, None] * bare * col_weight[None, :]

    jobs = [(row, term) for row in (1, 2, 3) for term in (1, 2)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda rt: one_term(*rt), jobs))
    else:
        results = [one_term(*rt) for rt in jobs]
    return KernelMatrix(dict(results), energy, q_grid, masses, potentials)


# ---------------------------------------------------------------------------
# spectral machinery
# ---------------------------------------------------------------------------


def _power_iteration(kernel: KernelMatrix, tol: float, max_iter: int):
    n = 3 * kernel.size
    v = np.ones(n) / math.sqrt(n)
    eta_prev = 0.0
    for it in range(1, max_iter + 1):
        w = kernel.matvec(v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0, v, 0.0, True
        eta = float(v @ w)
        v = w / norm
        if it > 1 and abs(eta - eta_prev) <= tol * max(1.0, abs(eta)):
            residual = float(np.linalg.norm(kernel.matvec(v) - eta * v))
            if residual <= math.sqrt(tol) * max(1.0, abs(eta)):
                return eta, v, residual, True
        eta_prev = eta
    return eta_prev, v, float("nan"), False


def _dense_eigen(kernel: KernelMatrix):
    vals, vecs = np.linalg.eig(kernel.matrix())
    real_mask = np.abs(vals.imag) <= 1e-8 * (1.0 + np.abs(vals))
    if not np.any(real_mask):
        raise NumericalError("dense eigensolver found no real eigenvalue")
    idx_real = np.flatnonzero(real_mask)
    best = idx_real[np.argmax(np.abs(vals.real[idx_real]))]
    vec = vecs[:, best].real
    vec /= np.linalg.norm(vec)
    eta = float(vals.real[best])
    residual = float(np.linalg.norm(kernel.matvec(vec) - eta * vec))
    return eta, vec, residual


def spectral_eta(kernel: KernelMatrix, tol: float = 1e-10, max_iter: int = 5000) -> float:
    """Largest-magnitude real eigenvalue of the assembled kernel."""
    return _eta_and_vector(kernel, tol, max_iter)[0]


def _eta_and_vector(kernel: KernelMatrix, tol: float = 1e-10, max_iter: int = 5000):
    eta, vec, residual, converged = _power_iteration(kernel, tol, max_iter)
    if not converged:
        eta, vec, residual = _dense_eigen(kernel)
    return eta, vec, residual


# ---------------------------------------------------------------------------
# binding-energy search
# ---------------------------------------------------------------------------


@dataclass
class EigenSolution:
    e_b: float
    eta: float
    phi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    residual: float
    trace: list[tuple[float, float]]
    q_grid: QuadratureGrid
    masses: MassSet
    potentials: dict[int, SeparablePotential] = field(repr=False)

    def eigenvector(self) -> np.ndarray:
        return np.concatenate([self.phi1, self.phi2, self.phi3])


def find_binding_energy(
    window: tuple[float, float],
    tol: float,
    *,
    q_grid: QuadratureGrid,
    x_grid: QuadratureGrid,
    phi_grid: QuadratureGrid,
    masses: MassSet,
    potentials: dict[int, SeparablePotential],
    eta_tol: float = 1e-8,
    workers: int = 1,
    backend: str | None = None,
) -> EigenSolution:
    """Locate E_b with eta(E_b) = 1 by bisection plus a secant polish."""
    e_lo, e_hi = sorted(window)
    if e_hi >= 0.0:
        raise ValidationError(f"energy window must lie below zero, got {window!r}")
    trace: list[tuple[float, float]] = []

    def eta_at(e: float) -> float:
        kernel = assemble_kernel(e, q_grid, x_grid, phi_grid, masses, potentials, workers, backend)
        eta = spectral_eta(kernel)
        trace.append((e, eta))
        return eta

    g_lo = eta_at(e_lo) - 1.0
    g_hi = eta_at(e_hi) - 1.0
    if g_lo * g_hi > 0.0:
        raise NoBoundStateError(
            f"eta - 1 does not change sign on [{e_lo:g}, {e_hi:g}] MeV "
            f"({g_lo + 1.0:.6g} -> {g_hi + 1.0:.6g}); no bound state in window"
        )

    # bisect until eta is close to 1, then polish with secant steps
    a, ga, b, gb = e_lo, g_lo, e_hi, g_hi
    e_mid, g_mid = b, gb
    for _ in range(200):
        e_mid = 0.5 * (a + b)
        g_mid = eta_at(e_mid) - 1.0
        if g_mid * ga <= 0.0:
            b, gb = e_mid, g_mid
        else:
            a, ga = e_mid, g_mid
        if abs(g_mid) < 1e-6:
            break

    e0, g0 = (a, ga) if abs(ga) < abs(gb) else (b, gb)
    e1, g1 = e_mid, g_mid
    if e0 == e1:
        e0, g0 = (b, gb) if (a, ga) == (e1, g1) else (a, ga)
    for _ in range(60):
        if abs(g1) < eta_tol and abs(e1 - e0) < tol:
            break
        if g1 == g0:
            break
        e_next = e1 - g1 * (e1 - e0) / (g1 - g0)
        if not (e_lo <= e_next <= e_hi):
            e_next = 0.5 * (a + b)
        g_next = eta_at(e_next) - 1.0
        e0, g0, e1, g1 = e1, g1, e_next, g_next
    e_b = e1

    kernel = assemble_kernel(e_b, q_grid, x_grid, phi_grid, masses, potentials, workers, backend)
    eta, vec, residual = _eta_and_vector(kernel)
    if abs(eta - 1.0) > eta_tol:
        raise NumericalError(f"energy search stalled: |eta - 1| = {abs(eta - 1.0):.3e} at E = {e_b:.8g}")
    n = kernel.size
    vec = vec / np.linalg.norm(vec)
    if np.sum(vec[0:n]) < 0.0:
        vec = -vec
    return EigenSolution(
        e_b, eta, vec[0:n].copy(), vec[n : 2 * n].copy(), vec[2 * n :].copy(),
        residual, trace, q_grid, masses, potentials,
    )


# ---------------------------------------------------------------------------
# wave-function components
# ---------------------------------------------------------------------------


@dataclass
class FaddeevComponents:
    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    total: np.ndarray
    solution: EigenSolution = field(repr=False)


def reconstruct_components(sol: EigenSolution) -> FaddeevComponents:
    """Invert the half-sum relations: Psi_i = phi_j + phi_k - phi_i."""
    psi1 = sol.phi2 + sol.phi3 - sol.phi1
    psi2 = sol.phi1 + sol.phi3 - sol.phi2
    psi3 = sol.phi1 + sol.phi2 - sol.phi3
    return FaddeevComponents(psi1, psi2, psi3, psi1 + psi2 + psi3, sol)


def components_to_phi(psi1: np.ndarray, psi2: np.ndarray, psi3: np.ndarray):
    """Forward half-sum relations phi_i = (Psi_j + Psi_k) / 2."""
    return 0.5 * (psi2 + psi3), 0.5 * (psi1 + psi3), 0.5 * (psi1 + psi2)


def wavefunction_surface(
    comp: FaddeevComponents,
    p_points: np.ndarray,
    q_points: np.ndarray,
    component: int = 1,
    scale: float = 1.0,
) -> np.ndarray:
    """Component amplitude Psi_{i(jk)}(p, q) on a rectangular grid.

    The q dependence interpolates the tau-weighted spectator amplitude off
    the solution grid (cubic); the p dependence is analytic through the
    form factor and the free propagator.  q outside the solution grid is
    refused rather than extrapolated.  The eigenvector is L2-normalised;
    ``scale`` applies any physical normalisation on top.
    """
    sol = comp.solution
    pot = sol.potentials[component]
    psi = {1: comp.psi1, 2: comp.psi2, 3: comp.psi3}[component]
    nu = sol.masses.nu(component)
    mu = sol.masses.pair_mu(component)
    e = sol.e_b

    q_nodes = sol.q_grid.nodes
    tau_nodes = np.array([tau(pot, e - q * q / (2.0 * nu)).tau_matrix[0, 0] for q in q_nodes])
    reduced = psi / tau_nodes
    q_points = np.asarray(q_points, dtype=float)
    h = cubic_interp_1d(q_nodes, reduced, q_points)
    tau_q = np.array([tau(pot, e - q * q / (2.0 * nu)).tau_matrix[0, 0] for q in q_points])

    p_points = np.asarray(p_points, dtype=float)
    if np.any(p_points < 0.0):
        raise ValidationError("surface p grid must be non-negative")
    g_p = pot.form_factors[0](p_points)
    denom = e - p_points[:, None] ** 2 / (2.0 * mu) - q_points[None, :] ** 2 / (2.0 * nu)
    return scale * g_p[:, None] * (tau_q * h)[None, :] / denom
