"""Separable two-body interactions and their off-shell t-matrices.

A rank-n separable potential V(p, p') = sum_nm g_n(p) lambda_nm g_m(p')
has the algebraic half-off-shell t-matrix

    t(p, p'; E) = sum_nm g_n(p) tau_nm(E) g_m(p'),
    tau(E) = [lambda^-1 - J(E)]^-1,
    J_nm(E) = int_0^inf dp p^2 g_n(p) g_m(p) / (E - p^2 / (2 mu)).

J uses the radial (partial-wave) measure; the three-body kernel carries the
matching angular normalisation.  Energies in MeV, bound-state mode E < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import NoBoundStateError, PoleProximityError, ValidationError
from .grids import momentum_grid

FormFactor = Callable[[np.ndarray], np.ndarray]

_FORM_FACTOR_FAMILIES: dict[str, Callable[..., FormFactor]] = {}


def register_form_factor(name: str, factory: Callable[..., FormFactor]) -> None:
    """Register a form-factor family; factory(**params) -> g(p)."""
    _FORM_FACTOR_FAMILIES[name] = factory


def make_form_factor(name: str, **params) -> FormFactor:
    try:
        factory = _FORM_FACTOR_FAMILIES[name]
    except KeyError:
        raise ValidationError(
            f"unknown form-factor family {name!r}; known: {sorted(_FORM_FACTOR_FAMILIES)}"
        ) from None
    return factory(**params)


def _yamaguchi(beta: float) -> FormFactor:
    if not beta > 0.0:
        raise ValidationError(f"Yamaguchi range beta must be positive, got {beta!r}")

    def g(p):
        return 1.0 / (np.square(p) + beta * beta)

    g.beta = beta  # type: ignore[attr-defined]
    return g


register_form_factor("yamaguchi", _yamaguchi)


@dataclass
class SeparablePotential:
    rank: int
    form_factors: list[FormFactor]
    strength: np.ndarray
    reduced_mass: float
    channel: str = ""
    quad_points: int = 64
    quad_scale: float | None = None  # default 2 * beta for Yamaguchi factors

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError(f"rank must be >= 1, got {self.rank}")
        if len(self.form_factors) != self.rank:
            raise ValidationError("need one form factor per rank channel")
        self.strength = np.atleast_2d(np.asarray(self.strength, dtype=float))
        if self.strength.shape != (self.rank, self.rank):
            raise ValidationError(f"strength matrix must be {self.rank}x{self.rank}")
        if not np.allclose(self.strength, self.strength.T, rtol=0.0, atol=1e-12):
            raise ValidationError("strength matrix must be symmetric")
        if not self.reduced_mass > 0.0:
            raise ValidationError(f"reduced mass must be positive, got {self.reduced_mass!r}")
        if self.quad_scale is None:
            betas = [getattr(g, "beta", None) for g in self.form_factors]
            self.quad_scale = 2.0 * betas[0] if betas[0] else 600.0

    @property
    def yamaguchi_betas(self) -> list[float] | None:
        """Ranges if every channel is a built-in Yamaguchi factor, else None."""
        betas = [getattr(g, "beta", None) for g in self.form_factors]
        return None if any(b is None for b in betas) else betas


def yamaguchi_potential(beta: float, strength: float, reduced_mass: float, channel: str = "") -> SeparablePotential:
    return SeparablePotential(1, [_yamaguchi(beta)], np.array([[strength]]), reduced_mass, channel)


@dataclass(frozen=True)
class TwoBodyTau:
    energy: float
    tau_matrix: np.ndarray


def form_factor(pot: SeparablePotential, n: int, p) -> float | np.ndarray:
    """g_n(p) for channel index n (0-based)."""
    if not 0 <= n < pot.rank:
        raise ValidationError(f"form-factor index {n} out of range for rank {pot.rank}")
    p = np.asarray(p, dtype=float)
    if np.any(p < 0.0):
        raise ValidationError("momentum must be >= 0")
    out = pot.form_factors[n](p)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def _quad(n: int, scale: float):
    grid = momentum_grid(n, scale)
    return grid.nodes, grid.weights


def j_matrix(pot: SeparablePotential, energy: float, points: int | None = None) -> np.ndarray:
    """J_nm(E) on the potential's mapped Gauss-Legendre grid."""
    nodes, weights = _quad(points or pot.quad_points, float(pot.quad_scale))
    denom = energy - np.square(nodes) / (2.0 * pot.reduced_mass)
    gvals = np.stack([pot.form_factors[n](nodes) for n in range(pot.rank)])
    weighted = weights * np.square(nodes) / denom
    return np.einsum("np,p,mp->nm", gvals, weighted, gvals)


def _dispersion_det(pot: SeparablePotential, energy: float) -> float:
    """det(1 - lambda J): zero exactly at the bound-state poles of tau."""
    return float(np.linalg.det(np.eye(pot.rank) - pot.strength @ j_matrix(pot, energy)))


def tau(pot: SeparablePotential, energy: float, det_tol: float = 1e-10) -> TwoBodyTau:
    """Propagator matrix tau(E) = (1 - lambda J)^-1 lambda.

    This form stays finite for lambda = 0 (free limit, t = 0) and equals
    [lambda^-1 - J]^-1 whenever lambda is invertible.
    """
    if not energy < 0.0:
        raise ValidationError(f"tau is defined in bound-state mode (E < 0), got E = {energy!r}")
    jmat = j_matrix(pot, energy)
    a = np.eye(pot.rank) - pot.strength @ jmat
    det = float(np.linalg.det(a))
    if abs(det) < det_tol:
        raise PoleProximityError(energy, det)
    return TwoBodyTau(energy, np.linalg.solve(a, pot.strength))


def tau_rank1_values(pot: SeparablePotential, energies: np.ndarray, det_tol: float = 1e-10) -> np.ndarray:
    """Vectorised rank-1 propagator lambda / (1 - lambda J(E)) over energies."""
    if pot.rank != 1:
        raise ValidationError("tau_rank1_values needs a rank-1 potential")
    energies = np.asarray(energies, dtype=float)
    if np.any(energies >= 0.0):
        raise ValidationError("tau is defined in bound-state mode (E < 0)")
    lam = float(pot.strength[0, 0])
    if lam == 0.0:
        return np.zeros_like(energies)
    nodes, weights = _quad(pot.quad_points, float(pot.quad_scale))
    radial = weights * np.square(nodes) * np.square(pot.form_factors[0](nodes))
    j_vals = (1.0 / (energies[..., None] - np.square(nodes) / (2.0 * pot.reduced_mass))) @ radial
    a = 1.0 - lam * j_vals
    small = np.abs(a) < det_tol
    if np.any(small):
        idx = int(np.argmax(small))
        raise PoleProximityError(float(energies.ravel()[idx]), float(a.ravel()[idx]))
    return lam / a


def t_half_off_shell(pot: SeparablePotential, p: float, pprime: float, energy: float) -> float:
    """t(p, p'; E) = g(p) . tau(E) . g(p')."""
    tm = tau(pot, energy).tau_matrix
    gp = np.array([pot.form_factors[n](np.asarray(p, dtype=float)) for n in range(pot.rank)])
    gq = np.array([pot.form_factors[n](np.asarray(pprime, dtype=float)) for n in range(pot.rank)])
    return float(gp @ tm @ gq)


@dataclass(frozen=True)
class TwoBodyBoundState:
    energy: float
    coefficients: np.ndarray
    potential: SeparablePotential = field(repr=False)

    def vertex(self, p):
        """Vertex function Gamma(p) = sum_n c_n g_n(p)."""
        p = np.asarray(p, dtype=float)
        out = sum(c * g(p) for c, g in zip(self.coefficients, self.potential.form_factors))
        return float(out) if np.ndim(out) == 0 else out

    def wave_function(self, p):
        """Momentum-space wave function Gamma(p) / (|E_B| + p^2/(2 mu)),
        normalised to int dp p^2 phi(p)^2 = 1."""
        p = np.asarray(p, dtype=float)
        out = self.vertex(p) / (abs(self.energy) + np.square(p) / (2.0 * self.potential.reduced_mass))
        return float(out) if np.ndim(out) == 0 else out


def find_two_body_bound_state(
    pot: SeparablePotential,
    window: tuple[float, float],
    det_tol: float = 1e-10,
) -> TwoBodyBoundState:
    """Locate E_B in the window by a bracketed root of det(1 - lambda J)."""
    e_lo, e_hi = sorted(window)
    if e_hi >= 0.0:
        raise ValidationError(f"bound-state window must lie below zero, got {window!r}")
    d_lo, d_hi = _dispersion_det(pot, e_lo), _dispersion_det(pot, e_hi)
    if d_lo * d_hi > 0.0:
        raise NoBoundStateError(
            f"det(1 - lambda J) does not change sign on [{e_lo:g}, {e_hi:g}] MeV "
            f"({d_lo:.3e} -> {d_hi:.3e}); no bound state"
        )
    e_b = brentq(lambda e: _dispersion_det(pot, e), e_lo, e_hi, xtol=1e-14, rtol=8.9e-16)
    det = _dispersion_det(pot, e_b)
    if abs(det) > det_tol:
        raise NoBoundStateError(f"root polish left |det| = {abs(det):.3e} > {det_tol:g}")

    a = np.eye(pot.rank) - pot.strength @ j_matrix(pot, e_b)
    _, _, vt = np.linalg.svd(a)
    coeffs = vt[-1]

    # normalise the wave function Gamma(p)/(|E|+p^2/2mu) to unit radial norm
    nodes, weights = _quad(pot.quad_points, float(pot.quad_scale))
    gvals = np.stack([pot.form_factors[n](nodes) for n in range(pot.rank)])
    wave = (coeffs @ gvals) / (abs(e_b) + np.square(nodes) / (2.0 * pot.reduced_mass))
    norm = math.sqrt(float(np.dot(weights, np.square(nodes) * np.square(wave))))
    coeffs = coeffs / norm
    if np.sum(coeffs @ gvals) < 0.0:
        coeffs = -coeffs
    return TwoBodyBoundState(e_b, coeffs, pot)


def two_body_poles(pot: SeparablePotential, e_min: float = -500.0, e_max: float = -1e-6) -> list[float]:
    """All tau poles (pair bound states) in [e_min, e_max], by sign scanning."""
    energies = -np.geomspace(-e_max, -e_min, 200)[::-1]  # e_min .. e_max, increasing
    dets = [_dispersion_det(pot, e) for e in energies]
    poles = []
    for e1, e2, d1, d2 in zip(energies, energies[1:], dets, dets[1:]):
        if d1 == 0.0:
            poles.append(float(e1))
        elif d1 * d2 < 0.0:
            poles.append(float(brentq(lambda e: _dispersion_det(pot, e), e1, e2, xtol=1e-12)))
    return poles


# -- closed forms for the built-in rank-1 Yamaguchi family ------------------


def yamaguchi_j_closed_form(beta: float, reduced_mass: float, energy: float) -> float:
    """Analytic J(E) for g(p) = 1/(p^2 + beta^2), E < 0."""
    if not energy < 0.0:
        raise ValidationError("closed form valid for E < 0")
    kappa = math.sqrt(-2.0 * reduced_mass * energy)
    return -math.pi * reduced_mass / (2.0 * beta * (beta + kappa) ** 2)


def yamaguchi_strength_for_binding(beta: float, reduced_mass: float, binding_energy: float) -> float:
    """Coupling lambda that puts the rank-1 Yamaguchi pole at E = -|E_B|."""
    e_b = -abs(binding_energy)
    return 1.0 / yamaguchi_j_closed_form(beta, reduced_mass, e_b)
