"""Exception hierarchy shared across the solver modules."""

from __future__ import annotations


class Faddeev3dError(Exception):
    """Base class for all package errors."""


class ValidationError(Faddeev3dError):
    """Bad user input: configuration, argument ranges, inconsistent units."""


class NumericalError(Faddeev3dError):
    """A computation could not be completed (no root, divergence, pole)."""


class FormulaExcursionError(NumericalError):
    """A quantity that must be a cosine left [-1, 1] by more than roundoff.

    Raised instead of clamping when the excursion exceeds the tolerance;
    this points at a formula error, not floating-point noise.
    """

    def __init__(self, name: str, value: float, context: dict | None = None):
        self.name = name
        self.value = value
        self.context = dict(context or {})
        super().__init__(
            f"cosine {name} = {value!r} outside [-1, 1] beyond tolerance; "
            f"context: {self.context}"
        )


class KinematicsError(ValidationError):
    """Momenta violate a kinematic constraint (e.g. elastic |q| != |q0|)."""


class NoBoundStateError(NumericalError):
    """Bracketed search found no sign change, so no bound state in window."""


class PoleProximityError(NumericalError):
    """tau(E) requested too close to one of its poles."""

    def __init__(self, energy: float, determinant: float):
        self.energy = energy
        self.determinant = determinant
        super().__init__(
            f"tau propagator nearly singular at E = {energy:.12g} MeV "
            f"(det = {determinant:.3e})"
        )


class PoleCollisionError(NumericalError):
    """A two-body bound-state pole falls on the spectator momentum grid."""


class SingularRegionError(NumericalError):
    """Kernel evaluation crossed a logarithmic-singularity band (|y0| <= 1).

    Use a segmented momentum grid that excludes [q_vee, q_wedge].
    """


class ExtrapolationError(NumericalError):
    """Interpolation was requested outside the stored grid hull."""


class DivergenceError(NumericalError):
    """Neumann iteration diverged and acceleration did not rescue it."""

    def __init__(self, message: str, spectral_radius_estimate: float):
        self.spectral_radius_estimate = spectral_radius_estimate
        super().__init__(
            f"{message} (spectral radius estimate {spectral_radius_estimate:.4g})"
        )
