"""Quadrature grids for momentum and angular integrals.

Momentum integrals over [0, inf) use the rational map p = c (1+u)/(1-u) of
Gauss-Legendre nodes; angular integrals use Gauss-Legendre in the polar
cosine and an equal-weight periodic (trapezoidal) rule in the azimuth.
Segmented grids concatenate Gauss-Legendre panels so that integration can
jump over a singular band [q_vee, q_wedge].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    mapping: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or weights.shape != nodes.shape:
            raise ValidationError("nodes and weights must be 1-D arrays of equal length")
        if nodes.size == 0:
            raise ValidationError("empty quadrature grid")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValidationError("nodes must be strictly increasing")
        if np.any(weights <= 0.0):
            raise ValidationError("weights must be positive")

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


def gauss_legendre(n: int, a: float, b: float) -> QuadratureGrid:
    """Gauss-Legendre rule with n nodes on [a, b]."""
    if n < 1:
        raise ValidationError(f"need n >= 1 nodes, got {n}")
    if not a < b:
        raise ValidationError(f"need a < b, got a={a!r}, b={b!r}")
    u, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return QuadratureGrid(a + half * (u + 1.0), half * w, f"linear[{a:g},{b:g}]")


def momentum_grid(n: int, scale: float) -> QuadratureGrid:
    """Map [-1, 1] onto [0, inf) via p = scale (1+u)/(1-u)."""
    if n < 4:
        raise ValidationError(f"momentum grid needs n >= 4, got {n}")
    if not scale > 0.0:
        raise ValidationError(f"scale must be positive, got {scale!r}")
    u, w = np.polynomial.legendre.leggauss(n)
    nodes = scale * (1.0 + u) / (1.0 - u)
    weights = w * 2.0 * scale / (1.0 - u) ** 2
    return QuadratureGrid(nodes, weights, f"rational-infinite[c={scale:g}]")


def segmented_grid(breakpoints: list[float], counts: list[int]) -> QuadratureGrid:
    """Concatenated Gauss-Legendre panels between consecutive breakpoints.

    A segment count of 0 skips that segment entirely, which is how an
    integration jumps over a singular band [q_vee, q_wedge]; the total
    weight then equals the covered length only.
    """
    pts = [float(b) for b in breakpoints]
    if len(pts) < 2:
        raise ValidationError("need at least two breakpoints")
    if any(b2 <= b1 for b1, b2 in zip(pts, pts[1:])):
        raise ValidationError(f"breakpoints must be strictly increasing: {pts}")
    if len(counts) != len(pts) - 1:
        raise ValidationError("need one node count per segment")
    if any(c != 0 and c < 2 for c in counts):
        raise ValidationError("each kept segment needs at least 2 nodes (0 skips it)")
    if all(c == 0 for c in counts):
        raise ValidationError("at least one segment must be kept")
    nodes, weights = [], []
    for a, b, c in zip(pts, pts[1:], counts):
        if c == 0:
            continue
        panel = gauss_legendre(c, a, b)
        nodes.append(panel.nodes)
        weights.append(panel.weights)
    spec = ",".join(f"{p:g}" for p in pts)
    return QuadratureGrid(np.concatenate(nodes), np.concatenate(weights), f"compound[{spec}]")


def cosine_grid(n: int) -> QuadratureGrid:
    """Polar-cosine grid on [-1, 1]."""
    return gauss_legendre(n, -1.0, 1.0)


def azimuthal_grid(n: int) -> QuadratureGrid:
    """Equal-weight periodic rule on [0, 2pi); spectrally accurate in phi."""
    if n < 1:
        raise ValidationError(f"need n >= 1 azimuthal nodes, got {n}")
    nodes = 2.0 * np.pi * np.arange(n) / n
    weights = np.full(n, 2.0 * np.pi / n)
    return QuadratureGrid(nodes, weights, "periodic-trapezoid[0,2pi)")
