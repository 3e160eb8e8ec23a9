"""Tensor-product grid interpolation for the stored T-matrix tables.

Momentum axes use local 4-point Lagrange (cubic) stencils, cosine axes are
multilinear; both refuse to extrapolate outside the grid hull.
"""

from __future__ import annotations

import numpy as np

from .errors import ExtrapolationError

_HULL_TOL = 1e-12  # relative slack at the hull edges, roundoff only


def _axis_weights(nodes: np.ndarray, x: np.ndarray, order: int, name: str):
    """Per-target stencil indices and Lagrange weights along one axis."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.asarray(x, dtype=float)
    n = nodes.size
    span = max(abs(nodes[0]), abs(nodes[-1]), 1.0)
    lo_edge, hi_edge = nodes[0] - _HULL_TOL * span, nodes[-1] + _HULL_TOL * span
    if np.any(x < lo_edge) or np.any(x > hi_edge):
        bad = x[(x < lo_edge) | (x > hi_edge)][0]
        raise ExtrapolationError(
            f"axis {name}: target {bad!r} outside grid hull [{nodes[0]!r}, {nodes[-1]!r}]"
        )
    x = np.clip(x, nodes[0], nodes[-1])
    if n == 1:
        return np.zeros((x.size, 1), dtype=np.intp), np.ones((x.size, 1))

    npts = min(order + 1, n)
    cell = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, n - 2)
    start = np.clip(cell - (npts - 1) // 2, 0, n - npts)
    idx = start[:, None] + np.arange(npts)[None, :]
    xs = nodes[idx]
    w = np.ones((x.size, npts))
    for a in range(npts):
        for b in range(npts):
            if a != b:
                w[:, a] *= (x - xs[:, b]) / (xs[:, a] - xs[:, b])
    return idx.astype(np.intp), w


def cubic_interp_1d(nodes: np.ndarray, values: np.ndarray, targets) -> np.ndarray:
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    idx, w = _axis_weights(nodes, targets, 3, "q")
    return np.sum(np.asarray(values, dtype=float)[idx] * w, axis=1)


def interp5d(
    axes: tuple[np.ndarray, ...],
    values: np.ndarray,
    points: np.ndarray,
    orders: tuple[int, ...] = (3, 1, 1, 1, 3),
    axis_names: tuple[str, ...] = ("p", "x_p", "x_dihedral", "x_q", "q"),
) -> np.ndarray:
    """Interpolate a 5-D table at ``points`` of shape (M, 5).

    Cubic along the momentum axes (0 and 4), multilinear along the cosines.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != len(axes):
        raise ValueError(f"points must have shape (M, {len(axes)})")
    stencils = [
        _axis_weights(ax, points[:, d], orders[d], axis_names[d])
        for d, ax in enumerate(axes)
    ]
    out = np.zeros(points.shape[0])
    shape = [s[0].shape[1] for s in stencils]
    for flat in range(int(np.prod(shape))):
        rem, combo = flat, []
        for width in reversed(shape):
            combo.append(rem % width)
            rem //= width
        combo.reverse()
        weight = np.ones(points.shape[0])
        gather = []
        for d, c in enumerate(combo):
            idx, w = stencils[d]
            weight = weight * w[:, c]
            gather.append(idx[:, c])
        out += weight * values[tuple(gather)]
    return out
