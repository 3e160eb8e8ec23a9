"""Pure-numpy implementation of the hot kernel-assembly loop.

For one (row, term) of the coupled system this evaluates, for every pair of
spectator grid nodes (q_m, q_n),

    bare[m, n] = sum_k w_k  g_i(f(q_m, q_n, x_k))  R0(q_m, q_n, x_k)
                            g_j(g(q_m, q_n, x_k))

with f^2 = (cf q)^2 + q''^2 + 2 cf q q'' x,  g^2 = q^2 + (cg q'')^2
+ 2 cg q q'' x and R0 = 1/(E - A q^2 - B q''^2 - C q q'' x).  The compiled
backend in _corekernels.pyx computes exactly the same quantity.
"""

from __future__ import annotations

import numpy as np


def block_bare_yamaguchi(
    q_row: np.ndarray,
    q_col: np.ndarray,
    x_nodes: np.ndarray,
    x_weights: np.ndarray,
    cf: float,
    cg: float,
    beta_i: float,
    beta_j: float,
    coef_a: float,
    coef_b: float,
    coef_c: float,
    energy: float,
) -> np.ndarray:
    qm = q_row[:, None, None]
    qn = q_col[None, :, None]
    x = x_nodes[None, None, :]
    f_sq = (cf * qm) ** 2 + qn**2 + 2.0 * cf * qm * qn * x
    g_sq = qm**2 + (cg * qn) ** 2 + 2.0 * cg * qm * qn * x
    green = 1.0 / (energy - coef_a * qm**2 - coef_b * qn**2 - coef_c * qm * qn * x)
    integrand = green / ((f_sq + beta_i * beta_i) * (g_sq + beta_j * beta_j))
    return integrand @ x_weights


def block_bare_generic(
    q_row: np.ndarray,
    q_col: np.ndarray,
    x_nodes: np.ndarray,
    x_weights: np.ndarray,
    cf: float,
    cg: float,
    ff_i,
    ff_j,
    coef_a: float,
    coef_b: float,
    coef_c: float,
    energy: float,
) -> np.ndarray:
    qm = q_row[:, None, None]
    qn = q_col[None, :, None]
    x = x_nodes[None, None, :]
    f = np.sqrt(np.maximum((cf * qm) ** 2 + qn**2 + 2.0 * cf * qm * qn * x, 0.0))
    g = np.sqrt(np.maximum(qm**2 + (cg * qn) ** 2 + 2.0 * cg * qm * qn * x, 0.0))
    green = 1.0 / (energy - coef_a * qm**2 - coef_b * qn**2 - coef_c * qm * qn * x)
    return (ff_i(f) * green * ff_j(g)) @ x_weights
