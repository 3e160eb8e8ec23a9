"""Backend selection for the hot kernel-assembly loop.

The compiled Cython core is preferred when it imported cleanly and every
form factor involved is a built-in Yamaguchi; otherwise the numpy fallback
runs the same reduction.  Set FADDEEV3D_BACKEND=python|cython to force a
choice (forcing cython raises if the extension is unavailable).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .errors import ValidationError

try:
    from . import _corekernels

    HAVE_COMPILED = True
except ImportError:
    _corekernels = None
    HAVE_COMPILED = False


def _select_backend() -> str:
    choice = os.environ.get("FADDEEV3D_BACKEND", "auto").lower()
    if choice == "python":
        return "python"
    if choice == "cython":
        if not HAVE_COMPILED:
            raise ValidationError("FADDEEV3D_BACKEND=cython but the compiled core is unavailable")
        return "cython"
    if choice in ("auto", ""):
        return "cython" if HAVE_COMPILED else "python"
    raise ValidationError(f"unknown FADDEEV3D_BACKEND {choice!r}")


BACKEND = _select_backend()


def block_bare(
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
    backend: str | None = None,
) -> np.ndarray:
    """Angular reduction of one kernel block; see _kernels_py for the formula.

    ``ff_i`` / ``ff_j`` are form-factor callables; callables carrying a
    ``beta`` attribute (built-in Yamaguchi) are eligible for the compiled
    fast path.
    """
    use = backend or BACKEND
    beta_i = getattr(ff_i, "beta", None)
    beta_j = getattr(ff_j, "beta", None)
    args = (
        np.ascontiguousarray(q_row, dtype=float),
        np.ascontiguousarray(q_col, dtype=float),
        np.ascontiguousarray(x_nodes, dtype=float),
        np.ascontiguousarray(x_weights, dtype=float),
    )
    if use == "cython" and beta_i is not None and beta_j is not None:
        return _corekernels.block_bare_yamaguchi(
            *args, cf, cg, beta_i, beta_j, coef_a, coef_b, coef_c, energy
        )
    if beta_i is not None and beta_j is not None:
        return _kernels_py.block_bare_yamaguchi(
            *args, cf, cg, beta_i, beta_j, coef_a, coef_b, coef_c, energy
        )
    return _kernels_py.block_bare_generic(
        *args, cf, cg, ff_i, ff_j, coef_a, coef_b, coef_c, energy
    )
