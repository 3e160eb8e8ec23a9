"""Benchmark the compiled kernel core against the numpy fallback.

Times full kernel assemblies (six blocks) at one energy and reports the
per-backend wall time, the speedup and the largest relative deviation
between the two results.

    python3 benchmarks/bench_kernels.py --n-q 48 --n-x 48 --repeats 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from faddeev3d import kernels
from faddeev3d.faddeev import assemble_kernel
from faddeev3d.grids import azimuthal_grid, cosine_grid, momentum_grid
from faddeev3d.masses import SPECTATOR_PAIR, MassSet
from faddeev3d.twobody import yamaguchi_potential, yamaguchi_strength_for_binding


def build_problem(n_q: int, n_x: int):
    masses = MassSet(938.272, 939.565, 938.272)
    pots = {}
    for i in (1, 2, 3):
        j, k = SPECTATOR_PAIR[i]
        mu = masses.mu(j, k)
        lam = yamaguchi_strength_for_binding(230.0, mu, 2.2246)
        pots[i] = yamaguchi_potential(230.0, lam, mu)
    return dict(
        q_grid=momentum_grid(n_q, 300.0),
        x_grid=cosine_grid(n_x),
        phi_grid=azimuthal_grid(16),
        masses=masses,
        potentials=pots,
    )


def time_backend(backend: str, problem: dict, energy: float, repeats: int):
    best = float("inf")
    kernel = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernel = assemble_kernel(energy, **problem, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, kernel


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-q", type=int, default=48)
    parser.add_argument("--n-x", type=int, default=48)
    parser.add_argument("--energy", type=float, default=-12.0)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    problem = build_problem(args.n_q, args.n_x)
    t_py, k_py = time_backend("python", problem, args.energy, args.repeats)
    print(f"python backend: {t_py * 1e3:9.2f} ms / assembly  (N={args.n_q}, Nx={args.n_x})")
    if not kernels.HAVE_COMPILED:
        print("compiled core not available; nothing to compare")
        return 0
    t_cy, k_cy = time_backend("cython", problem, args.energy, args.repeats)
    print(f"cython backend: {t_cy * 1e3:9.2f} ms / assembly")
    print(f"speedup: {t_py / t_cy:5.2f}x")
    worst = 0.0
    for key in k_py.blocks:
        scale = np.max(np.abs(k_py.blocks[key])) or 1.0
        worst = max(worst, float(np.max(np.abs(k_py.blocks[key] - k_cy.blocks[key]))) / scale)
    print(f"max relative deviation between backends: {worst:.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
