"""Cartographer for the logarithmic-singularity regions of the free
three-body Green functions.

Above the breakup threshold (E > 0) the angular integral of a free Green
function develops a logarithmic singularity wherever the critical cosine

    y0(q, q'') = (m_c / (q q'')) (E - q^2/(2 mu_bc) - q''^2/(2 mu_ac))

lies in [-1, 1].  Six Green-function variants occur in the coupled system,
one per (row, term); each is the base variant with the three masses
relabelled.  The region boundary in the (q, q'') plane consists of three
curves: f1 (the y0 = +1 crossing, defined for q <= q_vee), and f2/f3 (the
lower/upper y0 = -1 crossings, closing the band at q_wedge).

Boundaries are *defined* by |y0| = 1 and located by closed-form evaluation
plus a Newton polish; the closed forms double as a cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ValidationError
from .masses import MassSet

#: variant -> particle relabelling (slot n of the base formula reads
#: particle VARIANT_ORDER[v][n]); variant 1 is the identity
VARIANT_ORDER = {
    1: (1, 2, 3),
    2: (1, 3, 2),
    3: (2, 1, 3),
    4: (2, 3, 1),
    5: (3, 1, 2),
    6: (3, 2, 1),
}


@dataclass(frozen=True)
class GreenFunctionSpec:
    variant: int
    masses: MassSet
    energy: float  # three-body energy in MeV; > 0 for scattering maps

    def __post_init__(self):
        if self.variant not in VARIANT_ORDER:
            raise ValidationError(f"Green-function variant must be 1..6, got {self.variant!r}")

    def mass_triple(self) -> tuple[float, float, float]:
        """(m_a, m_b, m_c) entering the base formula for this variant."""
        return tuple(self.masses.mass(i) for i in VARIANT_ORDER[self.variant])


def permuted_spec(base: GreenFunctionSpec, target_variant: int) -> GreenFunctionSpec:
    """Variant-1 spec with relabelled masses equivalent to ``target_variant``."""
    if base.variant != 1:
        raise ValidationError("permuted_spec starts from the base variant 1")
    if target_variant not in (2, 3, 4, 5, 6):
        raise ValidationError(f"target variant must be 2..6, got {target_variant!r}")
    return GreenFunctionSpec(1, base.masses.permuted(VARIANT_ORDER[target_variant]), base.energy)


def _triple_params(spec: GreenFunctionSpec) -> tuple[float, float, float, float]:
    """(mu_bc, mu_ac, m_c, M) for the spec's variant."""
    ma, mb, mc = spec.mass_triple()
    return mb * mc / (mb + mc), ma * mc / (ma + mc), mc, ma + mb + mc


def y0(spec: GreenFunctionSpec, q: float, qpp: float) -> float:
    """Critical cosine; |y0| <= 1 iff (q, q'') lies inside the singular band."""
    if q <= 0.0 or qpp <= 0.0:
        raise ValidationError("y0 needs strictly positive momenta")
    mu_bc, mu_ac, mc, _ = _triple_params(spec)
    return (mc / (q * qpp)) * (spec.energy - q * q / (2.0 * mu_bc) - qpp * qpp / (2.0 * mu_ac))


def _dy0_dqpp(spec: GreenFunctionSpec, q: float, qpp: float) -> float:
    mu_bc, mu_ac, mc, _ = _triple_params(spec)
    c_term = spec.energy - q * q / (2.0 * mu_bc)
    return (mc / q) * (-c_term / (qpp * qpp) - 1.0 / (2.0 * mu_ac))


def q_limits(spec: GreenFunctionSpec) -> tuple[float, float]:
    """(q_vee, q_wedge): spectator-momentum bounds of the singular region.

    q_wedge is the closed form evaluated on the |y0| = 1 boundary branch,
    where its formal y0-dependence drops out.  E <= 0 has no singular
    region: returns (0, 0).
    """
    if spec.energy <= 0.0:
        return 0.0, 0.0
    ma, mb, mc = spec.mass_triple()
    mtot = ma + mb + mc
    q_wedge = math.sqrt(q_wedge_squared_symbolic(spec, 1.0))
    q_vee = math.sqrt(2.0 * mb * mc * spec.energy * (ma + mc) / (ma * mb + mc * mtot))
    return q_vee, q_wedge


def q_wedge_squared_symbolic(spec: GreenFunctionSpec, y0_value: float) -> float:
    """Upper-limit closed form with the y0 dependence kept symbolic."""
    ma, mb, mc = spec.mass_triple()
    mtot = ma + mb + mc
    return 2.0 * mb * spec.energy * (ma + mc) / (mtot - (ma * mb / mc) * (y0_value**2 - 1.0))


def q_limits_by_root_finding(spec: GreenFunctionSpec) -> tuple[float, float]:
    """Locate q_vee and q_wedge directly from y0 = +-1, without Eq.-level
    closed forms; used to cross-validate q_limits."""
    if spec.energy <= 0.0:
        return 0.0, 0.0

    def y0_max(q: float) -> float:
        res = minimize_scalar(
            lambda t: -y0(spec, q, math.exp(t)),
            bounds=(math.log(1e-8), math.log(1e6 + 10.0 * q)),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return -float(res.fun)

    # q_vee: boundary between "y0 reaches +1" (it diverges to +inf as
    # q'' -> 0 while the small-q'' side is positive) and "max y0 < +1"
    def reaches_plus_one(q: float) -> bool:
        return y0(spec, q, 1e-6) > 1.0 or y0_max(q) >= 1.0

    lo, hi = 1e-6, 1.0
    while reaches_plus_one(hi):
        hi *= 2.0
        if hi > 1e9:
            raise ValidationError("q_vee bracket failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if reaches_plus_one(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * hi:
            break
    q_vee = 0.5 * (lo + hi)

    # q_wedge: the band closes where max_{q''} y0 falls below -1
    def g(q: float) -> float:
        return y0_max(q) + 1.0

    lo = q_vee * 1.000001
    hi = 2.0 * q_vee + 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 1e9:
            raise ValidationError("q_wedge bracket failed")
    q_wedge = brentq(g, lo, hi, xtol=1e-12, rtol=8.9e-16)
    return q_vee, float(q_wedge)


@dataclass(frozen=True)
class SingularityRegion:
    q_grid: np.ndarray
    f1: np.ndarray  # NaN outside each curve's domain
    f2: np.ndarray
    f3: np.ndarray
    q_vee: float
    q_wedge: float
    y0_sign: int
    spec: GreenFunctionSpec

    @property
    def empty(self) -> bool:
        return self.q_wedge == 0.0


def _closed_form_roots(spec: GreenFunctionSpec, q: np.ndarray, y0_sign: float):
    """Roots of y0(q, q'') = y0_sign: (-s mu_ac q / m_c) +- sqrt(D)."""
    mu_bc, mu_ac, mc, _ = _triple_params(spec)
    c_term = spec.energy - np.square(q) / (2.0 * mu_bc)
    shift = -y0_sign * mu_ac * q / mc
    disc = np.square(mu_ac * q / mc) + 2.0 * mu_ac * c_term
    root = np.sqrt(np.maximum(disc, 0.0))
    return shift + root, shift - root


def _newton_polish(spec: GreenFunctionSpec, q: float, qpp: float, target: float, tol: float = 1e-9) -> float:
    x = qpp
    for _ in range(25):
        r = y0(spec, q, x) - target
        if abs(r) < tol:
            return x
        d = _dy0_dqpp(spec, q, x)
        if d == 0.0:
            break
        step = r / d
        if not math.isfinite(step) or abs(step) > 0.5 * x:
            step = math.copysign(0.25 * x, step)
        x = max(x - step, 1e-12)
    return x


def boundary_curves(spec: GreenFunctionSpec, n_samples: int = 256, branch: int = 1) -> SingularityRegion:
    """Sample the three boundary curves of the singular band.

    Sampling is uniform in q^2 (denser near the tip at q_wedge where the
    f2/f3 curves turn).  Every emitted point is Newton-polished onto
    |y0| = 1.  ``branch`` follows the y0-sign bookkeeping: the -1 branch
    swaps the f1/f3 labels and their domains.
    """
    if n_samples < 16:
        raise ValidationError(f"need at least 16 samples, got {n_samples}")
    if branch not in (1, -1):
        raise ValidationError(f"branch must be +1 or -1, got {branch!r}")
    q_vee, q_wedge = q_limits(spec)
    if q_wedge == 0.0:
        empty = np.array([])
        return SingularityRegion(empty, empty, empty, empty, 0.0, 0.0, branch, spec)

    q_min = 1e-3 * q_wedge
    q_grid = np.sqrt(np.linspace(q_min**2, (q_wedge * (1.0 - 1e-9)) ** 2, n_samples))
    # straddle the f1/f2 junction; at q_vee itself the band touches q'' = 0
    # where y0 degenerates, so sample close to the corner, not on it
    junction = np.array([q_vee * (1.0 - 1e-7), q_vee * (1.0 + 1e-7)])
    q_grid = np.sort(np.unique(np.append(q_grid, junction[junction < q_grid[-1]])))
    q_grid = q_grid[np.abs(q_grid - q_vee) > 1e-8 * q_vee]

    plus_hi, _ = _closed_form_roots(spec, q_grid, +1.0)
    minus_hi, minus_lo = _closed_form_roots(spec, q_grid, -1.0)

    f1 = np.full_like(q_grid, np.nan)
    f2 = np.full_like(q_grid, np.nan)
    f3 = np.full_like(q_grid, np.nan)

    for i, q in enumerate(q_grid):
        if q <= q_vee:
            guess = max(plus_hi[i], 1e-9)
            f1[i] = _newton_polish(spec, q, guess, +1.0)
        else:
            guess = max(minus_lo[i], 1e-9)
            f2[i] = _newton_polish(spec, q, guess, -1.0)
        f3[i] = _newton_polish(spec, q, max(minus_hi[i], 1e-9), -1.0)

    if branch == -1:
        f1, f3 = f3, f1
    return SingularityRegion(q_grid, f1, f2, f3, q_vee, q_wedge, branch, spec)


def band_interval(spec: GreenFunctionSpec, q: float) -> tuple[float, float] | None:
    """The q'' interval with |y0| <= 1 at spectator momentum q, or None."""
    q_vee, q_wedge = q_limits(spec)
    if q_wedge == 0.0 or q <= 0.0 or q >= q_wedge:
        return None
    if q <= q_vee:
        lo = _closed_form_roots(spec, np.array([q]), +1.0)[0][0]
    else:
        lo = _closed_form_roots(spec, np.array([q]), -1.0)[1][0]
    hi = _closed_form_roots(spec, np.array([q]), -1.0)[0][0]
    lo = _newton_polish(spec, q, max(lo, 1e-9), +1.0 if q <= q_vee else -1.0)
    hi = _newton_polish(spec, q, max(hi, 1e-9), -1.0)
    return float(lo), float(hi)


def _band_edges(region: SingularityRegion) -> tuple[np.ndarray, np.ndarray]:
    """(lower, upper) boundary samples, honouring the branch label swap."""
    upper = region.f3 if region.y0_sign == 1 else region.f1
    first = region.f1 if region.y0_sign == 1 else region.f3
    lower = np.where(np.isnan(region.f2), first, region.f2)
    return lower, upper


def band_width(region: SingularityRegion) -> float:
    """Width metric of the region: max over q of the f3 - f2 band."""
    mask = ~np.isnan(region.f2) & ~np.isnan(region.f3)
    if not np.any(mask):
        return 0.0
    widths = region.f3[mask] - region.f2[mask]
    if region.y0_sign == -1:
        widths = region.f1[mask] - region.f2[mask]
    return float(np.max(widths))


def band_area(region: SingularityRegion) -> float:
    """Integrated q'' band measure over q (trapezoid on the sample grid)."""
    lower, upper = _band_edges(region)
    mask = ~np.isnan(lower) & ~np.isnan(upper)
    q = region.q_grid[mask]
    width = upper[mask] - lower[mask]
    if q.size < 2:
        return 0.0
    return float(np.sum(0.5 * (width[1:] + width[:-1]) * np.diff(q)))


def emit_region(region: SingularityRegion, path: str | Path) -> Path:
    """Write the sampled region as CSV with a '#'-prefixed metadata header."""
    path = Path(path)
    m = region.spec.masses
    with path.open("w", newline="") as fh:
        fh.write(f"# masses_MeV = {m.m1:.17g} {m.m2:.17g} {m.m3:.17g}\n")
        fh.write(f"# energy_MeV = {region.spec.energy:.17g}\n")
        fh.write(f"# variant = {region.spec.variant}\n")
        fh.write(f"# q_vee_MeV = {region.q_vee:.17g}\n")
        fh.write(f"# q_wedge_MeV = {region.q_wedge:.17g}\n")
        fh.write(f"# y0_sign = {region.y0_sign}\n")
        writer = csv.writer(fh)
        writer.writerow(["q", "f1", "f2", "f3"])
        for i, q in enumerate(region.q_grid):
            row = [f"{q:.17g}"]
            for arr in (region.f1, region.f2, region.f3):
                row.append("" if math.isnan(arr[i]) else f"{arr[i]:.17g}")
            writer.writerow(row)
    return path


def read_region(path: str | Path) -> SingularityRegion:
    """Parse a CSV produced by emit_region (round-trip support)."""
    path = Path(path)
    meta: dict[str, str] = {}
    rows: list[list[str]] = []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            else:
                rows.append(line.split(","))
    header, data = rows[0], rows[1:]
    if header != ["q", "f1", "f2", "f3"]:
        raise ValidationError(f"unexpected region CSV header: {header}")
    masses = MassSet(*(float(x) for x in meta["masses_MeV"].split()))
    spec = GreenFunctionSpec(int(meta["variant"]), masses, float(meta["energy_MeV"]))
    cols = {name: [] for name in header}
    for row in data:
        for name, cell in zip(header, row):
            cols[name].append(math.nan if cell == "" else float(cell))
    return SingularityRegion(
        np.array(cols["q"]),
        np.array(cols["f1"]),
        np.array(cols["f2"]),
        np.array(cols["f3"]),
        float(meta["q_vee_MeV"]),
        float(meta["q_wedge_MeV"]),
        int(meta["y0_sign"]),
        spec,
    )
