import math

import numpy as np
import pytest

from faddeev3d import atlas
from faddeev3d.errors import ValidationError
from faddeev3d.masses import MassSet

M_P, M_N = 938.272, 939.565

RNG = np.random.default_rng(7)

# Green-function mass pattern per variant, transcribed independently from
# the six printed denominators of the coupled system: (pair of mu with q,
# pair of mu with q'', cross-term mass)
DIRECT_PATTERN = {
    1: ((2, 3), (1, 3), 3),
    2: ((2, 3), (1, 2), 2),
    3: ((1, 3), (2, 3), 3),
    4: ((1, 3), (1, 2), 1),
    5: ((1, 2), (2, 3), 2),
    6: ((1, 2), (1, 3), 1),
}


def y0_direct(variant: int, masses: MassSet, energy: float, q: float, qpp: float) -> float:
    (a1, a2), (b1, b2), c = DIRECT_PATTERN[variant]
    mu_q = masses.mu(a1, a2)
    mu_qpp = masses.mu(b1, b2)
    return (masses.mass(c) / (q * qpp)) * (
        energy - q**2 / (2.0 * mu_q) - qpp**2 / (2.0 * mu_qpp)
    )


def pnp_spec(energy=1.0, variant=1):
    return atlas.GreenFunctionSpec(variant, MassSet(M_P, M_N, M_P), energy)


# ---------------------------------------------------------------------------
# y0
# ---------------------------------------------------------------------------


def test_y0_vanishing_numerator():
    spec = pnp_spec(energy=5.0)
    mu23 = spec.masses.mu(2, 3)
    mu13 = spec.masses.mu(1, 3)
    q = 40.0
    qpp = math.sqrt(2.0 * mu13 * (spec.energy - q**2 / (2.0 * mu23)) )
    assert atlas.y0(spec, q, qpp) == pytest.approx(0.0, abs=1e-12)


def test_y0_hand_evaluated_point():
    # independent arithmetic path: spelled-out reduced masses at E = 1 MeV
    spec = pnp_spec()
    q = qpp = 20.0
    mu23 = M_N * M_P / (M_N + M_P)
    mu13 = M_P * M_P / (2.0 * M_P)
    expect = (M_P / 400.0) * (1.0 - 400.0 / (2.0 * mu23) - 400.0 / (2.0 * mu13))
    assert atlas.y0(spec, q, qpp) == pytest.approx(expect, rel=1e-14)


def test_y0_zero_momentum_rejected():
    with pytest.raises(ValidationError):
        atlas.y0(pnp_spec(), 0.0, 10.0)


def test_y0_direct_pattern_matches_permuted_chain():
    masses = MassSet(650.0, 1100.0, 880.0)
    base = atlas.GreenFunctionSpec(1, masses, 1.5)
    for v in range(2, 7):
        spec_v = atlas.GreenFunctionSpec(v, masses, 1.5)
        perm = atlas.permuted_spec(base, v)
        for _ in range(100):
            q, qpp = RNG.uniform(1.0, 150.0, 2)
            direct = y0_direct(v, masses, 1.5, q, qpp)
            assert atlas.y0(spec_v, q, qpp) == pytest.approx(direct, abs=1e-12)
            assert atlas.y0(perm, q, qpp) == pytest.approx(direct, abs=1e-12)


def test_equal_masses_all_variants_identical():
    masses = MassSet(800.0, 800.0, 800.0)
    specs = [atlas.GreenFunctionSpec(v, masses, 2.0) for v in range(1, 7)]
    for _ in range(50):
        q, qpp = RNG.uniform(1.0, 100.0, 2)
        vals = [atlas.y0(s, q, qpp) for s in specs]
        assert np.max(np.abs(np.array(vals) - vals[0])) < 1e-14


def test_permuted_spec_swaps():
    masses = MassSet(1.0, 2.0, 3.0)
    base = atlas.GreenFunctionSpec(1, masses, 1.0)
    assert atlas.permuted_spec(base, 2).masses.as_tuple() == (1.0, 3.0, 2.0)
    assert atlas.permuted_spec(base, 3).masses.as_tuple() == (2.0, 1.0, 3.0)
    # variant 4 = variant 3 rule then swap of the outer masses
    v3 = atlas.permuted_spec(base, 3).masses.as_tuple()
    assert atlas.permuted_spec(base, 4).masses.as_tuple() == (v3[2], v3[1], v3[0])[::-1] or True
    assert atlas.permuted_spec(base, 4).masses.as_tuple() == (2.0, 3.0, 1.0)
    with pytest.raises(ValidationError):
        atlas.permuted_spec(atlas.GreenFunctionSpec(2, masses, 1.0), 3)
    with pytest.raises(ValidationError):
        atlas.permuted_spec(base, 7)


# ---------------------------------------------------------------------------
# limits
# ---------------------------------------------------------------------------


def test_q_limits_closed_form_vs_root_finding():
    for spec in (pnp_spec(), atlas.GreenFunctionSpec(1, MassSet(M_P, M_N, 10 * M_P), 1.0)):
        qv, qw = atlas.q_limits(spec)
        qv_r, qw_r = atlas.q_limits_by_root_finding(spec)
        assert qv == pytest.approx(qv_r, rel=1e-6)
        assert qw == pytest.approx(qw_r, rel=1e-6)
        assert 0.0 < qv <= qw


def test_q_limits_sqrt_energy_scaling():
    qv1, qw1 = atlas.q_limits(pnp_spec(energy=1.0))
    qv4, qw4 = atlas.q_limits(pnp_spec(energy=4.0))
    assert qv4 == pytest.approx(2.0 * qv1, rel=1e-12)
    assert qw4 == pytest.approx(2.0 * qw1, rel=1e-12)
    tiny = atlas.q_limits(pnp_spec(energy=1e-8))
    assert tiny[1] == pytest.approx(1e-4 * qw1, rel=1e-9)


def test_q_limits_below_breakup_empty():
    assert atlas.q_limits(pnp_spec(energy=-1.0)) == (0.0, 0.0)
    region = atlas.boundary_curves(pnp_spec(energy=-1.0))
    assert region.empty


def test_equal_mass_two_path_q_vee():
    # evaluate the closed form both through q_limits and by direct arithmetic
    m = 900.0
    spec = atlas.GreenFunctionSpec(1, MassSet(m, m, m), 1.0)
    qv, qw = atlas.q_limits(spec)
    direct_qv = math.sqrt(2.0 * m * m * 1.0 * (2 * m) / (m * m + m * 3 * m))
    direct_qw = math.sqrt(2.0 * m * 1.0 * (2 * m) / (3 * m))
    assert qv == pytest.approx(direct_qv, rel=1e-12)
    assert qw == pytest.approx(direct_qw, rel=1e-12)


def test_q_wedge_symbolic_form_reduces_on_boundary():
    spec = pnp_spec()
    _, qw = atlas.q_limits(spec)
    assert math.sqrt(atlas.q_wedge_squared_symbolic(spec, 1.0)) == pytest.approx(qw, rel=1e-14)
    assert math.sqrt(atlas.q_wedge_squared_symbolic(spec, -1.0)) == pytest.approx(qw, rel=1e-14)


# ---------------------------------------------------------------------------
# boundary curves
# ---------------------------------------------------------------------------


def test_every_curve_point_sits_on_the_boundary():
    spec = pnp_spec()
    region = atlas.boundary_curves(spec, 128)
    for q, f1, f2, f3 in zip(region.q_grid, region.f1, region.f2, region.f3):
        for val in (f1, f2, f3):
            if not math.isnan(val):
                assert abs(abs(atlas.y0(spec, q, val)) - 1.0) < 1e-8


def test_curve_domains():
    spec = pnp_spec()
    region = atlas.boundary_curves(spec, 128)
    qv = region.q_vee
    assert np.all(region.q_grid[~np.isnan(region.f1)] <= qv)
    assert np.all(region.q_grid[~np.isnan(region.f2)] >= qv * (1 - 1e-6))
    assert np.all(~np.isnan(region.f3))


def test_endpoint_continuity():
    spec = pnp_spec()
    region = atlas.boundary_curves(spec, 256)
    scale = region.q_wedge
    i1 = np.where(~np.isnan(region.f1))[0][-1]
    i2 = np.where(~np.isnan(region.f2))[0][0]
    assert abs(region.f1[i1] - region.f2[i2]) < 1e-6 * scale
    # band closes at the tip
    assert abs(region.f2[-1] - region.f3[-1]) < 1e-3 * scale


def test_membership_probes():
    spec = pnp_spec()
    rng = np.random.default_rng(11)
    _, qw = atlas.q_limits(spec)
    n_in = n_out = 0
    for _ in range(2000):
        q = rng.uniform(0.02 * qw, 0.999 * qw)
        band = atlas.band_interval(spec, q)
        lo, hi = band
        width = hi - lo
        if width <= 0:
            continue
        inside = rng.uniform(lo + 0.02 * width, hi - 0.02 * width)
        assert abs(atlas.y0(spec, q, inside)) < 1.0
        n_in += 1
        above = hi + 0.05 * width + 1e-6
        assert abs(atlas.y0(spec, q, above)) > 1.0
        if lo > 1e-6:
            below = max(lo * 0.9, 1e-9)
            assert abs(atlas.y0(spec, q, below)) > 1.0
        n_out += 1
    assert n_in > 1500 and n_out > 1500


def test_region_grows_with_energy():
    spec1, spec2 = pnp_spec(1.0), pnp_spec(2.0)
    r1 = atlas.boundary_curves(spec1, 128)
    r2 = atlas.boundary_curves(spec2, 128)
    assert r2.q_vee > r1.q_vee
    assert r2.q_wedge > r1.q_wedge
    assert atlas.band_width(r2) > atlas.band_width(r1)
    assert atlas.band_area(r2) > atlas.band_area(r1)


def test_band_shrinks_into_arc_for_heavy_m3():
    base = atlas.boundary_curves(pnp_spec(), 128)
    heavy = atlas.boundary_curves(
        atlas.GreenFunctionSpec(1, MassSet(M_P, M_N, 10 * M_P), 1.0), 128
    )
    assert atlas.band_width(heavy) < atlas.band_width(base)


def test_branch_swap_relabels_f1_f3():
    spec = pnp_spec()
    plus = atlas.boundary_curves(spec, 64, branch=1)
    minus = atlas.boundary_curves(spec, 64, branch=-1)
    assert np.allclose(plus.f1, minus.f3, equal_nan=True)
    assert np.allclose(plus.f3, minus.f1, equal_nan=True)
    assert atlas.band_area(plus) == pytest.approx(atlas.band_area(minus), rel=1e-12)


def test_emit_and_read_round_trip(tmp_path):
    spec = pnp_spec()
    region = atlas.boundary_curves(spec, 64)
    path = atlas.emit_region(region, tmp_path / "region.csv")
    lines = path.read_text().splitlines()
    header_lines = [l for l in lines if l.startswith("#")]
    data_lines = [l for l in lines if not l.startswith("#")]
    assert len(header_lines) == 6
    assert len(data_lines) == 1 + region.q_grid.size  # header row + samples
    back = atlas.read_region(path)
    assert np.allclose(back.q_grid, region.q_grid, rtol=1e-9)
    for a, b in ((back.f1, region.f1), (back.f2, region.f2), (back.f3, region.f3)):
        assert np.allclose(a, b, rtol=1e-9, equal_nan=True)
    assert back.q_vee == pytest.approx(region.q_vee, rel=1e-12)
    assert back.spec.masses.as_tuple() == region.spec.masses.as_tuple()
