import math

import numpy as np
import pytest

from faddeev3d.errors import (
    DivergenceError,
    ExtrapolationError,
    KinematicsError,
    SingularRegionError,
)
from faddeev3d.grids import azimuthal_grid, cosine_grid, gauss_legendre
from faddeev3d.kinematics import SphericalMomentum
from faddeev3d.scattering import (
    Axes5D,
    BreakupTMatrix,
    ScatteringModel,
    apply_kernel,
    breakup_amplitude,
    channel_energy,
    driving_term,
    elastic_amplitude,
    elastic_born_terms,
    neumann_pade_solve,
    pv_subtracted_integral,
    table_axes,
    wynn_epsilon,
)
from faddeev3d.twobody import TwoBodyBoundState, find_two_body_bound_state, tau

from conftest import tuned_potentials
from oracles import dihedral_about_z, kernel_vectors, sph_to_cart

RNG = np.random.default_rng(99)

Q_MAX = 600.0


def make_model(masses, energy=-30.0, q0=30.0):
    return ScatteringModel(
        masses=masses,
        potentials=tuned_potentials(masses),
        energy=energy,
        q0=q0,
        axes=table_axes(6, 3, 3, 3, 6, p_max=2.0 * Q_MAX, q_max=Q_MAX),
        qpp_grid=gauss_legendre(12, 0.0, Q_MAX),
        xpp_grid=cosine_grid(12),
        phipp_grid=azimuthal_grid(8),
    )


def make_bound_states(model):
    return {i: find_two_body_bound_state(pot, (-8.0, -0.5)) for i, pot in model.potentials.items()}


def random_table(model) -> BreakupTMatrix:
    return BreakupTMatrix(model.q0, model.axes, RNG.normal(size=model.axes.shape()))


def smooth_table(model) -> BreakupTMatrix:
    """Constant along the x_p and dihedral axes, structured in p, x_q, q."""
    a = model.axes
    gp = 1.0 / (a.p**2 + 200.0**2)
    hq = np.exp(-a.q / 300.0)
    vals = (
        gp[:, None, None, None, None]
        * (1.0 + 0.3 * a.x_q)[None, None, None, :, None]
        * hq[None, None, None, None, :]
        * np.ones((1, a.x_p.size, a.x_dihedral.size, 1, 1))
    )
    return BreakupTMatrix(model.q0, a, vals)


# ---------------------------------------------------------------------------
# driving terms
# ---------------------------------------------------------------------------


def test_driving_zero_bound_state_gives_zero(equal_masses):
    model = make_model(equal_masses)
    bs = make_bound_states(model)
    dead = TwoBodyBoundState(bs[1].energy, np.zeros(1), model.potentials[1])
    d = driving_term(model, 1, {1: dead})
    assert np.all(d.values == 0.0)


def test_driving_linear_in_bound_state(equal_masses):
    model = make_model(equal_masses)
    bs = make_bound_states(model)
    scaled = TwoBodyBoundState(bs[1].energy, 2.0 * bs[1].coefficients, model.potentials[1])
    d1 = driving_term(model, 1, {1: bs[1]})
    d2 = driving_term(model, 1, {1: scaled})
    assert np.allclose(d2.values, 2.0 * d1.values, rtol=1e-13)


def test_driving_matches_vector_oracle(pnp_masses):
    model = make_model(pnp_masses)
    bs = make_bound_states(model)
    pot = model.potentials[2]
    d = driving_term(model, 2, {1: bs[1]})
    a_idx, d_idx, e_idx = 3, 1, 4
    p = model.axes.p[a_idx]
    x_q = model.axes.x_q[d_idx]
    q = model.axes.q[e_idx]
    q_vec = sph_to_cart(q, x_q, 0.0)
    q0_vec = np.array([0.0, 0.0, model.q0])
    nu = pnp_masses.nu(2)
    tau_val = tau(pot, model.energy - q**2 / (2 * nu)).tau_matrix[0, 0]
    expect = 0.0
    for term in (1, 2):
        vt, vg = kernel_vectors(2, term, q_vec, q0_vec, pnp_masses)
        expect += float(pot.form_factors[0](np.linalg.norm(vt))) * bs[1].wave_function(
            float(np.linalg.norm(vg))
        )
    expect *= tau_val * float(pot.form_factors[0](np.asarray(p)))
    got = d.values[a_idx, 0, 0, d_idx, e_idx]
    assert got == pytest.approx(expect, rel=1e-10)
    # broadcast along the unused angle axes
    assert np.all(d.values[a_idx, :, :, d_idx, e_idx] == got)


def test_driving_missing_bound_state(equal_masses):
    model = make_model(equal_masses)
    from faddeev3d.errors import ValidationError

    with pytest.raises(ValidationError, match="initial pair"):
        driving_term(model, 1, {})


# ---------------------------------------------------------------------------
# kernel application
# ---------------------------------------------------------------------------


def test_apply_zero_input_gives_zero(equal_masses):
    model = make_model(equal_masses)
    zero = BreakupTMatrix(model.q0, model.axes, np.zeros(model.axes.shape()))
    out = apply_kernel(model, 1, {2: zero, 3: zero})
    assert np.all(out.values == 0.0)


def test_apply_linear_in_inputs(equal_masses):
    model = make_model(equal_masses)
    t_a = {j: random_table(model) for j in (2, 3)}
    t_b = {j: random_table(model) for j in (2, 3)}
    alpha, beta = 0.7, -1.3
    combo = {
        j: BreakupTMatrix(model.q0, model.axes, alpha * t_a[j].values + beta * t_b[j].values)
        for j in (2, 3)
    }
    out_combo = apply_kernel(model, 1, combo)
    out_a = apply_kernel(model, 1, t_a)
    out_b = apply_kernel(model, 1, t_b)
    expect = alpha * out_a.values + beta * out_b.values
    scale = np.max(np.abs(expect)) or 1.0
    assert np.allclose(out_combo.values, expect, rtol=0, atol=1e-12 * scale)


def test_apply_rows_agree_at_equal_masses(equal_masses):
    model = make_model(equal_masses)
    t_in = smooth_table(model)
    outs = {
        row: apply_kernel(model, row, {j: t_in for j in (1, 2, 3) if j != row})
        for row in (1, 2, 3)
    }
    scale = np.max(np.abs(outs[1].values))
    for row in (2, 3):
        assert np.allclose(outs[row].values, outs[1].values, rtol=0, atol=1e-8 * scale)


def test_apply_matches_monte_carlo_oracle(pnp_masses):
    """Brute-force Cartesian d^3q'' at one output point, same truncation."""
    model = make_model(pnp_masses)
    partners = {2: smooth_table(model), 3: smooth_table(model)}
    row = 1
    out = apply_kernel(model, row, partners)
    a_idx, d_idx, e_idx = 2, 1, 3
    p = model.axes.p[a_idx]
    x_q = model.axes.x_q[d_idx]
    q = model.axes.q[e_idx]
    pot = model.potentials[row]
    nu = pnp_masses.nu(row)
    tau_val = tau(pot, model.energy - q**2 / (2 * nu)).tau_matrix[0, 0]
    q_vec = sph_to_cart(q, x_q, 0.0)

    rng = np.random.default_rng(2024)
    n = 150_000
    qpp_mag = rng.uniform(0.0, Q_MAX, n)
    cos_t = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    sin_t = np.sqrt(1.0 - cos_t**2)
    qpp_vec = qpp_mag[:, None] * np.stack(
        [sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=1
    )

    from faddeev3d.kinematics import kernel_term_geometry
    from faddeev3d.atlas import GreenFunctionSpec, _triple_params

    total = 0.0
    for term in (1, 2):
        geo = kernel_term_geometry(row, term, pnp_masses)
        mu_bc, mu_ac, mc, _ = _triple_params(
            GreenFunctionSpec(geo.variant, pnp_masses, model.energy)
        )
        vt, vg = kernel_vectors(row, term, q_vec, qpp_vec, pnp_masses)
        f_mag = np.linalg.norm(vt, axis=1)
        g_mag = np.linalg.norm(vg, axis=1)
        x_g = np.where(g_mag > 0, vg[:, 2] / np.maximum(g_mag, 1e-300), 0.0)
        xd = np.array([dihedral_about_z(vgi, qi) for vgi, qi in zip(vg, qpp_vec)])
        green = 1.0 / (
            model.energy
            - q**2 / (2 * mu_bc)
            - qpp_mag**2 / (2 * mu_ac)
            - (qpp_vec @ q_vec) / mc
        )
        pts = np.stack([g_mag, np.clip(x_g, -1, 1), np.clip(xd, -1, 1), cos_t, qpp_mag], axis=1)
        t_vals = partners[geo.partner].at(pts)
        total += Q_MAX * float(np.mean(qpp_mag**2 * pot.form_factors[0](f_mag) * green * t_vals))
    expect = tau_val * float(pot.form_factors[0](np.asarray(p))) * total
    got = out.values[a_idx, 0, 0, d_idx, e_idx]
    assert got == pytest.approx(expect, rel=0.02)


def test_apply_detects_singular_region(pnp_masses):
    # E = +30 MeV puts q_wedge ~ 194 MeV, past the first table node
    model = make_model(pnp_masses, energy=30.0)
    zero = smooth_table(model)
    with pytest.raises(SingularRegionError, match="segmented"):
        apply_kernel(model, 1, {2: zero, 3: zero})


# ---------------------------------------------------------------------------
# iteration and acceleration
# ---------------------------------------------------------------------------


def test_wynn_resums_geometric_series_exactly():
    r = 0.6
    partial = list(np.cumsum([r**k for k in range(6)]))
    diag = wynn_epsilon(partial)
    assert float(diag[-1]) == pytest.approx(1.0 / (1.0 - r), rel=1e-12)


def test_neumann_fixed_point(equal_masses):
    model = make_model(equal_masses, energy=-80.0)
    bs = make_bound_states(model)
    tol = 1e-8
    t1, t2, t3, diag = neumann_pade_solve(model, bs, max_order=20, tol=tol)
    d1 = driving_term(model, 1, bs)
    k1 = apply_kernel(model, 1, {2: t2, 3: t3})
    residual = np.max(np.abs(t1.values - d1.values - k1.values))
    scale = max(np.max(np.abs(t1.values)), 1e-30)
    assert residual < 10.0 * tol * scale
    assert diag["orders"] >= 2


def test_accelerated_matches_plain_iteration_in_contraction_regime(equal_masses):
    # scaled kernel 0.1 K: plain Neumann converges fast; the espilon-
    # accelerated partial sums must land on the same fixed point
    model = make_model(equal_masses, energy=-40.0)
    bs = make_bound_states(model)
    d = {i: driving_term(model, i, bs) for i in (1, 2, 3)}
    scale_k = 0.1

    current = {i: d[i] for i in (1, 2, 3)}
    snapshots = [current[1].values.copy()]
    for _ in range(25):
        new = {}
        for row in (1, 2, 3):
            kt = apply_kernel(model, row, {j: current[j] for j in (1, 2, 3) if j != row})
            new[row] = BreakupTMatrix(
                model.q0, model.axes, d[row].values + scale_k * kt.values
            )
        inc = max(np.max(np.abs(new[i].values - current[i].values)) for i in (1, 2, 3))
        current = new
        snapshots.append(current[1].values.copy())
        if inc < 1e-13 * max(np.max(np.abs(current[1].values)), 1e-30):
            break
    plain = current[1].values
    diag = wynn_epsilon(snapshots[:7])
    accel = diag[-1]
    scale = np.max(np.abs(plain))
    assert np.allclose(accel, plain, rtol=0, atol=1e-8 * scale)


def test_acceleration_beats_plain_iteration_near_eta_0p9(equal_masses, capsys):
    # spectral radius ~0.9 here: plain Neumann needs ~log(tol)/log(0.9)
    # terms; the accelerated solve is expected to use far fewer (recorded)
    model = make_model(equal_masses, energy=-26.0)
    bs = make_bound_states(model)
    tol = 1e-7
    t1, t2, t3, diag = neumann_pade_solve(model, bs, max_order=40, tol=tol)
    plain_estimate = math.ceil(math.log(tol) / math.log(0.9))
    with capsys.disabled():
        print(
            f"\n[recorded] eta~0.9: accelerated orders = {diag['orders']}, "
            f"plain-iteration estimate = {plain_estimate}"
        )
    assert diag["orders"] <= 40
    d1 = driving_term(model, 1, bs)
    k1 = apply_kernel(model, 1, {2: t2, 3: t3})
    scale = max(float(np.max(np.abs(t1.values))), 1e-300)
    assert float(np.max(np.abs(t1.values - d1.values - k1.values))) / scale < 10 * tol


def test_divergence_reported(equal_masses):
    # eta > 1 here and far too few orders for the acceleration to lock on
    model = make_model(equal_masses, energy=-10.0)
    bs = make_bound_states(model)
    with pytest.raises(DivergenceError):
        neumann_pade_solve(model, bs, max_order=3, tol=1e-14)


# ---------------------------------------------------------------------------
# amplitudes
# ---------------------------------------------------------------------------


def direct_born(model, q_sph, bound_states):
    """Independent spelled-out evaluation of the two Born-like terms."""
    m = model.masses
    e, q0 = model.energy, model.q0
    q, x = q_sph.mag, q_sph.cos_theta
    psi1 = bound_states[1].wave_function
    psi2 = bound_states[2].wave_function
    psi3 = bound_states[3].wave_function

    def mag(a, b):
        return math.sqrt(a * a + b * b + 2 * a * b * x)

    mu23 = m.m2 * m.m3 / (m.m2 + m.m3)
    mu13 = m.m1 * m.m3 / (m.m1 + m.m3)
    mu12 = m.m1 * m.m2 / (m.m1 + m.m2)
    t2 = (
        psi1(mag(q * m.m1 / (m.m1 + m.m3), q0))
        * (e - q**2 / (2 * mu23) - q0**2 / (2 * mu13) - q * q0 * x / m.m3)
        * psi2(mag(q, q0 * m.m2 / (m.m2 + m.m3)))
    )
    t3 = (
        psi1(mag(q * m.m1 / (m.m1 + m.m2), q0))
        * (e - q**2 / (2 * mu23) - q0**2 / (2 * mu12) - q * q0 * x / m.m2)
        * psi3(mag(q, q0 * m.m3 / (m.m2 + m.m3)))
    )
    return t2 + t3


def test_born_terms_match_direct_quadrature(pnp_masses):
    model = make_model(pnp_masses, energy=-9.0, q0=35.0)
    bs = make_bound_states(model)
    rng = np.random.default_rng(5)
    for _ in range(100):
        q_sph = SphericalMomentum(model.q0, float(rng.uniform(-1, 1)), float(rng.uniform(0, 2 * np.pi)))
        got = elastic_born_terms(model, q_sph, bs)
        assert got.real == pytest.approx(direct_born(model, q_sph, bs), rel=1e-10)
        assert got.imag == 0.0


def test_elastic_amplitude_reduces_to_born_for_zero_t(pnp_masses):
    model = make_model(pnp_masses, energy=-9.0, q0=35.0)
    bs = make_bound_states(model)
    zero = BreakupTMatrix(model.q0, model.axes, np.zeros(model.axes.shape()))
    q_sph = SphericalMomentum(model.q0, 0.3, 0.0)
    amp = elastic_amplitude(model, zero, zero, q_sph, bs)
    assert amp == pytest.approx(elastic_born_terms(model, q_sph, bs), rel=1e-12)


def test_forward_direction_collinear_born(pnp_masses):
    model = make_model(pnp_masses, energy=-9.0, q0=35.0)
    bs = make_bound_states(model)
    q_sph = SphericalMomentum(model.q0, 1.0, 0.0)
    got = elastic_born_terms(model, q_sph, bs)
    assert got.real == pytest.approx(direct_born(model, q_sph, bs), rel=1e-12)


def test_elastic_kinematics_checked(pnp_masses):
    model = make_model(pnp_masses)
    bs = make_bound_states(model)
    zero = BreakupTMatrix(model.q0, model.axes, np.zeros(model.axes.shape()))
    with pytest.raises(KinematicsError):
        elastic_amplitude(model, zero, zero, SphericalMomentum(model.q0 * 1.01, 0.0, 0.0), bs)


def test_identical_particle_collapse(equal_masses):
    # equal masses, identical potentials, T2 = T3: both channels contribute
    # identically, so the amplitude is twice the single-channel evaluation
    model = make_model(equal_masses, energy=-9.0, q0=35.0)
    bs = make_bound_states(model)
    t_sym = smooth_table(model)
    q_sph = SphericalMomentum(model.q0, 0.42, 0.0)
    amp = elastic_amplitude(model, t_sym, t_sym, q_sph, bs)

    # hand-coded symmetric single-channel form
    m = equal_masses
    psi = bs[1].wave_function
    e, q0, q, x = model.energy, model.q0, q_sph.mag, q_sph.cos_theta
    mu = m.m1 / 2.0
    born_single = (
        psi(math.sqrt(q**2 / 4 + q0**2 + q * q0 * x))
        * (e - q**2 / (2 * mu) - q0**2 / (2 * mu) - q * q0 * x / m.m1)
        * psi(math.sqrt(q**2 + q0**2 / 4 + q * q0 * x))
    )
    qp = model.qpp_grid.nodes
    wq = model.qpp_grid.weights
    xp = model.xpp_grid.nodes
    wx = model.xpp_grid.weights
    ph = model.phipp_grid.nodes
    wp = model.phipp_grid.weights
    integral = 0.0
    for qn, wn in zip(qp, wq):
        for xn, wxn in zip(xp, wx):
            for pn, wpn in zip(ph, wp):
                y = x * xn + math.sqrt(1 - x * x) * math.sqrt(1 - xn * xn) * math.cos(pn)
                overlap = psi(math.sqrt(q**2 / 4 + qn**2 + q * qn * y))
                pk = math.sqrt(q**2 + qn**2 / 4 + q * qn * y)
                xpk = (q * x + 0.5 * qn * xn) / pk if pk > 0 else 0.0
                yvq = (q * y + 0.5 * qn) / pk if pk > 0 else 0.0
                den = math.sqrt(max(0.0, 1 - xpk**2)) * math.sqrt(max(0.0, 1 - xn**2))
                xd = 0.0 if den < 1e-14 else (yvq - xpk * xn) / den
                t_val = t_sym.at(
                    np.array([[pk, min(1, max(-1, xpk)), min(1, max(-1, xd)), xn, qn]])
                )[0]
                integral += wn * qn**2 * wxn * wpn * overlap * t_val
    assert amp.real == pytest.approx(2.0 * (born_single + integral), rel=1e-8)


def test_breakup_amplitude_single_term(equal_masses):
    model = make_model(equal_masses)
    t1 = smooth_table(model)
    zero = BreakupTMatrix(model.q0, model.axes, np.zeros(model.axes.shape()))
    p_sph = SphericalMomentum(120.0, 0.2, 0.7)
    q_sph = SphericalMomentum(80.0, -0.4, 2.1)
    got = breakup_amplitude(t1, zero, zero, p_sph, q_sph, equal_masses)
    y_pq = p_sph.cos_theta * q_sph.cos_theta + math.sqrt(1 - p_sph.cos_theta**2) * math.sqrt(
        1 - q_sph.cos_theta**2
    ) * math.cos(p_sph.phi - q_sph.phi)
    den = math.sqrt(1 - p_sph.cos_theta**2) * math.sqrt(1 - q_sph.cos_theta**2)
    xd = (y_pq - p_sph.cos_theta * q_sph.cos_theta) / den
    expect = t1.at(
        np.array([[p_sph.mag, p_sph.cos_theta, xd, q_sph.cos_theta, q_sph.mag]])
    )[0]
    assert got == pytest.approx(float(expect), rel=1e-12)


def test_breakup_swap_invariance_at_equal_masses(equal_masses):
    model = make_model(equal_masses)
    t1 = smooth_table(model)
    t_sym = smooth_table(model)
    p_sph = SphericalMomentum(100.0, 0.1, 0.3)
    q_sph = SphericalMomentum(90.0, -0.2, 1.0)
    a = breakup_amplitude(t1, t_sym, t_sym, p_sph, q_sph, equal_masses)
    b = breakup_amplitude(t1, t_sym, t_sym, q_sph.__class__(p_sph.mag, p_sph.cos_theta, p_sph.phi), q_sph, equal_masses)
    assert a == pytest.approx(b, rel=1e-12)


def test_breakup_refuses_extrapolation(equal_masses):
    model = make_model(equal_masses)
    t1 = smooth_table(model)
    with pytest.raises(ExtrapolationError):
        breakup_amplitude(
            t1, t1, t1, SphericalMomentum(10 * Q_MAX, 0.0, 0.0), SphericalMomentum(50.0, 0.0, 0.0), equal_masses
        )


def test_channel_energy(equal_masses):
    model = make_model(equal_masses)
    bs = make_bound_states(model)
    e = channel_energy(equal_masses, bs[1], 30.0)
    assert e == pytest.approx(30.0**2 / (2 * equal_masses.nu(1)) - abs(bs[1].energy), rel=1e-14)


# ---------------------------------------------------------------------------
# principal-value quadrature
# ---------------------------------------------------------------------------


def pv_partial_fraction_exact(a: float, qp: float, upper: float) -> float:
    # PV int_0^L dq/((q^2+a^2)(qp^2-q^2)) by partial fractions:
    # 1/(qp^2+a^2) [ atan(L/a)/a + ln((L+qp)/(L-qp))/(2 qp) ]
    return (
        math.atan(upper / a) / a + math.log((upper + qp) / (upper - qp)) / (2 * qp)
    ) / (qp**2 + a**2)


def test_pv_integral_closed_form():
    a, qp, upper = 80.0, 120.0, 5000.0
    grid = gauss_legendre(400, 0.0, upper)
    got = pv_subtracted_integral(lambda q: 1.0 / (np.square(q) + a * a), qp, grid, upper=upper)
    assert got == pytest.approx(pv_partial_fraction_exact(a, qp, upper), rel=1e-10)
    # and the infinite-interval limit is approached as the cutoff grows
    assert pv_partial_fraction_exact(a, qp, 1e9) == pytest.approx(
        math.pi / (2 * a * (qp**2 + a**2)), rel=1e-6
    )


def test_pv_integral_handles_node_near_pole():
    a, qp, upper = 50.0, 100.0, 4000.0
    grid = gauss_legendre(801, 0.0, upper)
    got = pv_subtracted_integral(lambda q: 1.0 / (np.square(q) + a * a), qp, grid, upper=upper)
    assert got == pytest.approx(pv_partial_fraction_exact(a, qp, upper), rel=1e-9)
