import math

import numpy as np
import pytest

from faddeev3d.errors import ValidationError
from faddeev3d.grids import (
    QuadratureGrid,
    azimuthal_grid,
    cosine_grid,
    gauss_legendre,
    momentum_grid,
    segmented_grid,
)


def test_polynomial_exactness():
    g = gauss_legendre(8, 0.0, 1.0)
    assert g.integrate(g.nodes**2) == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_single_node_is_midpoint():
    g = gauss_legendre(1, -1.0, 1.0)
    assert g.nodes[0] == pytest.approx(0.0, abs=1e-15)
    assert g.weights[0] == pytest.approx(2.0, abs=1e-15)


def test_sin_integral():
    g = gauss_legendre(48, 0.0, math.pi)
    assert g.integrate(np.sin(g.nodes)) == pytest.approx(2.0, abs=1e-13)


def test_weight_sum_matches_length():
    g = gauss_legendre(16, 2.0, 7.5)
    assert np.sum(g.weights) == pytest.approx(5.5, abs=1e-13)


def test_momentum_grid_exponential_integral():
    c = 250.0
    g = momentum_grid(64, c)
    assert g.integrate(np.exp(-g.nodes / c)) == pytest.approx(c, rel=1e-8)


def test_momentum_grid_range_and_weights():
    g = momentum_grid(64, 300.0)
    assert np.isfinite(g.nodes[-1])
    assert g.nodes[-1] > 50 * 300.0
    assert np.all(g.weights > 0)


def test_segmented_jumps_over_singular_band():
    # panels [0, q_vee - d] and [q_wedge + d, p_max] with the band skipped
    q_vee, q_wedge, delta, p_max = 30.6, 35.4, 0.5, 500.0
    g = segmented_grid([0.0, q_vee - delta, q_wedge + delta, p_max], [12, 0, 24])
    assert not np.any((g.nodes > q_vee - delta) & (g.nodes < q_wedge + delta))
    covered = (q_vee - delta) + (p_max - q_wedge - delta)
    assert np.sum(g.weights) == pytest.approx(covered, abs=1e-12)


def test_single_panel_equals_gauss_legendre():
    a = segmented_grid([1.0, 4.0], [12])
    b = gauss_legendre(12, 1.0, 4.0)
    assert np.allclose(a.nodes, b.nodes, rtol=0, atol=1e-14)
    assert np.allclose(a.weights, b.weights, rtol=0, atol=1e-14)


def test_composition_is_associative():
    direct = segmented_grid([0.0, 2.0, 5.0], [6, 9])
    left = gauss_legendre(6, 0.0, 2.0)
    right = gauss_legendre(9, 2.0, 5.0)
    assert np.allclose(direct.nodes, np.concatenate([left.nodes, right.nodes]))
    assert np.allclose(direct.weights, np.concatenate([left.weights, right.weights]))


def test_doubling_reduces_error():
    exact = math.expm1(1.0)

    def err(n):
        g = gauss_legendre(n, 0.0, 1.0)
        return abs(g.integrate(np.exp(g.nodes)) - exact)

    assert err(4) < 1e-6
    assert err(8) <= 0.5 * err(4) or err(8) < 1e-15


def test_azimuthal_grid_periodic_exactness():
    g = azimuthal_grid(16)
    assert np.sum(g.weights) == pytest.approx(2 * math.pi, abs=1e-13)
    # cos(k phi) integrates to zero for 0 < k < n
    for k in (1, 2, 5):
        assert g.integrate(np.cos(k * g.nodes)) == pytest.approx(0.0, abs=1e-12)


def test_cosine_grid_bounds():
    g = cosine_grid(32)
    assert g.nodes[0] > -1.0 and g.nodes[-1] < 1.0


def test_validation_errors():
    with pytest.raises(ValidationError):
        gauss_legendre(0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        gauss_legendre(4, 1.0, 1.0)
    with pytest.raises(ValidationError):
        momentum_grid(3, 100.0)
    with pytest.raises(ValidationError):
        segmented_grid([0.0, 1.0, 0.5], [4, 4])
    with pytest.raises(ValidationError):
        segmented_grid([0.0, 1.0], [1])
    with pytest.raises(ValidationError):
        QuadratureGrid(np.array([1.0, 0.5]), np.array([1.0, 1.0]), "bad")
