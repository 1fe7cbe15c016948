import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandcub.cubature import CubatureRule, exact_rule, exactness_residual
from bandcub.errors import InsufficientExactness, UnsupportedManifold
from bandcub.homogeneous import (
    ProductReport,
    derivative_coefficients,
    derivative_identity_check,
    discrete_fourier_transform,
    product_bandlimit_check,
    product_bound,
    product_coefficients,
)
from bandcub.lattice import build_lattice
from bandcub.manifold import CIRCLE, SPHERE2, TORUS2, evaluate_basis, spectrum
from bandcub.spectral import SpectralFunction, analyze, random_function, synthesize

ALL = [CIRCLE, TORUS2, SPHERE2]


def unit(m, cutoff, j):
    c = np.zeros(len(spectrum(m, cutoff)[0]))
    c[j] = 1.0
    return SpectralFunction(m, cutoff, c)


def test_product_double_angle():
    # (cos t / sqrt(pi))^2 = 1/(2 pi) + cos(2t)/(2 pi)
    f = unit(CIRCLE, 1, 1)
    h = product_coefficients(f, f, 9).coefficients
    expected = np.zeros(7)
    expected[0] = 1 / (2 * math.pi) * math.sqrt(2 * math.pi)
    expected[3] = 1 / (2 * math.pi) * math.sqrt(math.pi)
    np.testing.assert_allclose(h, expected, atol=1e-15)
    rep = product_bandlimit_check(f, f)
    assert rep.bound == 4 and rep.max_leakage == 0.0 and rep.empirical_cutoff == 4.0


def test_product_with_constant(rng):
    g = random_function(SPHERE2, 12, rng)
    h = product_coefficients(unit(SPHERE2, 0, 0), g, 12)
    np.testing.assert_allclose(h.coefficients, g.coefficients / math.sqrt(4 * math.pi), atol=1e-14)


def test_sphere_degree_one_square():
    f = unit(SPHERE2, 2, 2)
    h = product_coefficients(f, f, 20)
    support = set(h.eigenvalues[np.abs(h.coefficients) > 1e-12])
    assert support == {0.0, 6.0}


def test_product_examples(rng):
    f, g = random_function(SPHERE2, 20, rng), random_function(SPHERE2, 20, rng)
    rep = product_bandlimit_check(f, g, 360)
    assert rep.bound == 240 and rep.max_leakage <= 1e-10 and rep.empirical_cutoff == 72
    f, g = random_function(TORUS2, 2, rng), random_function(TORUS2, 2, rng)
    rep = product_bandlimit_check(f, g)
    assert rep.empirical_cutoff <= 8 and rep.bound == 16
    assert set(rep.to_dict()) == {"omega", "bound", "max_leakage", "empirical_cutoff", "holds"}
    with pytest.raises(ValueError):
        product_bandlimit_check(f, g, 10)


def test_product_against_pointwise_projection(rng):
    # independent route: project the sampled product with the adaptive oracle
    f, g = random_function(SPHERE2, 12, rng), random_function(SPHERE2, 6, rng)
    h = product_coefficients(f, g, 60)
    ref = analyze(SPHERE2, lambda p: f(p) * g(p), 60)
    np.testing.assert_allclose(h.coefficients, ref.coefficients, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(ALL), st.floats(1.0, 12.0), st.integers(0, 2**32 - 1))
def test_product_bilinear_symmetric_and_bandlimited(m, omega, seed):
    rng = np.random.default_rng(seed)
    f, g, k = (random_function(m, omega, rng) for _ in range(3))
    out = product_bound(m, omega) * 1.5
    fg = product_coefficients(f, g, out).coefficients
    np.testing.assert_allclose(fg, product_coefficients(g, f, out).coefficients, atol=1e-12)
    lin = product_coefficients(2.0 * f + k, g, out).coefficients
    np.testing.assert_allclose(lin, 2 * fg + product_coefficients(k, g, out).coefficients, atol=1e-12)
    assert product_bandlimit_check(f, g).max_leakage <= 1e-10


def test_dft_circle_trapezoid(circle8):
    # 8 nodes cannot sample E_49, but the trapezoid rule integrates it exactly
    rule = CubatureRule(circle8, np.full(8, np.pi / 4), 49, "voronoi_plain")
    assert exactness_residual(rule) <= 1e-14
    f = unit(CIRCLE, 1, 1)
    c = discrete_fourier_transform(rule, synthesize(f, circle8.points), 1)
    np.testing.assert_allclose(c.coefficients, [0, 1, 0], atol=1e-14)
    c = discrete_fourier_transform(rule, synthesize(unit(CIRCLE, 0, 0), circle8.points), 0)
    assert c.coefficients[0] == pytest.approx(1.0, abs=1e-14)


@pytest.fixture(scope="module")
def sphere_rule():
    return exact_rule(build_lattice(SPHERE2, 0.3, seed=1), 78)


def test_dft_sphere(sphere_rule, rng):
    pts = sphere_rule.lattice.points
    for _ in range(50):
        f = random_function(SPHERE2, 6.5, rng)
        c = discrete_fourier_transform(sphere_rule, synthesize(f, pts), 6.5)
        assert np.abs(c.coefficients - f.coefficients).max() <= 1e-8


def test_dft_requires_exactness(sphere_rule, rng):
    f = random_function(SPHERE2, 12, rng)
    with pytest.raises(InsufficientExactness):
        discrete_fourier_transform(sphere_rule, synthesize(f, sphere_rule.lattice.points), 12)
    with pytest.raises(ValueError):
        discrete_fourier_transform(sphere_rule, np.zeros(3), 6.5)


def test_dft_negative_control(rng):
    lat = build_lattice(SPHERE2, 0.3, seed=1)
    weak = exact_rule(lat, 6.5)
    f = random_function(SPHERE2, 6.5, rng)
    c = discrete_fourier_transform(weak, synthesize(f, lat.points), 6.5, check=False)
    assert np.abs(c.coefficients - f.coefficients).max() > 1e-4


def test_derivative_coefficients_against_closed_form(rng):
    f = random_function(TORUS2, 10, rng)
    pts = rng.uniform(0, 2 * np.pi, (30, 2))
    for orders in [(1, 0), (0, 1), (2, 1), (0, 3)]:
        direct = f.coefficients @ evaluate_basis(TORUS2, 10, pts, derivative=orders)
        np.testing.assert_allclose(derivative_coefficients(f, orders)(pts), direct, atol=1e-10)
    g = random_function(CIRCLE, 16, rng)
    t = rng.uniform(0, 2 * np.pi, (10, 1))
    np.testing.assert_allclose(
        derivative_coefficients(g, (1,))(t), g.coefficients @ evaluate_basis(CIRCLE, 16, t, derivative=(1,)), atol=1e-12
    )


def test_derivative_identity(rng):
    f = unit(CIRCLE, 4, 3)
    assert derivative_coefficients(f, (1,)).norm() ** 2 == pytest.approx(4.0)
    assert derivative_identity_check(f, 1) <= 1e-14
    for s in (1, 2):
        assert derivative_identity_check(random_function(TORUS2, 10, rng), s) <= 1e-10
        assert derivative_identity_check(unit(CIRCLE, 4, 0), s) == 0.0
    with pytest.raises(UnsupportedManifold):
        derivative_identity_check(random_function(SPHERE2, 6, rng), 1)


def test_product_report_holds_flag():
    assert ProductReport(1.0, 4.0, 1e-12, 4.0).holds
    assert not ProductReport(1.0, 4.0, 1e-3, 9.0).holds
