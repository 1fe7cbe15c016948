import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandcub.errors import CutoffExceeded
from bandcub.manifold import CIRCLE, SPHERE2, TORUS2, evaluate_basis, reference_integral, spectrum
from bandcub.spectral import (
    SpectralFunction,
    analyze,
    apply_power,
    bernstein_check,
    fit_decay_exponent,
    modulus_of_continuity,
    projection_tail,
    random_function,
    synthesize,
)

ALL = [CIRCLE, TORUS2, SPHERE2]


def test_synthesize_examples():
    f = SpectralFunction(CIRCLE, 1, [0, 1, 0])
    assert synthesize(f, [[0.0]])[0] == pytest.approx(1 / math.sqrt(math.pi), abs=1e-15)
    u0 = SpectralFunction(SPHERE2, 0, [1.0])
    np.testing.assert_allclose(u0([[0.3, 1.0], [2.0, 4.0]]), (4 * math.pi) ** -0.5, rtol=1e-15)


def test_torus_synthesis_against_closed_form(rng):
    f = random_function(TORUS2, 20, rng)
    pts = rng.uniform(0, 2 * np.pi, (100, 2))
    trig = {"c": np.cos, "s": np.sin}
    direct = np.zeros(len(pts))
    for c, (m1, m2, var) in zip(f.coefficients, spectrum(TORUS2, 20)[1]):
        n1 = 1 / math.sqrt(2 * math.pi) if m1 == 0 else 1 / math.sqrt(math.pi)
        n2 = 1 / math.sqrt(2 * math.pi) if m2 == 0 else 1 / math.sqrt(math.pi)
        direct += c * n1 * n2 * trig[var[0]](m1 * pts[:, 0]) * trig[var[1]](m2 * pts[:, 1])
    np.testing.assert_allclose(synthesize(f, pts), direct, atol=1e-12)


@pytest.mark.parametrize("m", ALL)
def test_analyze_round_trip(m, rng):
    f = random_function(m, 50, rng)
    g = analyze(m, f, 50)
    assert np.abs(g.coefficients - f.coefficients).max() <= 1e-10


def test_analyze_examples():
    c = analyze(CIRCLE, lambda p: np.ones(len(p)), 4).coefficients
    np.testing.assert_allclose(c, [math.sqrt(2 * math.pi), 0, 0, 0, 0], atol=1e-14)
    c = analyze(CIRCLE, lambda p: np.cos(p[:, 0]) ** 2, 4).coefficients
    np.testing.assert_allclose(c, [math.sqrt(2 * math.pi) / 2, 0, 0, math.sqrt(math.pi) / 2, 0], atol=1e-14)


@pytest.mark.parametrize("m", ALL)
def test_plancherel(m, rng):
    f = random_function(m, 50, rng)
    assert reference_integral(m, lambda p: f(p) ** 2) == pytest.approx(f.norm() ** 2, rel=1e-9)


def test_spectral_function_validation_and_json(rng):
    with pytest.raises(ValueError):
        SpectralFunction(CIRCLE, 4, [1.0, 2.0])
    f = random_function(SPHERE2, 6.5, rng)
    g = SpectralFunction.from_dict(f.to_dict())
    assert g.manifold is SPHERE2 and g.cutoff == 6.5
    np.testing.assert_array_equal(g.coefficients, f.coefficients)


def test_arithmetic_and_extend(rng):
    f = random_function(CIRCLE, 4, rng)
    g = random_function(CIRCLE, 9, rng)
    h = f + 2.0 * g
    pts = rng.uniform(0, 2 * np.pi, (10, 1))
    np.testing.assert_allclose(h(pts), f(pts) + 2 * g(pts), atol=1e-13)
    assert f.extend(16).extend(4).coefficients.tolist() == f.coefficients.tolist()


def test_bernstein_examples(rng):
    f = SpectralFunction(CIRCLE, 4, [0, 0, 0, 0, 1])
    assert bernstein_check(f, 4, 3).ratio == pytest.approx(1.0, abs=1e-12)
    assert bernstein_check(SpectralFunction(CIRCLE, 4, [1, 0, 0, 0, 0]), 4, 1).ratio == 0.0
    r = bernstein_check(random_function(SPHERE2, 20, rng), 20, 1.5)
    assert r.holds and r.ratio <= 1.0
    with pytest.raises(CutoffExceeded):
        bernstein_check(random_function(SPHERE2, 20, rng), 6.5, 1)


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from(ALL),
    st.floats(1.0, 40.0),
    st.sampled_from([0.5, 1.0, 2.0]),
    st.integers(0, 2**32 - 1),
)
def test_bernstein_property(m, omega, s, seed):
    f = random_function(m, omega, seed)
    assert bernstein_check(f, omega, s).holds


def test_apply_power_matches_analytic_laplacian(rng):
    f = random_function(CIRCLE, 25, rng)
    pts = rng.uniform(0, 2 * np.pi, (20, 1))
    second = f.coefficients @ evaluate_basis(CIRCLE, 25, pts, derivative=(2,))
    np.testing.assert_allclose(apply_power(f, 1)(pts), -second, atol=1e-10)


def test_projection_tail():
    # cos(theta) + cos(3 theta) in the orthonormal basis
    c = np.zeros(len(spectrum(CIRCLE, 9)[0]))
    c[1] = c[5] = math.sqrt(math.pi)
    f = SpectralFunction(CIRCLE, 9, c)
    assert projection_tail(f, 4) == pytest.approx(math.sqrt(math.pi))
    assert projection_tail(f, 9) == 0.0


def test_projection_tail_brute_force(rng):
    f = random_function(SPHERE2, 42, rng)
    lam = f.eigenvalues
    brute = math.sqrt(sum(c * c for c, l in zip(f.coefficients, lam) if l > 12))
    assert projection_tail(f, 12) == pytest.approx(brute, rel=1e-14)


def test_modulus_examples():
    f = SpectralFunction(CIRCLE, 1, [0, 1, 0])
    assert modulus_of_continuity(f, 1, math.pi) == pytest.approx(2.0, abs=1e-12)
    assert modulus_of_continuity(SpectralFunction(CIRCLE, 1, [1, 0, 0]), 3, 1.0) == 0.0
    with pytest.raises(ValueError):
        modulus_of_continuity(f, 1, 1.0, tau_grid=10)


def test_modulus_against_binomial_sum(rng):
    # Delta_tau^r = sum_j (-1)^(r-j) C(r, j) exp(i j tau L), applied to each mode
    f = random_function(TORUS2, 30, rng)
    r, s = 2, 0.1
    lam, c = f.eigenvalues, f.coefficients
    taus = np.linspace(-s, s, 4001)
    best = 0.0
    for tau in taus:
        mult = sum((-1) ** (r - j) * comb(r, j) * np.exp(1j * j * tau * lam) for j in range(r + 1))
        best = max(best, float(np.sqrt(np.sum(np.abs(mult) ** 2 * c**2))))
    assert modulus_of_continuity(f, r, s, tau_grid=1024) == pytest.approx(best, rel=1e-5)


@pytest.mark.parametrize("m", ALL)
def test_modulus_monotone_and_bounded(m, rng):
    f = random_function(m, 30, rng)
    vals = [modulus_of_continuity(f, 2, s) for s in np.linspace(0.01, 1.0, 15)]
    assert np.all(np.diff(vals) >= -1e-12)
    assert max(vals) <= 4 * f.norm() * (1 + 1e-12)


def test_projection_error_shape_matches_modulus():
    # ||f - f_w|| and Omega_{m-k}(L^k f, 1/w) / w^k decay at the same rate in w
    lam = spectrum(CIRCLE, 40000)[0]
    coeffs = np.where(lam > 0, lam, 1.0) ** -2.0
    f = SpectralFunction(CIRCLE, 40000, coeffs)
    omegas = np.array([16.0, 64.0, 256.0, 1024.0])
    tails = [projection_tail(f, w) for w in omegas]
    k, m_order = 1, 3
    rhs = [modulus_of_continuity(apply_power(f, k), m_order - k, 1 / w) / w**k for w in omegas]
    assert fit_decay_exponent(omegas, tails) == pytest.approx(fit_decay_exponent(omegas, rhs), abs=0.3)
    ratios = np.array(tails) / np.array(rhs)
    assert ratios.max() / ratios.min() < 4.0


def test_fit_decay_exponent():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert fit_decay_exponent(x, 3 * x**-1.5) == pytest.approx(1.5)
