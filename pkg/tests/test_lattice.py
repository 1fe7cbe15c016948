import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import SphericalVoronoi

from bandcub.errors import NotALattice, RhoTooLarge
from bandcub.lattice import (
    Lattice,
    VoronoiWeights,
    build_lattice,
    min_separation,
    packing_bounds,
    rho_for_omega,
    verify_lattice,
    voronoi_measures,
    weyl_count_check,
)
from bandcub.manifold import CIRCLE, SPHERE2, TORUS2, geodesic_distance, sphere_to_cartesian

ALL = [CIRCLE, TORUS2, SPHERE2]


def test_circle_equispaced(circle8):
    np.testing.assert_allclose(circle8.points[:, 0], np.arange(8) * np.pi / 4, atol=1e-14)
    rep = verify_lattice(circle8)
    assert rep.min_separation == pytest.approx(np.pi / 4)
    assert rep.covering_radius <= np.pi / 4
    assert rep.multiplicity == 4
    assert rep.point_count == 8 and rep.valid


def test_single_point_is_not_a_lattice():
    lat = Lattice(CIRCLE, np.pi / 2, [[0.0]])
    with pytest.raises(NotALattice) as exc:
        verify_lattice(lat)
    assert exc.value.report.covering_radius == pytest.approx(np.pi, abs=0.1)
    assert not verify_lattice(lat, strict=False).valid


def test_crowded_points_are_not_a_lattice():
    lat = Lattice(CIRCLE, 1.0, [[0.0], [0.1]] + [[t] for t in np.arange(1, 13) * 0.5])
    with pytest.raises(NotALattice):
        verify_lattice(lat)


def test_probe_density_precondition(circle8):
    with pytest.raises(ValueError):
        verify_lattice(circle8, probe_density=8)


def test_rho_too_large():
    with pytest.raises(RhoTooLarge):
        build_lattice(CIRCLE, 10.0)
    with pytest.raises(ValueError):
        build_lattice(CIRCLE, 0.0)


def test_sphere_example(sphere_lattice):
    rep = verify_lattice(sphere_lattice)
    assert rep.covering_radius <= 0.3
    assert rep.min_separation >= 0.3 * (1 - 1e-9)
    assert rep.point_count == 94


@pytest.mark.parametrize("m, rho", [(CIRCLE, 0.2), (TORUS2, 0.7), (SPHERE2, 0.45)])
@pytest.mark.parametrize("seed", [0, 3])
def test_generated_lattices_certify(m, rho, seed):
    lat = build_lattice(m, rho, seed)
    rep = verify_lattice(lat)
    assert rep.valid and rep.multiplicity >= 1
    lo, hi = packing_bounds(m, rho)
    assert lo <= len(lat) <= hi


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(ALL), st.floats(0.35, 1.4), st.integers(0, 1000))
def test_lattice_property(m, rho, seed):
    lat = build_lattice(m, rho, seed)
    assert verify_lattice(lat).valid
    lo, hi = packing_bounds(m, rho)
    assert lo <= len(lat) <= hi


def test_determinism_and_seed_dependence():
    a = build_lattice(SPHERE2, 0.5, seed=7)
    b = build_lattice(SPHERE2, 0.5, seed=7)
    c = build_lattice(SPHERE2, 0.5, seed=8)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.points.shape != c.points.shape or not np.array_equal(a.points, c.points)


def test_min_separation_brute_force():
    lat = build_lattice(TORUS2, 0.9, seed=2)
    d = geodesic_distance(TORUS2, lat.points[:, None, :], lat.points[None, :, :])
    d[np.diag_indices_from(d)] = np.inf
    assert min_separation(lat) == pytest.approx(d.min(), abs=1e-12)


def test_lattice_json_round_trip(sphere_lattice):
    d = sphere_lattice.to_dict()
    assert set(d) == {"manifold", "rho", "seed", "points"}
    back = Lattice.from_dict(d)
    np.testing.assert_array_equal(back.points, sphere_lattice.points)
    assert back.rho == sphere_lattice.rho and back.seed == 1


def test_rho_scalings():
    assert rho_for_omega(16, 2) == 0.5
    assert rho_for_omega(16, 2, "linear") == 0.125
    with pytest.raises(ValueError):
        rho_for_omega(16, 2, "cubic")


def test_voronoi_circle(circle8):
    V = voronoi_measures(circle8)
    np.testing.assert_allclose(V.measures, np.pi / 4, rtol=1e-12)


def test_voronoi_circle_against_gaps():
    lat = build_lattice(CIRCLE, 0.3, seed=5)
    V = voronoi_measures(lat, resolution=512)
    theta = lat.points[:, 0]
    order = np.argsort(theta)
    gaps = np.diff(np.concatenate([theta[order], [theta[order][0] + 2 * np.pi]]))
    cells = np.empty(len(lat))
    cells[order] = 0.5 * (gaps + np.roll(gaps, 1))
    # each cell is off by at most one reference node at each of its two ends
    assert np.abs(V.measures - cells).max() <= 2 * (2 * np.pi / 1024) + 1e-12


def test_voronoi_sphere_against_exact_cells(sphere_lattice):
    V = voronoi_measures(sphere_lattice)
    assert V.measures.sum() == pytest.approx(4 * np.pi, rel=1e-9)
    areas = SphericalVoronoi(sphere_to_cartesian(sphere_lattice.points)).calculate_areas()
    assert np.abs(V.measures - areas).max() / areas.min() < 0.05
    lo, hi = V.scaled_range()
    # recorded envelope for rho = 0.6, seed 1
    assert 0.2 < lo <= hi < 0.55


@pytest.mark.parametrize("m, rho", [(TORUS2, 0.8), (SPHERE2, 0.4)])
def test_voronoi_positive_and_partition(m, rho):
    V = voronoi_measures(build_lattice(m, rho, seed=4))
    assert np.all(V.measures > 0)
    assert V.measures.sum() == pytest.approx(m.volume, rel=1e-9)


def test_voronoi_json_round_trip(circle8):
    V = voronoi_measures(circle8)
    back = VoronoiWeights.from_dict(V.to_dict())
    np.testing.assert_array_equal(back.measures, V.measures)
    assert back.resolution == V.resolution


def test_weyl_examples():
    t = weyl_count_check(CIRCLE, [16, 64, 256], 1.0)
    assert t.spread <= 2.0
    assert [r["point_count"] for r in t.rows] == [32, 64, 128]
    t = weyl_count_check(SPHERE2, [9, 36], 1.0)
    counts = [r["point_count"] for r in t.rows]
    assert 3.0 <= counts[1] / counts[0] <= 5.0
    t = weyl_count_check(TORUS2, [16], 2.0)
    assert len(t.rows) == 1 and t.rows[0]["ratio"] > 0
    with pytest.raises(RhoTooLarge):
        weyl_count_check(CIRCLE, [0.01], 1.0)
