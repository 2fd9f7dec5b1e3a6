"""Colour triangle, hexagonal lattice, image space, and the blow-up numbers."""

import math

import numpy as np
import pytest

from metricsearch.colour import (
    CIRCUMRADIUS,
    COLOUR_TRIANGLE,
    INRADIUS,
    TRIANGLE_AREA,
    average_colour,
    average_colour_extension,
    ball_area_ratio,
    barycentric,
    build_lattice,
    histogram_map,
    image_metric,
    qbic_blowup_experiment,
    sample_images,
)
from metricsearch.histogram import Histogram, kantorovich


def vertex_indices(lattice):
    out = []
    for v in (COLOUR_TRIANGLE.r, COLOUR_TRIANGLE.g, COLOUR_TRIANGLE.b):
        d = np.linalg.norm(lattice.coords - np.asarray(v), axis=1)
        out.append(int(np.argmin(d)))
        assert d.min() < 1e-12
    return out


def test_lattice_sizes():
    assert len(build_lattice(1.0)) == 3      # just the vertices
    assert len(build_lattice(0.5)) == 6      # vertices + edge midpoints
    assert len(build_lattice(0.1)) == 66


def test_lattice_contains_vertices_and_respects_spacing():
    for spacing in (1.0, 0.5, 0.25, 0.1):
        lat = build_lattice(spacing)
        vertex_indices(lat)  # asserts all three vertices present
        d = lat.distance_matrix
        off = d[np.triu_indices(len(lat), 1)]
        assert off.min() == pytest.approx(spacing, abs=1e-9)
        assert off.max() <= 1.0 + 1e-12


def test_lattice_points_inside_triangle():
    lat = build_lattice(0.2)
    for p in lat.coords:
        bc = barycentric(p)
        assert bc.min() >= -1e-12 and bc.max() <= 1 + 1e-12


def test_lattice_rejects_bad_spacing():
    with pytest.raises(ValueError):
        build_lattice(1.5)
    with pytest.raises(ValueError):
        build_lattice(0.0)
    with pytest.raises(ValueError):
        build_lattice(0.3)  # does not divide the side evenly


def test_image_metric_examples():
    lat = build_lattice(0.5)
    r, g, b = vertex_indices(lat)
    x = np.array([r, g])
    assert image_metric(x, x, lat) == 0.0
    y = np.array([b, g])  # one pixel moved by colour distance 1
    assert image_metric(x, y, lat) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        image_metric(np.array([0, 1]), np.array([0, 1, 2]), lat)


def test_image_metric_axioms_random_triples():
    lat = build_lattice(0.25)
    rng = np.random.default_rng(1)
    imgs = rng.integers(0, len(lat), size=(60, 7))
    for _ in range(300):
        x, y, z = imgs[rng.integers(0, 60, size=3)]
        dxy = image_metric(x, y, lat)
        assert dxy >= 0
        assert dxy == pytest.approx(image_metric(y, x, lat))
        assert image_metric(x, z, lat) <= dxy + image_metric(y, z, lat) + 1e-12


def test_sample_images_shape_and_determinism():
    lat = build_lattice(0.5)
    a = sample_images(lat, k=11, count=5, seed=42)
    b = sample_images(lat, k=11, count=5, seed=42)
    assert a.shape == (5, 11)
    assert np.array_equal(a, b)
    assert a.min() >= 0 and a.max() < len(lat)
    big = sample_images(lat, k=10_000, count=10, seed=1)
    assert big.shape == (10, 10_000)


def test_pixel_distribution_uniform_chi_square():
    scipy_stats = pytest.importorskip("scipy.stats")
    lat = build_lattice(0.25)
    pixels = sample_images(lat, k=1, count=100_000, seed=7).ravel()
    counts = np.bincount(pixels, minlength=len(lat))
    _, p = scipy_stats.chisquare(counts)
    assert p > 0.001


def test_histogram_map_examples():
    lat = build_lattice(0.5)
    r, g, _ = vertex_indices(lat)
    mono = histogram_map(np.array([r, r, r]), lat)
    expect = np.zeros(len(lat))
    expect[r] = 1.0
    assert np.allclose(mono.weights, expect)
    two = histogram_map(np.array([r, g]), lat)
    assert two.weights[r] == 0.5 and two.weights[g] == 0.5


def test_histogram_map_is_one_lipschitz_into_transport():
    lat = build_lattice(0.2)
    rng = np.random.default_rng(3)
    for k in (5, 20):
        imgs = sample_images(lat, k=k, count=60, seed=int(rng.integers(1 << 30)))
        for i in range(0, 60, 2):
            x, y = imgs[i], imgs[i + 1]
            lhs = kantorovich(histogram_map(x, lat), histogram_map(y, lat)).cost
            assert lhs <= image_metric(x, y, lat) + 1e-9


def test_average_colour_point_mass_and_uniform_vertices():
    lat = build_lattice(0.5)
    r, g, b = vertex_indices(lat)
    assert np.allclose(average_colour(Histogram.point_mass(lat.ground, r), lat),
                       COLOUR_TRIANGLE.r)
    w = np.zeros(len(lat))
    w[[r, g, b]] = 1.0 / 3.0
    assert np.allclose(average_colour(Histogram(lat.ground, w), lat),
                       COLOUR_TRIANGLE.centroid)


def test_average_colour_agrees_with_affine_extension():
    lat = build_lattice(0.25)
    ext = average_colour_extension(lat)
    rng = np.random.default_rng(4)
    for _ in range(20):
        h = Histogram(lat.ground, rng.dirichlet(np.ones(len(lat))))
        assert np.allclose(average_colour(h, lat), ext(h))


def test_average_colour_stays_in_triangle_and_is_lipschitz():
    lat = build_lattice(0.2)
    rng = np.random.default_rng(5)
    prev = None
    for _ in range(40):
        h = Histogram(lat.ground, rng.dirichlet(np.ones(len(lat))))
        avg = average_colour(h, lat)
        bc = barycentric(avg)
        assert bc.min() >= -1e-9 and bc.max() <= 1 + 1e-9
        if prev is not None:
            gap = float(np.linalg.norm(avg - prev_avg))
            assert gap <= kantorovich(h, prev).cost + 1e-9
        prev, prev_avg = h, avg


def test_composition_sigma_then_average_is_lipschitz_on_images():
    lat = build_lattice(0.2)
    imgs = sample_images(lat, k=15, count=40, seed=6)
    for i in range(0, 40, 2):
        x, y = imgs[i], imgs[i + 1]
        ax = average_colour(histogram_map(x, lat), lat)
        ay = average_colour(histogram_map(y, lat), lat)
        assert np.linalg.norm(ax - ay) <= image_metric(x, y, lat) + 1e-9


def test_ball_area_ratio_branches():
    ratio, se = ball_area_ratio(0.1)
    assert se == 0.0  # interior disc: closed form
    assert ratio == pytest.approx(math.pi * 0.01 / TRIANGLE_AREA)
    ratio_big, se_big = ball_area_ratio(INRADIUS * 1.5, mc_points=200_000)
    assert se_big > 0.0  # boundary-crossing disc: Monte Carlo
    # sanity: larger disc covers more, but never more than everything
    assert ratio < ratio_big <= 1.0


def test_experiment_paper_numbers():
    lat = build_lattice(0.1)
    rep = qbic_blowup_experiment(lat, k=10_000, epsilon=0.1, sample_count=2000, seed=8)
    assert rep.mass_lower_bound == pytest.approx(1.0 - 2.0 * math.exp(-12.5), rel=1e-12)
    assert rep.mass_lower_bound > 0.99999
    assert rep.concentration_bound == pytest.approx(0.5 * math.exp(-25.0), rel=1e-12)
    assert rep.ball_area_ratio == pytest.approx(0.072551974569368, rel=1e-9)
    assert rep.ball_area_ratio <= 0.073
    assert rep.measured_mass >= 0.999


def test_experiment_mass_one_beyond_circumradius():
    lat = build_lattice(0.5)
    rep = qbic_blowup_experiment(lat, k=3, epsilon=CIRCUMRADIUS * 1.05,
                                 sample_count=500, seed=9)
    assert rep.measured_mass == 1.0


def test_experiment_mass_monotone_in_k():
    lat = build_lattice(0.1)
    eps = 0.05
    masses = {}
    for k in (100, 1000, 10_000):
        rep = qbic_blowup_experiment(lat, k=k, epsilon=eps, sample_count=1500, seed=10)
        masses[k] = rep.measured_mass
        se = rep.measured_stderr
        assert rep.measured_mass >= rep.mass_lower_bound - 3 * max(se, 1e-6)
    assert masses[100] <= masses[1000] + 0.03
    assert masses[1000] <= masses[10_000] + 0.03


def test_experiment_determinism():
    lat = build_lattice(0.2)
    a = qbic_blowup_experiment(lat, k=50, epsilon=0.2, sample_count=400, seed=11)
    b = qbic_blowup_experiment(lat, k=50, epsilon=0.2, sample_count=400, seed=11)
    assert a.record() == b.record()
