"""Replace-the-distance pipeline: exactness, audits, false-hit accounting."""

import numpy as np
import pytest

from metricsearch.index import BuildConfig, build_vp_tree
from metricsearch.metrics import CallableMeasure, EuclideanDistance
from metricsearch.prefilter import (
    ApproxMeasure,
    ModulusAuditError,
    RadiusModulus,
    exact_as_approx,
    false_hit_profile,
    filtered_range_query,
    project_measure,
)
from metricsearch.workloads import Workload, uniform_cube_workload

from oracles import linear_range


def test_full_projection_equals_base():
    base = EuclideanDistance(3)
    approx = project_measure(base, [0, 1, 2])
    rng = np.random.default_rng(1)
    for _ in range(100):
        x, y = (tuple(p) for p in rng.normal(size=(2, 3)))
        assert approx.fast.distance(x, y) == pytest.approx(base.distance(x, y))


def test_projection_contraction_high_dimension():
    base = EuclideanDistance(20)
    approx = project_measure(base, [4])
    rng = np.random.default_rng(2)
    xs = rng.uniform(size=(10_000, 20))
    ys = rng.uniform(size=(10_000, 20))
    for x, y in zip(xs[:200], ys[:200]):
        assert approx.fast.distance(tuple(x), tuple(y)) <= base.distance(tuple(x), tuple(y))
    # vectorized over the full sample
    d_fast = np.abs(xs[:, 4] - ys[:, 4])
    d_full = np.sqrt(((xs - ys) ** 2).sum(1))
    assert (d_fast <= d_full + 1e-12).all()


def test_exact_approx_has_zero_false_hits():
    w = uniform_cube_workload(2, 80, seed=3)
    approx = exact_as_approx(w.measure)
    q = (0.4, 0.6)
    ids, stats = filtered_range_query(w, approx, q, 0.3)
    assert ids.tolist() == linear_range(w.dataset, w.measure, q, 0.3)
    assert stats.false_hits == 0
    assert stats.candidates == stats.verified_hits


def test_filtered_query_exactness_randomized():
    w = uniform_cube_workload(6, 150, seed=4)
    approx = project_measure(w.measure, [0, 3])
    rng = np.random.default_rng(5)
    for q in w.sample_queries(rng, 30):
        eps = float(rng.uniform(0.1, 0.8))
        ids, stats = filtered_range_query(w, approx, q, eps)
        assert ids.tolist() == linear_range(w.dataset, w.measure, q, eps)
        assert stats.candidates == stats.verified_hits + stats.false_hits


def test_filtered_query_through_index():
    w = uniform_cube_workload(4, 120, seed=6)
    approx = project_measure(w.measure, [1, 2])
    fast_workload = Workload(approx.fast, w.dataset, w.query_sampler)
    fast_tree = build_vp_tree(fast_workload, BuildConfig(leaf_capacity=4))
    rng = np.random.default_rng(7)
    for q in w.sample_queries(rng, 15):
        eps = float(rng.uniform(0.2, 0.6))
        ids_l, st_l = filtered_range_query(w, approx, q, eps)
        ids_i, st_i = filtered_range_query(w, approx, q, eps, approx_index=fast_tree)
        assert ids_l.tolist() == ids_i.tolist()
        assert st_i.candidate_source == "index"
        assert st_l.candidate_source == "linear"
        assert st_i.candidates == st_l.candidates  # same delta-ball either way


def test_unsound_modulus_refused_with_witness():
    w = uniform_cube_workload(2, 50, seed=8)
    doubled = CallableMeasure(lambda x, y: 2.0 * np.hypot(x[0] - y[0], x[1] - y[1]),
                              kind="doubled")
    bogus = ApproxMeasure(doubled, RadiusModulus(1.0, 0.0))  # claims d <= rho
    audit = bogus.audit(w, n_pairs=500)
    assert not audit.passed and audit.witness is not None
    with pytest.raises(ModulusAuditError):
        filtered_range_query(w, bogus, (0.5, 0.5), 0.3)


def test_affine_modulus_with_slack_passes():
    w = uniform_cube_workload(2, 50, seed=9)
    doubled = CallableMeasure(lambda x, y: 2.0 * np.hypot(x[0] - y[0], x[1] - y[1]),
                              kind="doubled")
    honest = ApproxMeasure(doubled, RadiusModulus(2.0, 0.0))  # d <= 2*rho: true
    assert honest.audit(w, n_pairs=500).passed
    q = (0.5, 0.5)
    ids, _ = filtered_range_query(w, honest, q, 0.3)
    assert ids.tolist() == linear_range(w.dataset, w.measure, q, 0.3)


def test_false_hit_rate_grows_with_dimension():
    eps = 0.25
    rates = {}
    for dim in (2, 20):
        w = uniform_cube_workload(dim, 400, seed=10)
        approx = project_measure(w.measure, [0])
        profile = false_hit_profile(w, approx, eps, query_count=40, seed=11)
        rates[dim] = profile.rates.mean()
    assert rates[20] > rates[2]


def test_profile_determinism_and_records():
    w = uniform_cube_workload(5, 100, seed=12)
    approx = project_measure(w.measure, [2])
    p1 = false_hit_profile(w, approx, 0.3, query_count=20, seed=13)
    p2 = false_hit_profile(w, approx, 0.3, query_count=20, seed=13)
    assert np.array_equal(p1.rates, p2.rates)
    assert p1.worst_query_index == p2.worst_query_index
    for rec in p1.records:
        assert set(rec) == {"query_id", "epsilon", "delta", "candidates",
                            "false_hits", "rate"}
        assert 0.0 <= rec["rate"] <= 1.0


def test_exact_approx_profile_all_zero():
    w = uniform_cube_workload(3, 60, seed=14)
    profile = false_hit_profile(w, exact_as_approx(w.measure), 0.4,
                                query_count=15, seed=15)
    assert profile.worst_rate == 0.0


def test_single_point_dataset_rates_degenerate():
    w = Workload(EuclideanDistance(1), [(0.0,)],
                 lambda rng, n: [(float(rng.uniform(-1, 1)),) for _ in range(n)])
    approx = exact_as_approx(w.measure)
    profile = false_hit_profile(w, approx, 0.5, query_count=10, seed=16)
    assert set(np.unique(profile.rates)) <= {0.0, 1.0}


def test_high_dimensional_slab_blowup():
    # 1-coordinate projection of the 20-cube at eps = 0.1.  With the
    # contraction modulus the candidate slab has width 0.2 and captures
    # about a fifth of the points, essentially all of them false hits; a
    # modulus that compensates the sqrt(20) scale gap between one coordinate
    # and the full metric widens the slab to more than half the cube.
    w = uniform_cube_workload(20, 2000, seed=17)
    approx = project_measure(w.measure, [0])
    centre = tuple([0.5] * 20)
    _, stats = filtered_range_query(w, approx, centre, 0.1)
    frac = stats.candidates / len(w.dataset)
    assert 0.1 <= frac <= 0.3
    assert stats.false_hits == stats.candidates  # radius-0.1 ball is empty here

    wide = ApproxMeasure(approx.fast, RadiusModulus(np.sqrt(20.0), 0.0))
    assert wide.audit(w, n_pairs=500).passed
    _, stats_wide = filtered_range_query(w, wide, centre, 0.1)
    assert stats_wide.candidates / len(w.dataset) >= 0.5
