import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmfix.errors import DomainMismatchError
from pmfix.metric_core import (
    PartialMetric, ball_membership, check_axioms, eval_p, grid_functions, induced_ps,
    interval_metric, interval_pairs, max_metric, mixed_metric, nonneg_reals, real_interval,
    sup_pair_metric, unique_rows,
)

nonneg = st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False)
unit2 = st.floats(min_value=0, max_value=2, allow_nan=False)


def test_max_metric_values():
    assert eval_p(max_metric, 3, 5) == 5
    assert eval_p(max_metric, 0, 0) == 0


def test_interval_metric_value():
    # max{3,5} - min{1,2}
    assert eval_p(interval_metric, [1, 3], [2, 5]) == 4


def test_induced_values():
    assert induced_ps(max_metric, 3, 5) == 2  # 2*5 - 3 - 5
    assert induced_ps(mixed_metric(2), 0.2, 0.5) == pytest.approx(0.6, abs=1e-15)
    for m, x in ((max_metric, 7.5), (mixed_metric(2), 1.5), (interval_metric, [0, 1])):
        assert induced_ps(m, x, x) == 0


@pytest.mark.parametrize("m, x, y", [
    (max_metric, -1.0, 2.0),
    (mixed_metric(2), 0.5, 2.5),
    (interval_metric, [3, 1], [0, 1]),
    (max_metric, [1.0, 2.0], 1.0),
])
def test_domain_mismatch(m, x, y):
    with pytest.raises(DomainMismatchError):
        eval_p(m, x, y)


def test_non_finite_point_rejected():
    with pytest.raises(DomainMismatchError):
        eval_p(max_metric, float("nan"), 1.0)


def test_ball_membership():
    assert ball_membership(max_metric, 2, 0.5, 2.3)
    assert not ball_membership(max_metric, 2, 0.5, 3)
    assert ball_membership(mixed_metric(2), 0.4, 1e-9, 0.4)
    with pytest.raises(ValueError):
        ball_membership(max_metric, 2, 0.0, 2)


@pytest.mark.parametrize("m, dom", [
    (max_metric, nonneg_reals(10.0, 1001)),
    (interval_metric, interval_pairs(-5, 5, 60)),
    (mixed_metric(2), real_interval(0, 2, 2001)),
    (sup_pair_metric, grid_functions(21)),
])
def test_bundled_metrics_pass_axioms(m, dom):
    rep = check_axioms(m, dom, 10_000, 42)
    assert rep.ok, rep.to_dict()
    assert set(rep.to_dict()["violations"]) == {"p1", "p2", "p3", "p4", "ps_triangle"}


def test_broken_metric_is_flagged():
    def broken(x, y):
        s = x[..., 0] + y[..., 0]
        return np.where(np.all(x == y, axis=-1), 0.0, s)

    m = PartialMetric("broken", broken, exact=True, dim=1)
    rep = check_axioms(m, real_interval(-1, 1, 201), 1000, 7)
    assert rep.violations["p2"] > 0
    assert not rep.ok


def test_sup_pair_metric_needs_distinct_maxima():
    # two different functions with the same maximum are indistinguishable by p
    t = np.linspace(0, 1, 11)
    a, b = t.copy(), 1 - t
    pa, pb, pab = (eval_p(sup_pair_metric, u, v) for u, v in ((a, a), (b, b), (a, b)))
    assert pa == pb == pab and not np.array_equal(a, b)
    sups = grid_functions(21).sample_grid.max(axis=1)
    assert len(np.unique(sups)) == len(sups)


def test_axiom_report_json_roundtrip():
    import json

    rep = check_axioms(max_metric, nonneg_reals(5, 101), 50, 1)
    d = json.loads(rep.to_json())
    assert d["metric"] == "max_metric" and d["n_triples"] == 50 and d["seed"] == 1
    assert set(d["worst"]) == {"x", "y", "z", "slack"}


def test_check_axioms_is_deterministic():
    a = check_axioms(mixed_metric(2), real_interval(0, 2, 2001), 500, 3).to_dict()
    b = check_axioms(mixed_metric(2), real_interval(0, 2, 2001), 500, 3).to_dict()
    assert a == b


def test_domain_rejects_duplicates_and_out_of_bounds():
    from pmfix.metric_core import DomainDescriptor

    with pytest.raises(ValueError):
        DomainDescriptor("real-interval", 0, 1, np.array([[0.5], [0.5]]))
    with pytest.raises(ValueError):
        DomainDescriptor("real-interval", 0, 1, np.array([[0.5], [1.5]]))


def test_unique_rows_keeps_first_occurrence_order():
    pts = np.array([[2.0, 1.0], [0.0, 0.0], [2.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    np.testing.assert_array_equal(unique_rows(pts), [[2.0, 1.0], [0.0, 0.0], [1.0, 1.0]])


@given(nonneg, nonneg)
def test_max_metric_induced_is_absolute_difference(x, y):
    # 2 max - x - y rounds differently from |x - y| at large magnitudes
    assert induced_ps(max_metric, x, y) == pytest.approx(abs(x - y), rel=1e-12, abs=1e-9)


@given(unit2, unit2, unit2)
def test_mixed_metric_axioms(x, y, z):
    m = mixed_metric(2)
    p = lambda a, b: eval_p(m, a, b)
    assert p(x, y) == p(y, x)
    assert p(x, x) <= p(x, y)
    assert p(x, z) <= p(x, y) + p(y, z) - p(y, y) + 1e-10
    ps = lambda a, b: induced_ps(m, a, b)
    assert ps(x, z) <= ps(x, y) + ps(y, z) + 1e-10
    assert (ps(x, y) == 0) == (x == y)


@settings(max_examples=50)
@given(st.tuples(nonneg, nonneg).map(sorted), st.tuples(nonneg, nonneg).map(sorted))
def test_interval_metric_symmetric_and_small_self_distance(a, b):
    assert eval_p(interval_metric, a, b) == eval_p(interval_metric, b, a)
    assert eval_p(interval_metric, a, a) <= eval_p(interval_metric, a, b)
