import csv
import io
import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from pmfix.control_functions import linear
from pmfix.errors import DegenerateBoundsError
from pmfix.ifs_fractals import (
    IfsSystem, affine, cantor_line_system, check_family, compute_MT, from_ppm, hutchinson,
    iterate_attractor, merge_points, render_attractor, sierpinski_system, to_ppm,
    verify_ifs_contraction,
)
from pmfix.metric_core import euclidean_metric, mixed_metric
from pmfix.partial_hausdorff import FiniteSet, h_p

SIER = sierpinski_system()


def depth(sys, seed, m):
    A = FiniteSet(seed)
    for _ in range(m):
        A = hutchinson(sys, A)
    return A


def brute_h(A, B):
    D = cdist(A, B)
    return max(D.min(axis=1).max(), D.min(axis=0).max())


def test_hutchinson_examples():
    assert len(hutchinson(SIER, [[0.0, 0.0]])) == 3
    half = IfsSystem((affine([[0.5]], [0.0]),))
    np.testing.assert_array_equal(hutchinson(half, [1.0]).points, [[0.5]])
    twice = IfsSystem((affine([[0.5]], [0.0]), affine([[0.5]], [0.0])))
    A = FiniteSet([0.0, 0.3, 1.0])
    assert len(hutchinson(twice, A)) == len(hutchinson(half, A))


def _greedy(pts, r):
    kept = []
    for p in pts:
        if all(2 * np.linalg.norm(p - q) > r for q in kept):
            kept.append(p)
    return np.array(kept)


def test_merge_points_matches_greedy_oracle():
    rng = np.random.default_rng(5)
    pts = rng.random((300, 2))
    for r in (0.0, 0.02, 0.1):
        got = merge_points(euclidean_metric, pts, r)
        np.testing.assert_array_equal(got, _greedy(pts, r))


def test_merge_points_non_euclidean_metric():
    m = mixed_metric(2)
    pts = np.array([[0.1], [0.105], [0.5], [1.5], [1.6]])
    # p^S(0.1, 0.105) = 0.01; p^S(1.5, 1.6) = 2*1.6 - 1.5 - 1.6 = 0.1
    np.testing.assert_array_equal(merge_points(m, pts, 0.02)[:, 0], [0.1, 0.5, 1.5, 1.6])
    np.testing.assert_array_equal(merge_points(m, pts, 0.11)[:, 0], [0.1, 0.5, 1.5])


def test_fixed_set_converges_at_first_step():
    ident = IfsSystem((affine(np.eye(2), [0, 0]),))
    run = iterate_attractor(ident, [[0.0, 0.0], [1.0, 2.0]])
    assert run.status == "converged" and run.hp_steps == [0.0] and run.n_iters == 1


def test_dyadic_line_matches_enumeration():
    sys = cantor_line_system()
    for m in (3, 6, 9):
        A = depth(sys, [0.0], m)
        ref = np.arange(2 ** m) / 2 ** m
        assert h_p(euclidean_metric, A, ref[:, None]) == 0
        assert np.max(np.diff(np.sort(A.points[:, 0]))) <= 2.0 ** -m


def test_sierpinski_decay_small():
    run = iterate_attractor(SIER, [[0.0, 0.0]], tol=1e-2, merge_radius=0)
    assert run.status == "converged"
    h = run.hp_steps
    assert all(h[i + 1] <= 0.5 * h[i] + 1e-10 for i in range(1, len(h) - 1))
    assert h_p(euclidean_metric, run.final, hutchinson(SIER, run.final)) <= 2e-2
    rows = list(csv.reader(io.StringIO(run.steps_csv())))
    assert rows[0] == ["m", "hp_step", "size"] and len(rows) == run.n_iters + 1


def test_compute_mt_terms_against_enumeration():
    A, B = depth(SIER, [[0.0, 0.0]], 5), depth(SIER, [[0.0, 0.0]], 6)
    TA, TB = depth(SIER, A.points, 1), depth(SIER, B.points, 1)
    T2A = depth(SIER, TA.points, 1)
    a, b, ta, tb, t2a = (S.points for S in (A, B, TA, TB, T2A))
    terms = [brute_h(a, b), brute_h(a, ta), brute_h(b, tb), brute_h(t2a, ta), brute_h(t2a, b),
             brute_h(t2a, tb), (brute_h(a, tb) + brute_h(b, ta)) / 2]
    assert compute_MT(SIER, A, B) == pytest.approx(max(terms), abs=1e-14)


def test_compute_mt_zero_on_fixed_set():
    ident = IfsSystem((affine(np.eye(2), [0, 0]),))
    U = FiniteSet([[0.0, 0.0], [1.0, 0.5]])
    assert compute_MT(ident, U, U) == 0


def _scalar_M(f, x, y):
    # max{p(x,y), p(x,fx), p(y,fy), p(f^2x,y), p(f^2x,fx), p(f^2x,fy), (p(x,fy) + p(y,fx))/2}
    p = lambda u, v: math.sqrt((u[0] - v[0]) ** 2 + (u[1] - v[1]) ** 2)
    fx, fy = f(x), f(y)
    ffx = f(fx)
    return max(p(x, y), p(x, fx), p(y, fy), p(ffx, y), p(ffx, fx), p(ffx, fy), (p(x, fy) + p(y, fx)) / 2)


def test_singleton_reduction_is_exact():
    sys = IfsSystem((affine([[0.5, 0.0], [0.0, 0.5]], [0.25, math.sqrt(3) / 4]),))
    f = lambda v: (0.5 * v[0] + 0.0 * v[1] + 0.25, 0.0 * v[0] + 0.5 * v[1] + math.sqrt(3) / 4)
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, y = rng.random(2), rng.random(2)
        assert compute_MT(sys, [x], [y]) == _scalar_M(f, tuple(x), tuple(y))


def test_plain_contraction_satisfies_set_inequality():
    rng = np.random.default_rng(1)
    pairs = [(rng.random(rng.integers(1, 15))[:, None], rng.random(rng.integers(1, 15))[:, None])
             for _ in range(40)]
    assert verify_ifs_contraction(cantor_line_system(), pairs).violations == 0
    U = FiniteSet(np.arange(8)[:, None] / 8)
    ident = IfsSystem((affine([[1.0]], [0.0]),))
    rep = verify_ifs_contraction(ident, [(U, U)])
    assert rep.violations == 0 and rep.min_slack == 0


def test_expanding_map_violates():
    sys = IfsSystem((affine([[2.0]], [0.0]),), euclidean_metric, linear(0.5))
    # A = {0}, B = {0.1}: H_p(TA, TB) = 0.2 while M_T = 0.2 and the discount halves it
    rep = verify_ifs_contraction(sys, [([[0.0]], [[0.1]])])
    assert rep.violations > 0


def test_family_predicates():
    rng = np.random.default_rng(2)
    x, y = rng.random(10_000), rng.random(10_000)
    pairs = np.stack([x, y], axis=1)
    half = IfsSystem((affine([[0.5]], [0.0]),))
    assert check_family(half, pairs, family="plain-contraction", params={"k": 0.6}, distance="p").ok
    assert check_family(half, pairs, family="exp-F", params={"tau": math.log(2) / 2}).ok
    assert check_family(half, pairs, family="quadratic-F", params={"tau": 0.1}).ok
    ident = IfsSystem((affine([[1.0]], [0.0]),))
    for tau in (0.1, 1.0, 10.0):
        assert check_family(ident, pairs, family="sqrt-F", params={"tau": tau}).violations > 0
        assert check_family(ident, pairs, family="sqrt-F", params={"tau": tau, "power": 2}).violations > 0


def test_family_skips_coinciding_images():
    const = IfsSystem((affine([[0.0]], [0.3]),))
    rep = check_family(const, [[0.1, 0.9]], family="exp-F", params={"tau": 1.0})
    assert rep.per_map[0]["skipped"] == 1 and rep.ok


def test_invalid_systems():
    with pytest.raises(ValueError):
        IfsSystem(())
    with pytest.raises(ValueError):
        IfsSystem((affine([[0.5]], [0]),), family="plain-contraction", family_params={"k": 1.2})
    with pytest.raises(ValueError):
        IfsSystem((affine([[0.5]], [0]),), family="exp-F")


def test_render_singleton_and_degenerate_bounds():
    img = render_attractor(FiniteSet([[0.5, 0.5]]), 16, 16, (0, 1, 0, 1))
    assert img.sum() == 1
    with pytest.raises(DegenerateBoundsError):
        render_attractor(FiniteSet([[0.5, 0.5]]), 0, 16, (0, 1, 0, 1))
    with pytest.raises(DegenerateBoundsError):
        render_attractor(FiniteSet([[0.5, 0.5]]), 16, 16, (1, 1, 0, 1))


def test_render_pixel_count_matches_enumeration():
    m = 9
    A = depth(SIER, [[0.0, 0.0]], m)
    # shift by half a cell so every depth-m point sits inside its own pixel
    h = math.sqrt(3) / 2
    bounds = (-1 / 1024, 1 - 1 / 1024, -h / 1024, h - h / 1024)
    img = render_attractor(A, 512, 512, bounds)
    assert abs(img.sum() - 3 ** m) <= 0.05 * 3 ** m
    # the three corner copies carry equal occupancy
    left, right = img[256:, :256].sum(), img[256:, 256:].sum()
    assert left == right == img[:256].sum()


def test_ppm_roundtrip():
    img = render_attractor(depth(SIER, [[0.0, 0.0]], 4), 40, 30, (0, 1, 0, 0.9))
    data = to_ppm(img)
    assert data.startswith(b"P6\n40 30\n255\n") and len(data) == len(b"P6\n40 30\n255\n") + 40 * 30 * 3
    np.testing.assert_array_equal(from_ppm(data), img)
