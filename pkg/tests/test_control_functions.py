import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmfix.control_functions import (
    ControlPair, eval_pair, example22, halving_pair, integral_compose, linear,
    relation_violations, verify_pair,
)
from pmfix.errors import NegativeInputError

GRID = np.concatenate([[0.0, 1e-6], np.arange(1, 3001) * 1e-3])


def test_example22_values():
    assert eval_pair(example22, 1 / 3) == (1.0, pytest.approx(1 / 9))
    psi, phi = eval_pair(example22, 2)
    assert psi == 2 and phi == pytest.approx(1 / 9)
    assert eval_pair(example22, 0.5) == (1.0, pytest.approx(1 / 9))
    assert eval_pair(example22, 0.1) == (pytest.approx(0.3), pytest.approx(0.1 / 3))


@pytest.mark.parametrize("cp", [example22, linear(0.5), halving_pair()])
def test_zero_at_zero(cp):
    assert eval_pair(cp, 0) == (0.0, 0.0)


def test_negative_input_rejected():
    with pytest.raises(NegativeInputError):
        eval_pair(example22, -0.1)


def test_linear_bounds():
    with pytest.raises(ValueError):
        linear(1.0)


@pytest.mark.parametrize("cp", [example22, linear(1 / 3), halving_pair()])
def test_bundled_pairs_verify(cp):
    rep = verify_pair(cp, GRID)
    assert rep.ok, rep.to_dict()
    assert rep.grid_size == len(GRID)
    assert rep.declared["phi_lsc"] is True


def test_broken_pair_flagged():
    bad = ControlPair("broken", lambda t: -np.asarray(t, float), lambda t: 0.5 * np.asarray(t, float))
    rep = verify_pair(bad, GRID)
    assert rep.monotonicity_violations > 0
    assert rep.positivity_violations > 0


def test_verify_pair_grid_contract():
    with pytest.raises(ValueError):
        verify_pair(example22, [0.1, 0.2])
    with pytest.raises(ValueError):
        verify_pair(example22, [0.0, 0.2, 0.1])


def test_lsc_probe_at_jump():
    # phi dropping just right of 1/3 violates lower semicontinuity
    def phi(t):
        t = np.asarray(t, float)
        return np.where(t <= 1 / 3, t / 3, 1 / 90)

    bad = ControlPair("dip", lambda t: np.asarray(t, float), phi, jump_points=(1 / 3,))
    assert verify_pair(bad, GRID).lsc_jump_violations == 1
    assert verify_pair(example22, GRID).lsc_jump_violations == 0


def test_integral_compose_unit_density():
    cp = integral_compose(linear(0.5), lambda s: np.ones_like(s), 64)
    t = np.linspace(0, 3, 101)
    np.testing.assert_allclose(cp.psi(t), t, atol=1e-12)
    np.testing.assert_allclose(cp.phi(t), 0.5 * t, atol=1e-12)


def test_integral_compose_linear_density_matches_square():
    ident = ControlPair("id", lambda t: np.asarray(t, float) * 1.0, lambda t: 0.5 * np.asarray(t, float))
    cp = integral_compose(ident, lambda s: 2 * s, 64)
    t = np.linspace(0, 2, 100)
    np.testing.assert_allclose(cp.psi(t), t ** 2, atol=1e-8)


def test_integral_compose_zero_and_errors():
    cp = integral_compose(example22, lambda s: np.exp(s), 32)
    assert eval_pair(cp, 0.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        integral_compose(example22, lambda s: s, 8)
    neg = integral_compose(linear(0.5), lambda s: s - 1.0, 32)
    with pytest.raises(NegativeInputError):
        neg.psi(np.array([2.0]))


def test_integral_compose_keeps_pair_admissible():
    cp = integral_compose(example22, lambda s: 1 + s * s, 64)
    assert verify_pair(cp, GRID).ok


@given(st.floats(0, 50), st.floats(0, 50))
def test_integral_compose_psi_monotone(a, b):
    cp = integral_compose(example22, lambda s: np.exp(-s), 64)
    lo, hi = sorted((a, b))
    assert cp.psi(np.array(lo)) <= cp.psi(np.array(hi)) + 1e-15


def test_relation_condition():
    a = np.linspace(0, 10, 1001)
    assert relation_violations(halving_pair(), a) == 0
    # psi(t) = t, phi(t) = 2t: a + 4a <= 2a fails for every a > 0
    bad = ControlPair("bad", lambda t: np.asarray(t, float) * 1.0, lambda t: 2 * np.asarray(t, float))
    assert relation_violations(bad, a) == 1000
