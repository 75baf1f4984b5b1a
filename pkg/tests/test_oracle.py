from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glauberlearn.dynamics import CONTINUOUS, RngSeed, Trace
from glauberlearn.learner import edge_signal_lower_bound, nonedge_bias_bound, window_event_prob
from glauberlearn.model import make_model, min_update_prob
from glauberlearn.oracle import (
    MAX_ENUM_NODES,
    all_configs,
    conditional_bounds_hold,
    conditionals_from_table,
    config_index,
    detailed_balance_residual,
    edge_identity_residual,
    event_D,
    exact_conditionals,
    exact_gibbs,
    independence_AD_check,
    lemma1_check,
    ratio_bracket_violations,
    envelope_check,
    mc_expected_statistic,
    neighborhood_assignments,
    squeeze_check,
    squeeze_terms,
    stationarity_tv,
)


def _star(theta_list):
    return make_model(len(theta_list) + 1, {(0, k + 1): t for k, t in enumerate(theta_list)},
                      min(abs(t) for t in theta_list), max(abs(t) for t in theta_list))


random_models = st.integers(2, 7).flatmap(
    lambda p: st.tuples(
        st.just(p),
        st.dictionaries(
            st.tuples(st.integers(0, p - 1), st.integers(0, p - 1)).filter(lambda e: e[0] < e[1]),
            st.floats(0.1, 1.5).flatmap(lambda v: st.sampled_from([v, -v])),
            max_size=p * (p - 1) // 2,
        ),
    )
).map(lambda pc: make_model(pc[0], pc[1], 0.1, 1.5))


def test_config_indexing():
    S = all_configs(3)
    assert S.shape == (8, 3)
    for k, row in enumerate(S):
        assert config_index(row) == k


def test_gibbs_free_spin():
    d = exact_gibbs(make_model(1, {}, 1.0, 1.0))
    assert d.probabilities.tolist() == [0.5, 0.5]


def test_gibbs_two_spins():
    d = exact_gibbs(make_model(2, {(0, 1): 0.5}, 0.5, 0.5))
    e = math.exp(0.5)
    Z = 2 * e + 2 / e
    assert d.Z == pytest.approx(Z, rel=1e-14)
    assert d.Z == pytest.approx(4.510504, abs=1e-6)
    assert d.prob([1, 1]) == pytest.approx(e / Z, rel=1e-14)
    assert d.prob([1, 1]) == pytest.approx(0.365529, abs=1e-6)
    assert d.prob([1, -1]) == pytest.approx(0.134471, abs=1e-6)


def test_gibbs_size_guard():
    with pytest.raises(ValueError):
        exact_gibbs(make_model(MAX_ENUM_NODES + 1, {}, 1.0, 1.0))


@settings(max_examples=40, deadline=None)
@given(random_models)
def test_gibbs_normalized_and_flip_symmetric(m):
    pr = exact_gibbs(m).probabilities
    assert np.all(pr > 0)
    assert abs(pr.sum() - 1) < 1e-12
    # bit complement is index reversal
    assert np.array_equal(pr, pr[::-1]) or np.max(np.abs(pr - pr[::-1])) < 1e-15


def test_sampling_matches_table():
    m = make_model(3, {(0, 1): 0.8, (1, 2): -0.4}, 0.4, 0.8)
    d = exact_gibbs(m)
    s = d.sample(200_000, np.random.default_rng(0))
    idx = ((s > 0).astype(int) << np.arange(3)).sum(axis=1)
    emp = np.bincount(idx, minlength=8) / len(idx)
    assert 0.5 * np.abs(emp - d.probabilities).sum() < 0.01


def test_conditionals_examples():
    m = make_model(2, {(0, 1): 0.5}, 0.5, 0.5)
    c = exact_conditionals(m, 0, 1, {})
    assert c.p_plus == pytest.approx(0.7310586, abs=5e-8)
    assert c.p_minus == pytest.approx(0.2689414, abs=5e-8)
    m = make_model(3, {(0, 1): 0.5}, 0.5, 0.5)
    c = exact_conditionals(m, 0, 2, {1: 1})
    assert c.p_plus == c.p_minus


def test_conditionals_need_full_assignment():
    m = _star([0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        exact_conditionals(m, 0, 1, {2: 1})
    with pytest.raises(ValueError):
        exact_conditionals(m, 0, 0, {1: 1})


def test_identity_examples():
    m = make_model(3, {(0, 1): 0.5}, 0.5, 0.5)
    assert edge_identity_residual(m, 0, 2, {1: 1}) == 0.0
    assert edge_identity_residual(m, 0, 1, {}) < 1e-12
    c = exact_conditionals(m, 0, 1, {})
    ratio = c.p_plus * (1 - c.p_minus) / (c.p_minus * (1 - c.p_plus))
    assert ratio == pytest.approx(7.389056, abs=1e-6)
    m = make_model(3, {(0, 1): -0.3, (0, 2): 0.7}, 0.3, 0.7)
    for x in neighborhood_assignments(m, 0, 1):
        assert edge_identity_residual(m, 0, 1, x) < 1e-10


@settings(max_examples=30, deadline=None)
@given(random_models)
def test_identity_and_table_agree_everywhere(m):
    d = exact_gibbs(m)
    for i, j in itertools.permutations(range(m.p), 2):
        for x in neighborhood_assignments(m, i, j):
            assert edge_identity_residual(m, i, j, x) < 1e-10
            c = exact_conditionals(m, i, j, x)
            pp, pm = conditionals_from_table(d, m, i, j, x)
            assert abs(c.p_plus - pp) < 1e-12 and abs(c.p_minus - pm) < 1e-12


@settings(max_examples=30, deadline=None)
@given(random_models)
def test_conditionals_respect_floor(m):
    assert conditional_bounds_hold(m)
    floor = min_update_prob(m.bounds.beta, m.bounds.d)
    for i, j in itertools.permutations(range(m.p), 2):
        for x in neighborhood_assignments(m, i, j):
            c = exact_conditionals(m, i, j, x)
            assert floor <= min(c.p_plus, c.p_minus) and max(c.p_plus, c.p_minus) <= 1 - floor


def test_ratio_bracket_examples():
    r = lemma1_check(0.3, 0.3)
    assert (r.lower, r.middle, r.upper, r.holds) == (0.0, pytest.approx(0.0, abs=1e-15), 0.0, True)
    r = lemma1_check(0.25, 0.5)
    assert (r.lower, r.middle, r.upper) == (pytest.approx(0.25), pytest.approx(2.0), pytest.approx(4.0))
    assert r.holds
    with pytest.raises(ValueError):
        lemma1_check(0.6, 0.7)
    with pytest.raises(ValueError):
        lemma1_check(0.4, 0.3)


def test_ratio_bracket_grid():
    bad, n = ratio_bracket_violations(1e-3)
    assert bad == 0 and n == 374_750


@given(st.floats(1e-3, 0.5), st.floats(0.0, 1.0))
def test_ratio_bracket_off_grid(a, frac):
    b = a + frac * (0.999 - a)
    assert lemma1_check(a, b).holds


def test_squeeze_examples():
    m = make_model(2, {(0, 1): 0.5}, 0.5, 0.5)
    lo, mid, hi = squeeze_terms(m, 0, 1, {})
    assert lo < mid < hi
    m = make_model(2, {(0, 1): -0.5}, 0.5, 0.5)
    c = exact_conditionals(m, 0, 1, {})
    assert c.p_plus < c.p_minus
    assert squeeze_check(m, 0, 1, {})
    with pytest.raises(ValueError):
        squeeze_terms(make_model(3, {(0, 1): 0.5}, 0.5, 0.5), 0, 2, {1: 1})


@pytest.mark.parametrize("theta", [0.3, -0.3, 0.8, -0.8])
def test_squeeze_on_star(theta):
    m = _star([theta, 0.5, -0.8])
    for a, b in ((0, 1), (1, 0)):
        for x in neighborhood_assignments(m, a, b):
            assert squeeze_check(m, a, b, x)


@settings(max_examples=30, deadline=None)
@given(random_models)
def test_detailed_balance_exact(m):
    if m.p <= 6:
        assert detailed_balance_residual(m) < 1e-12


def test_stationarity_from_gibbs_start():
    m = make_model(4, {(0, 1): 0.9, (1, 2): -0.6, (2, 3): 1.1, (0, 3): 0.4}, 0.4, 1.1)
    assert stationarity_tv(m, 2.0, 100_000, RngSeed(3)) <= 0.02


def test_mc_statistic_needs_reps():
    m = make_model(2, {(0, 1): 1.0}, 1.0, 1.0)
    with pytest.raises(ValueError):
        mc_expected_statistic(m, [1, 1], 0, 1, 1.0, 999, 0)


def test_mc_null_pair_centered():
    m = make_model(2, {}, 1.0, 1.0)
    inside = 0
    for s in range(100):
        mean, se = mc_expected_statistic(m, [1, -1], 0, 1, 1.0, 20_000, RngSeed(s))
        inside += abs(mean) <= 3 * se
    assert inside >= 97


@pytest.mark.slow
def test_mc_edge_pair_exceeds_bound():
    m = make_model(2, {(0, 1): 1.0}, 1.0, 1.0)
    r = envelope_check(m, [1, 1], 0, 1, 1.0, 1_000_000, RngSeed(8))
    assert r.edge and r.mean > 0 and r.holds
    assert r.bound == edge_signal_lower_bound(1.0, 1.0, 1, 1.0, 0.25)
    assert r.bound_strict == edge_signal_lower_bound(1.0, 1.0, 1, 1.0, 1 / 16)


@pytest.mark.slow
def test_mc_star_leaf_pair_within_bias_bound():
    m = _star([1.0, 1.0, 1.0, 1.0])
    r = envelope_check(m, np.ones(5), 1, 2, 0.1, 1_000_000, RngSeed(9))
    assert not r.edge and r.holds
    assert r.bound == pytest.approx(2 * window_event_prob(0.1) * 0.1 * 4)
    assert r.bound == nonedge_bias_bound(0.1, 4)


def test_event_D_on_hand_trace():
    m = _star([0.5, 0.5, 0.5])
    tr = Trace(4, CONTINUOUS, [1] * 4, [0.2, 0.5, 1.5], [1, 2, 3], [1, 1, 1], 2.0)
    # window 1 = [0, 1) sees nodes 1 and 2 update, window 2 = [1, 2) sees node 3
    assert event_D(tr, m.graph, 0, 1, 1, 1.0) is False
    assert event_D(tr, m.graph, 0, 3, 1, 1.0) is False
    assert event_D(tr, m.graph, 0, 3, 2, 1.0) is True
    assert event_D(tr, m.graph, 0, 1, 2, 1.0) is False
    assert event_D(tr, m.graph, 1, 0, 1, 1.0) is True


def test_A_and_D_independent():
    m = _star([0.7, -0.7, 0.7, -0.7])
    assert independence_AD_check(m, 0, 1, 1.0, 200_000, RngSeed(2))
    with pytest.raises(ValueError):
        independence_AD_check(m, 0, 1, 1.0, 100, RngSeed(2))
