from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glauberlearn.lowerbound import (
    _clique_pair,
    build_ensemble,
    ensemble_size,
    exact_C1,
    exact_Cl,
    fano_bound,
    fano_risk,
    flip_prob_max,
    kl_bound,
    kl_reports,
    kl_total,
    magnetization_tail,
    path_space_kl,
    theorem2_T,
    update_kl,
    update_log_ratio_max,
)


def test_ensemble_size_examples():
    assert ensemble_size(100, 3) == 50
    assert ensemble_size(9, 3) == 4
    assert build_ensemble(9, 3, 0.5, 1.0).M == 4


def test_ensemble_structure():
    e = build_ensemble(9, 3, 0.5, 1.0)
    assert e.cliques == ((0, 1, 2, 3), (4, 5, 6, 7))
    assert e.base.graph.degree(8) == 0
    assert e.base.graph.max_degree == 3
    removed = {(v.u, v.v) for v in e.variants}
    for i, j in e.base.graph.edges:
        assert e.base.theta(i, j) == (0.5 if (i, j) in removed else 1.0)
    for v in e.variants:
        assert set(e.base.graph.edges) - set(v.model.graph.edges) == {(v.u, v.v)}
        assert len(v.model.graph.edges) == len(e.base.graph.edges) - 1


@pytest.mark.parametrize("p,d,a,b", [(10, 2, 0.5, 1.0), (3, 3, 0.5, 1.0), (8, 3, 1.0, 0.5), (8, 3, 0.0, 1.0)])
def test_ensemble_rejects_bad_arguments(p, d, a, b):
    with pytest.raises(ValueError):
        build_ensemble(p, d, a, b)


def test_C1_examples():
    e = build_ensemble(4, 3, 0.5, 0.5)
    assert exact_C1(e.base, e.base) == 0.0
    c1 = exact_C1(e.base, e.variants[0].model)
    assert 0 < c1 <= 4 * 0.5
    assert c1 == pytest.approx(0.07768892045513237, rel=1e-12)


def test_Cl_of_base_is_zero():
    e = build_ensemble(4, 3, 0.5, 1.0)
    assert exact_Cl(e.base, e.base, 4) == 0.0


def test_endpoints_symmetric():
    e = build_ensemble(9, 3, 0.5, 1.0)
    for v in e.variants:
        assert update_kl(e.base, v.model, "u") == pytest.approx(update_kl(e.base, v.model, "v"), rel=1e-12)
    with pytest.raises(ValueError):
        update_kl(e.base, e.variants[0].model, "w")


def test_variant_must_remove_one_edge():
    e = build_ensemble(8, 3, 0.5, 1.0)
    with pytest.raises(ValueError):
        exact_C1(e.variants[0].model, e.variants[1].model)


def test_Cl_chain_bound():
    e = build_ensemble(4, 3, 0.2, 2.0)
    v = e.variants[0].model
    _, w, _, _ = _clique_pair(e.base, v)
    mag, _ = magnetization_tail(w)
    cl = exact_Cl(e.base, v, 4)
    assert 0 < cl <= 2 / 4 * (9 * 0.2 * math.exp(-2 * 2.0 * 3 / 3) + 2 * 0.2 * mag)
    assert update_log_ratio_max(e.base, v) <= 2 * 0.2 + 1e-15
    flip, bound = flip_prob_max(e.base, v)
    assert flip <= bound


def test_kl_total_and_bound_examples():
    assert kl_total(0.1, 0.01, 1) == 0.1
    assert kl_total(0.1, 0.01, 11) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        kl_total(0.1, 0.01, 0)
    assert kl_bound(1, 1, 1, 1, 3) == pytest.approx(4 + 54 * math.exp(3) * math.exp(-2), rel=1e-14)
    assert kl_bound(1, 1, 1, 1, 3) == pytest.approx(150.787, abs=1e-3)


@pytest.mark.parametrize("d,a,b", [(3, 0.1, 1.0), (3, 0.5, 2.0), (3, 0.5, 0.5)])
@pytest.mark.parametrize("n_over_p", [1, 10, 100])
def test_reports_dominated(d, a, b, n_over_p):
    e = build_ensemble(2 * (d + 1), d, a, b)
    for r in kl_reports(e, n_over_p * e.p):
        assert 0 <= r.total <= r.bound and r.margin >= 0


def test_path_space_matches_decomposition():
    e = build_ensemble(4, 3, 0.5, 1.0)
    v = e.variants[0].model
    c1, cl = exact_C1(e.base, v), exact_Cl(e.base, v, 4)
    for n in (1, 2, 3):
        assert path_space_kl(e.base, v, n) == pytest.approx(kl_total(c1, cl, n), rel=1e-10, abs=1e-14)
    with pytest.raises(ValueError):
        path_space_kl(e.base, v, 5)


def test_magnetization_examples():
    exact, bound = magnetization_tail(build_ensemble(4, 3, 1.0, 1.0).base)
    assert bound == pytest.approx(3 * (3 * math.e) ** 2, rel=1e-14)
    assert bound == pytest.approx(199.5045, abs=1e-4)
    assert exact <= bound
    exact, bound = magnetization_tail(build_ensemble(10, 9, 1.0, 1.0).base)
    assert bound == pytest.approx(6.0618e-4, rel=1e-4)
    assert exact <= bound
    exact, bound = magnetization_tail(build_ensemble(10, 9, 5.0, 5.0).base)
    assert exact <= bound < 1e-30


def test_fano_examples():
    assert fano_risk(1 / 16, 100) == pytest.approx(0.7225134, abs=1e-7)
    M = 10**6
    f = fano_bound([0.124 * (M + 1) * math.log(M) / M] * M, M)
    assert f.applicable and f.gamma == pytest.approx(0.124)
    f = fano_bound([1.0] * 10, 10)
    assert not f.applicable and math.isnan(f.risk_bound)
    with pytest.raises(ValueError):
        fano_bound([0.1], 1)
    with pytest.raises(ValueError):
        fano_bound([0.1, 0.2], 3)


def test_theorem2_T_example():
    assert theorem2_T(1000, 3, 1.0, 1.0) == pytest.approx(0.0039537, rel=1e-4)
    with pytest.raises(ValueError):
        theorem2_T(1, 3, 1.0, 1.0)


@given(st.integers(2, 10**6), st.integers(1, 12), st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_theorem2_T_monotone(p, d, a, b):
    t = theorem2_T(p, d, a, b)
    assert t > 0
    assert theorem2_T(p + 1, d, a, b) > t
    assert theorem2_T(p, d, a, b * 1.1) > t
    assert theorem2_T(p, d, a * 1.1, b) < t


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(1.0, 3.0))
def test_divergences_nonnegative(a, b):
    e = build_ensemble(4, 3, a, b)
    for v in e.variants:
        assert exact_C1(e.base, v.model) >= 0
        assert exact_Cl(e.base, v.model, 4) >= 0
