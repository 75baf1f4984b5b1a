from __future__ import annotations

import json

import pytest

from glauberlearn.experiments import (
    ExperimentConfig,
    ExperimentResult,
    TrialResult,
    benchmark_csv,
    build_model,
    read_config,
    resolve_params,
    run_recovery_experiment,
    run_scaling_benchmark,
    write_experiment,
)


def _cfg(**kw):
    base = dict(graph="cycle", p=6, theta=0.8, L=1.0, T=200.0, trials=3, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_file_and_coercion(tmp_path):
    f = tmp_path / "exp.cfg"
    f.write_text("# recovery run\ngraph = cycle\np = 8   # nodes\ntheta=0.8\nL = 1\nT = 2e4\ntau = clt\nsymmetrize = yes\nseed = 3\n")
    cfg = ExperimentConfig.from_mapping(read_config(f))
    assert (cfg.p, cfg.theta, cfg.T, cfg.tau, cfg.symmetrize, cfg.seed) == (8, 0.8, 2e4, "clt", True, 3)
    assert ExperimentConfig.from_mapping({"tau": "0.01", "seed": "1"}).tau == 0.01
    f.write_text("graph cycle\n")
    with pytest.raises(ValueError):
        read_config(f)
    with pytest.raises(ValueError):
        ExperimentConfig.from_mapping({"colour": "red", "seed": "1"})
    with pytest.raises(ValueError):
        ExperimentConfig.from_mapping({"symmetrize": "maybe", "seed": "1"})


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig()  # seed is required
    with pytest.raises(ValueError):
        _cfg(graph="file")
    with pytest.raises(ValueError):
        _cfg(init="minus")
    with pytest.raises(ValueError):
        _cfg(trials=0)
    with pytest.raises(ValueError):
        resolve_params(_cfg(L=None), build_model(_cfg()))


def test_build_model_degree_check():
    assert build_model(_cfg()).bounds.d == 2
    with pytest.raises(ValueError):
        build_model(_cfg(d=1))


def test_theory_mode_resolves_to_theory_params():
    cfg = _cfg(mode="theory", L=None, T=None, d=2, alpha=0.8, beta=0.8)
    params = resolve_params(cfg, build_model(cfg))
    assert params.T > 1e20
    with pytest.raises(ValueError):
        run_recovery_experiment(cfg)


def test_success_rate_definition():
    r = ExperimentResult(
        _cfg(), None, frozenset(),
        (TrialResult(0, True, 0, 0, 1, 0.0), TrialResult(1, False, 1, 0, 1, 0.0), TrialResult(2, False, 0, 2, 1, 0.0)),
    )
    assert r.successes == 1 and r.success_rate == pytest.approx(1 / 3)


def test_empty_graph_recovered():
    res = run_recovery_experiment(_cfg(graph="empty", T=500.0, trials=5))
    assert res.true_edges == frozenset()
    assert res.success_rate == 1.0


def test_trial_outcomes_are_consistent():
    res = run_recovery_experiment(_cfg())
    for t in res.trials:
        assert t.recovered == (t.false_pos == 0 and t.false_neg == 0)
        assert t.false_neg <= 6 and t.n_events > 0


def test_outputs_byte_deterministic(tmp_path):
    a = write_experiment(run_recovery_experiment(_cfg()), tmp_path / "a")
    b = write_experiment(run_recovery_experiment(_cfg()), tmp_path / "b")
    for key in ("results", "manifest"):
        assert a[key].read_bytes() == b[key].read_bytes()
    text = a["results"].read_text()
    assert "# seed=5" in text and "# q=" in text and "# k_max=200" in text
    man = json.loads(a["manifest"].read_text())
    assert man["config"]["seed"] == 5 and man["derived"]["k_max"] == 200
    assert man["trials"] == 3 and set(man["versions"]) >= {"numpy", "python"}
    assert len(man["true_edges"]) == 6
    assert "seconds" in a["timing"].read_text()


def test_different_seed_changes_events():
    a = run_recovery_experiment(_cfg())
    b = run_recovery_experiment(_cfg(seed=6))
    assert [t.n_events for t in a.trials] != [t.n_events for t in b.trials]


def test_small_benchmark():
    res = run_scaling_benchmark([10, 20], 50.0, seed=0, repeats=1)
    assert [r.p for r in res.rows] == [10, 20]
    assert all(r.k_max == 50 and r.learn_seconds > 0 for r in res.rows)
    assert "exponent=" in benchmark_csv(res)
    with pytest.raises(ValueError):
        run_scaling_benchmark([20, 10], 50.0, seed=0)
    with pytest.raises(ValueError):
        run_scaling_benchmark([10], 50.0, seed=0)
