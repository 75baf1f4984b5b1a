"""Numerical verification of the model, simulator, oracle and lower-bound identities.

Each check sweeps a fixed battery of small models and reports its worst case
as ``name value bound PASS|FAIL``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from .dynamics import RngSeed, simulate_ct, state_at
from .graphs import assign_couplings, generate_graph
from .learner import window_event_prob
from .lowerbound import (
    build_ensemble,
    ensemble_size,
    exact_C1,
    exact_Cl,
    fano_bound,
    flip_prob_max,
    kl_bound,
    kl_total,
    magnetization_tail,
    path_space_kl,
    project,
    update_log_ratio_max,
)
from .model import Graph, IsingModel, ParamBounds, min_update_prob, read_model
from .oracle import (
    all_configs,
    conditionals_from_table,
    detailed_balance_residual,
    edge_identity_residual,
    exact_conditionals,
    exact_gibbs,
    independence_AD_check,
    ratio_bracket_violations,
    envelope_check,
    neighborhood_assignments,
    squeeze_check,
    stationarity_tv,
    window_monte_carlo,
)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = f"{self.name} {self.value:.6g} {self.bound:.6g} {status}"
        return f"{out}  # {self.note}" if self.note else out


def _model(p: int, couplings: dict, d: int | None = None) -> IsingModel:
    graph = Graph.from_edges(p, couplings)
    mags = [abs(v) for v in couplings.values()] or [1.0]
    return IsingModel(graph, couplings, ParamBounds(min(mags), max(mags), d or max(graph.max_degree, 1)))


def standard_models() -> list[tuple[str, IsingModel]]:
    """Small models (p <= 8) mixing attractive and repulsive couplings."""
    k4 = {(0, 1): 0.3, (0, 2): -0.9, (0, 3): 1.2, (1, 2): 0.6, (1, 3): -0.4, (2, 3): 0.8}
    return [
        ("pair", _model(2, {(0, 1): 0.7})),
        ("path3", _model(3, {(0, 1): 0.5, (1, 2): -1.0})),
        ("star5", _model(5, {(0, k): s for k, s in zip(range(1, 5), (0.5, -0.5, 1.0, -1.0))})),
        ("cycle6", assign_couplings(generate_graph("cycle", 6), 0.8, "random", seed=3)),
        ("k4", _model(4, k4)),
        ("grid2x4", assign_couplings(generate_graph("grid", rows=2, cols=4), 0.6, "random", seed=5)),
        ("empty4", IsingModel(generate_graph("empty", 4), {}, ParamBounds(1.0, 1.0, 1))),
    ]


def envelope_battery() -> list[tuple[str, IsingModel, float, np.ndarray]]:
    """(label, model, L, start) for the window-statistic envelope sweep."""
    shapes = {
        "pair": (2, [(0, 1)]),
        "path3": (3, [(0, 1), (1, 2)]),
        "star5": (5, [(0, k) for k in range(1, 5)]),
    }
    out = []
    for (name, (p, edges)), theta, L in itertools.product(shapes.items(), (0.5, -0.5, 1.0, -1.0), (0.1, 1.0)):
        model = _model(p, {e: theta for e in edges})
        plus = np.ones(p, dtype=np.int8)
        alt = np.array([1 if k % 2 == 0 else -1 for k in range(p)], dtype=np.int8)
        for xname, x in (("plus", plus), ("alt", alt)):
            out.append((f"{name}/theta={theta:+g}/L={L:g}/x={xname}", model, L, x))
    return out


# -- ising-model ----------------------------------------------------------------------


def _fields(model: IsingModel) -> tuple[np.ndarray, np.ndarray]:
    S = all_configs(model.p).astype(float)
    return S, S @ model.dense


def _plus(fields: np.ndarray) -> np.ndarray:
    return np.where(fields >= 0, 1.0 / (1.0 + np.exp(-2.0 * np.abs(fields))), 0.0) + np.where(
        fields < 0, np.exp(-2.0 * np.abs(fields)) / (1.0 + np.exp(-2.0 * np.abs(fields))), 0.0
    )


def check_prob_sum(models) -> Check:
    worst = 0.0
    for _, m in models:
        _, f = _fields(m)
        worst = max(worst, float(np.max(np.abs(_plus(f) + _plus(-f) - 1.0))))
    return Check("prob-sum", worst, 1e-15, worst <= 1e-15)


def check_update_range(models) -> Check:
    """Smallest update probability over every config and node, against 1/2 exp(-2 beta d)."""
    worst = math.inf
    for _, m in models:
        _, f = _fields(m)
        floor = min_update_prob(m.bounds.beta, m.bounds.d)
        lo = float(np.minimum(_plus(f), _plus(-f)).min())
        worst = min(worst, lo - floor)
        for i, j in itertools.permutations(range(m.p), 2):
            for x in neighborhood_assignments(m, i, j):
                c = exact_conditionals(m, i, j, x)
                worst = min(worst, min(c.p_plus, c.p_minus, 1 - c.p_plus, 1 - c.p_minus) - floor)
    return Check("update-range", worst, 0.0, worst >= 0.0, "min update prob minus floor")


def check_markov(models) -> Check:
    """Flipping a non-neighbor of i leaves i's update law unchanged."""
    worst = 0.0
    for _, m in models:
        S, f = _fields(m)
        idx = np.arange(2**m.p)
        P = _plus(f)
        for i, k in itertools.permutations(range(m.p), 2):
            if not m.graph.has_edge(i, k):
                worst = max(worst, float(np.max(np.abs(P[:, i] - P[idx ^ (1 << k), i]))))
    return Check("markov", worst, 0.0, worst == 0.0)


def check_monotone(models) -> Check:
    """P(+1) at i moves with s_j in the direction of sign(theta_ij)."""
    bad = 0
    for _, m in models:
        _, f = _fields(m)
        P = _plus(f)
        idx = np.arange(2**m.p)
        for i, j in m.graph.edges:
            for a, b in ((i, j), (j, i)):
                up = idx[((idx >> b) & 1) == 1]
                diff = P[up, a] - P[up ^ (1 << b), a]
                bad += int(np.sum(np.sign(diff) != np.sign(m.theta(a, b))))
    return Check("monotone", bad, 0, bad == 0, "sign disagreements")


# -- glauber-sim ----------------------------------------------------------------------


def check_determinism(models, seed: int) -> Check:
    m = dict(models)["cycle6"]
    a = simulate_ct(m, np.ones(m.p), 200.0, RngSeed(seed, 0))
    b = simulate_ct(m, np.ones(m.p), 200.0, RngSeed(seed, 0))
    return Check("determinism", float(a != b), 0.0, a == b)


def check_gap_ks(models, seed: int) -> Check:
    """Per-node inter-update gaps against Exponential(1)."""
    m = dict(models)["cycle6"]
    tr = simulate_ct(m, np.ones(m.p), 12_000.0, RngSeed(seed, 1))
    worst = 1.0
    for i in range(m.p):
        gaps = np.diff(tr.node_times(i))
        worst = min(worst, float(stats.kstest(gaps, "expon").pvalue))
    # Bonferroni over the nodes tested
    bound = 1e-3 / m.p
    return Check("gap-ks", worst, bound, worst >= bound, "smallest KS p-value")


def check_replay(models, seed: int) -> Check:
    m = dict(models)["grid2x4"]
    tr = simulate_ct(m, -np.ones(m.p), 50.0, RngSeed(seed, 2))
    state = tr.initial.copy()
    for ev in tr.events():
        state[ev.node] = ev.new_spin
    ok = bool(np.array_equal(state, state_at(tr, tr.horizon)))
    return Check("replay", float(not ok), 0.0, ok)


def check_detailed_balance(models) -> Check:
    worst = max(detailed_balance_residual(m) for _, m in models if m.p <= 6)
    return Check("detailed-balance", worst, 1e-12, worst < 1e-12)


def check_stationarity(models, seed: int, runs: int = 100_000) -> Check:
    worst = 0.0
    for n, (_, m) in enumerate(models):
        if m.p <= 6:
            worst = max(worst, stationarity_tv(m, 1.0, runs, RngSeed(seed, 10 + n)))
    return Check("stationarity", worst, 0.02, worst <= 0.02, f"TV over {runs} runs")


# -- oracle -----------------------------------------------------------------------------


def check_gibbs(models) -> Check:
    worst = 0.0
    for _, m in models:
        pr = exact_gibbs(m).probabilities
        worst = max(worst, abs(pr.sum() - 1.0), float(np.max(np.abs(pr - pr[::-1]))))
    return Check("gibbs", worst, 1e-12, worst <= 1e-12, "|sum - 1| and global-flip asymmetry")


def check_eq5(models) -> Check:
    worst = 0.0
    for _, m in models:
        for i, j in itertools.permutations(range(m.p), 2):
            for x in neighborhood_assignments(m, i, j):
                worst = max(worst, edge_identity_residual(m, i, j, x))
    return Check("eq5", worst, 1e-10, worst < 1e-10)


def check_table(models) -> Check:
    """Closed-form conditionals against marginals of the joint table."""
    worst = 0.0
    for _, m in models:
        dist = exact_gibbs(m)
        for i, j in itertools.permutations(range(m.p), 2):
            for x in neighborhood_assignments(m, i, j):
                c = exact_conditionals(m, i, j, x)
                pp, pm = conditionals_from_table(dist, m, i, j, x)
                worst = max(worst, abs(c.p_plus - pp), abs(c.p_minus - pm))
    return Check("conditionals", worst, 1e-12, worst <= 1e-12)


def check_ratio_bracket() -> Check:
    bad, n = ratio_bracket_violations(1e-3)
    return Check("ratio-bracket", bad, 0, bad == 0, f"{n} grid points")


def check_squeeze(models) -> Check:
    bad = 0
    for _, m in models:
        for i, j in m.graph.edges:
            for a, b in ((i, j), (j, i)):
                bad += sum(not squeeze_check(m, a, b, x) for x in neighborhood_assignments(m, a, b))
    return Check("squeeze", bad, 0, bad == 0, "violations")


def check_window_q(seed: int, k: int = 100_000) -> Check:
    """Frequency of the i-j-i pattern against q, for independent spins."""
    m = IsingModel(generate_graph("empty", 2), {}, ParamBounds(1.0, 1.0, 1))
    worst = -math.inf
    for n, L in enumerate((0.3, 1.0, 3.0)):
        est = window_monte_carlo(m, np.ones(2), [(0, 1)], L, k, RngSeed(seed, 20 + n))[0]
        q = window_event_prob(L)
        worst = max(worst, abs(est.freq_A - q) / (4 * math.sqrt(q / k)))
    return Check("window-q", worst, 1.0, worst <= 1.0, "|freq - q| / (4 sqrt(q/k))")


def check_envelopes(seed: int, reps: int = 200_000) -> Check:
    """Window-statistic envelopes; value is the smallest slack in standard errors."""
    worst, where, n_fail = math.inf, "", 0
    for n, (label, m, L, x) in enumerate(envelope_battery()):
        pairs = list(itertools.permutations(range(m.p), 2))
        ests = window_monte_carlo(m, x, pairs, L, reps, RngSeed(seed, 100 + n))
        for (i, j), est in zip(pairs, ests):
            r = envelope_check(m, x, i, j, L, reps, None, est)
            se = max(r.stderr, 1e-300)
            slack = (math.copysign(1, m.theta(i, j)) * r.mean - r.bound) if r.edge else (r.bound - abs(r.mean))
            slack /= se
            n_fail += not r.holds
            if slack < worst:
                worst, where = slack, f"{label} ({i},{j})"
    return Check("envelopes", worst, -3.0, n_fail == 0, f"worst at {where}")


def check_independence_ad(models, seed: int, reps: int = 100_000) -> Check:
    m = dict(models)["star5"]
    ok = independence_AD_check(m, 0, 1, 1.0, reps, RngSeed(seed, 30))
    return Check("independence-ad", float(not ok), 0.0, ok, "A and D independent (4 se)")


# -- lowerbound --------------------------------------------------------------------------


def kl_battery() -> list[tuple[int, float, float]]:
    return [
        (d, a, b)
        for d in (3, 9)
        for a in (0.1, 0.5)
        for b in sorted({a, 1.0, 2.0})
    ]


def check_kl_dominance() -> tuple[Check, Check]:
    worst_margin, worst_c1 = math.inf, math.inf
    for d, a, b in kl_battery():
        p = 2 * (d + 1)
        ens = build_ensemble(p, d, a, b)
        var = ens.variants[0].model
        c1, cl = exact_C1(ens.base, var), exact_Cl(ens.base, var, p)
        worst_c1 = min(worst_c1, 4 * a - c1)
        for ratio in (1, 10, 100):
            n = ratio * p
            worst_margin = min(worst_margin, kl_bound(n, p, a, b, d) - kl_total(c1, cl, n))
    return (
        Check("kl-dominance", worst_margin, 0.0, worst_margin >= 0, "min bound - total"),
        Check("c1-bound", worst_c1, 0.0, worst_c1 >= 0, "min 4 alpha - C1"),
    )


def check_path_kl() -> Check:
    worst = 0.0
    for a, b in ((0.5, 1.0), (0.2, 2.0), (1.0, 1.0)):
        ens = build_ensemble(4, 3, a, b)
        var = ens.variants[0].model
        c1, cl = exact_C1(ens.base, var), exact_Cl(ens.base, var, 4)
        for n in (2, 3):
            worst = max(worst, abs(path_space_kl(ens.base, var, n) - kl_total(c1, cl, n)))
    return Check("path-kl", worst, 1e-10, worst < 1e-10)


def check_ratio_bound() -> Check:
    worst = -math.inf
    for d, a, b in kl_battery():
        ens = build_ensemble(d + 1, d, a, b)
        for v in ens.variants:
            worst = max(worst, update_log_ratio_max(ens.base, v.model) - 2 * a)
    return Check("ratio-bound", worst, 0.0, worst <= 1e-12, "max |log ratio| - 2 alpha")


def check_flip_bound() -> Check:
    worst = -math.inf
    for d, a, b in kl_battery():
        ens = build_ensemble(d + 1, d, a, b)
        for v in ens.variants:
            got, bound = flip_prob_max(ens.base, v.model)
            worst = max(worst, got - bound)
    return Check("flip-bound", worst, 0.0, worst <= 0.0, "max flip prob - exp(-2 beta d/3)")


def check_magnetization() -> Check:
    worst = -math.inf
    for d, b in ((9, 0.5), (9, 1.0), (9, 5.0), (3, 1.0)):
        ens = build_ensemble(d + 1, d, min(0.5, b), b)
        exact, bound = magnetization_tail(project(ens.variants[0].model, ens.cliques[0]))
        worst = max(worst, exact - bound)
    return Check("magnetization", worst, 0.0, worst <= 0.0, "max exact - bound")


def check_fano() -> Check:
    """Exact divergences never give a weaker Fano certificate than the closed-form bound."""
    worst, checked = math.inf, 0
    for (d, a, b), p in itertools.product(kl_battery(), (100, 1000)):
        # Divergences live on one clique, so a single clique serves every p;
        # all M variants are relabellings of each other.
        clique = build_ensemble(d + 1, d, a, b)
        var = clique.variants[0].model
        c1, cl = exact_C1(clique.base, var), exact_Cl(clique.base, var, p)
        M = ensemble_size(p, d)
        for ratio in (0.01, 0.1, 1):
            n = max(1, round(ratio * p))
            tight = fano_bound([kl_total(c1, cl, n)] * M, M)
            loose = fano_bound([kl_bound(n, p, a, b, d)] * M, M)
            if loose.applicable:
                checked += 1
                worst = min(worst, tight.risk_bound - loose.risk_bound if tight.applicable else -math.inf)
    if not checked:
        return Check("fano", 0.0, 0.0, False, "no setting satisfies the Fano hypothesis")
    return Check("fano", worst, 0.0, worst >= 0.0, f"{checked} applicable settings")


def check_model_file(path: str) -> list[Check]:
    try:
        m = read_model(path)
    except (OSError, ValueError) as exc:
        return [Check("model-file", 1, 0, False, f"unreadable: {exc}")]
    problems = m.violations()
    out = [Check("model-file", len(problems), 0, not problems, "; ".join(problems[:3]))]
    if not problems and m.p <= 8:
        out += [check_eq5([("file", m)]), check_update_range([("file", m)])]
    return out


# -- registry ---------------------------------------------------------------------------


def _registry(seed: int, mc_reps: int, stationarity_runs: int) -> dict[str, tuple[str, Callable[[], Iterable[Check]]]]:
    models = standard_models()
    kl = {}

    def kl_pair(k):
        if not kl:
            kl["c"] = check_kl_dominance()
        return [kl["c"][k]]

    return {
        "prob-sum": ("ising-model", lambda: [check_prob_sum(models)]),
        "update-range": ("ising-model", lambda: [check_update_range(models)]),
        "markov": ("ising-model", lambda: [check_markov(models)]),
        "monotone": ("ising-model", lambda: [check_monotone(models)]),
        "determinism": ("glauber-sim", lambda: [check_determinism(models, seed)]),
        "gap-ks": ("glauber-sim", lambda: [check_gap_ks(models, seed)]),
        "replay": ("glauber-sim", lambda: [check_replay(models, seed)]),
        "detailed-balance": ("glauber-sim", lambda: [check_detailed_balance(models)]),
        "stationarity": ("glauber-sim", lambda: [check_stationarity(models, seed, stationarity_runs)]),
        "gibbs": ("oracle", lambda: [check_gibbs(models)]),
        "eq5": ("oracle", lambda: [check_eq5(models)]),
        "conditionals": ("oracle", lambda: [check_table(models)]),
        "ratio-bracket": ("oracle", lambda: [check_ratio_bracket()]),
        "squeeze": ("oracle", lambda: [check_squeeze(models)]),
        "window-q": ("oracle", lambda: [check_window_q(seed)]),
        "envelopes": ("oracle", lambda: [check_envelopes(seed, mc_reps)]),
        "independence-ad": ("oracle", lambda: [check_independence_ad(models, seed)]),
        "kl-dominance": ("lowerbound", lambda: kl_pair(0)),
        "c1-bound": ("lowerbound", lambda: kl_pair(1)),
        "path-kl": ("lowerbound", lambda: [check_path_kl()]),
        "ratio-bound": ("lowerbound", lambda: [check_ratio_bound()]),
        "flip-bound": ("lowerbound", lambda: [check_flip_bound()]),
        "magnetization": ("lowerbound", lambda: [check_magnetization()]),
        "fano": ("lowerbound", lambda: [check_fano()]),
    }


def check_names() -> list[str]:
    return list(_registry(0, 1, 1))


def run_verification_suite(
    only: Sequence[str] | None = None,
    model_file: str | None = None,
    seed: int = 0,
    mc_reps: int = 200_000,
    stationarity_runs: int = 100_000,
) -> list[Check]:
    """Run the named checks (or module names) in registry order; all when ``only`` is empty."""
    reg = _registry(seed, mc_reps, stationarity_runs)
    wanted = set(only or ())
    known = set(reg) | {mod for mod, _ in reg.values()}
    unknown = wanted - known
    if unknown:
        raise ValueError(f"unknown checks {sorted(unknown)}; choose from {sorted(known)}")
    out = []
    if model_file is not None:
        out += check_model_file(model_file)
    for name, (mod, fn) in reg.items():
        if not wanted or name in wanted or mod in wanted:
            out += list(fn())
    return out
