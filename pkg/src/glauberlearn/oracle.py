"""Exact small-instance ground truth and Monte Carlo checks of the window statistic.

Configurations are indexed by bitmask: bit i set means spin i is +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from . import _kernels
from .dynamics import RngSeed, Trace, as_seed, updates_in
from .learner import (
    _check_window,
    edge_signal_lower_bound,
    nonedge_bias_bound,
    window_bounds,
    window_event_prob,
)
from .model import Graph, IsingModel, min_update_prob, plus_prob

MAX_ENUM_NODES = 20


def all_configs(p: int) -> np.ndarray:
    """``2**p x p`` int8 matrix; row b is the configuration with bitmask b."""
    idx = np.arange(2**p, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(p, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def config_index(config) -> int:
    return int(sum(1 << i for i, s in enumerate(config) if s > 0))


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    p: int
    log_weights: np.ndarray
    log_Z: float
    probabilities: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def Z(self) -> float:
        return math.exp(self.log_Z)

    def prob(self, config) -> float:
        return float(self.probabilities[config_index(config)])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` independent configurations as an ``n x p`` int8 matrix."""
        idx = rng.choice(self.probabilities.size, size=n, p=self.probabilities)
        bits = (idx[:, None] >> np.arange(self.p)) & 1
        return (2 * bits - 1).astype(np.int8)


def _energies(model: IsingModel) -> np.ndarray:
    p = model.p
    idx = np.arange(2**p, dtype=np.int64)
    energy = np.zeros(idx.size)
    for i, j in model.graph.edges:
        agree = ((idx >> i) & 1) == ((idx >> j) & 1)
        energy += np.where(agree, 1.0, -1.0) * model.theta(i, j)
    return energy


def exact_gibbs(model: IsingModel) -> ExactDistribution:
    if model.p > MAX_ENUM_NODES:
        raise ValueError(f"enumeration limited to p <= {MAX_ENUM_NODES}, got {model.p}")
    logw = _energies(model)
    shift = logw.max(initial=0.0)
    w = np.exp(logw - shift)
    total = w.sum()
    return ExactDistribution(model.p, logw, float(shift + math.log(total)), w / total)


class ConditionalPair(NamedTuple):
    p_plus: float
    p_minus: float
    i: int
    j: int
    x: dict
    # 1 - p_plus and 1 - p_minus, evaluated directly so they keep full precision near 0
    q_plus: float = math.nan
    q_minus: float = math.nan


def _assignment(model: IsingModel, i: int, j: int, x) -> dict:
    need = [k for k in model.graph.neighbors(i) if k != j]
    if isinstance(x, Mapping):
        missing = [k for k in need if k not in x]
        if missing:
            raise ValueError(f"assignment misses neighbors {missing} of node {i}")
        return {k: int(x[k]) for k in need}
    x = np.asarray(x)
    if x.size == model.p:
        return {k: int(x[k]) for k in need}
    if x.size != len(need):
        raise ValueError(f"assignment must cover the {len(need)} nodes {need}")
    return {k: int(v) for k, v in zip(need, x)}


def exact_conditionals(model: IsingModel, i: int, j: int, x) -> ConditionalPair:
    """P(s_i = +1 | rest of the neighborhood = x, s_j = +-1) in closed form."""
    if i == j:
        raise ValueError("i and j must differ")
    if model.p > MAX_ENUM_NODES:
        raise ValueError(f"oracle limited to p <= {MAX_ENUM_NODES}")
    x = _assignment(model, i, j, x)
    base = sum(model.theta(i, k) * s for k, s in x.items())
    t = model.theta(i, j)
    return ConditionalPair(
        plus_prob(base + t), plus_prob(base - t), i, j, x, plus_prob(-base - t), plus_prob(t - base)
    )


def conditionals_from_table(dist: ExactDistribution, model: IsingModel, i: int, j: int, x) -> tuple[float, float]:
    """Same quantities as :func:`exact_conditionals`, by marginalizing the joint table."""
    x = _assignment(model, i, j, x)
    idx = np.arange(2**model.p, dtype=np.int64)
    match = np.ones(idx.size, dtype=bool)
    for k, s in x.items():
        match &= ((idx >> k) & 1) == (1 if s > 0 else 0)
    out = []
    for sj in (1, 0):
        m = match & (((idx >> j) & 1) == sj)
        plus = m & (((idx >> i) & 1) == 1)
        out.append(float(dist.probabilities[plus].sum() / dist.probabilities[m].sum()))
    return out[0], out[1]


def edge_identity_residual(model: IsingModel, i: int, j: int, x) -> float:
    """|exp(4 theta_ij) - p+(1-p-) / (p-(1-p+))|."""
    c = exact_conditionals(model, i, j, x)
    ratio = c.p_plus * c.q_minus / (c.p_minus * c.q_plus)
    return abs(math.exp(4.0 * model.theta(i, j)) - ratio)


class RatioBracket(NamedTuple):
    lower: float
    middle: float
    upper: float
    holds: bool


def lemma1_check(a: float, b: float) -> RatioBracket:
    """b - a <= b(1-a)/(a(1-b)) - 1 <= (b - a)/(a(1-b)^2) for 0 < a <= b < 1, a <= 1/2."""
    if not (0 < a <= b < 1 and a <= 0.5):
        raise ValueError(f"need 0 < a <= b < 1 and a <= 1/2, got a={a}, b={b}")
    lower = b - a
    middle = b * (1 - a) / (a * (1 - b)) - 1
    upper = (b - a) / (a * (1 - b) ** 2)
    return RatioBracket(lower, middle, upper, lower <= middle <= upper)


def ratio_bracket_violations(step: float = 1e-3) -> tuple[int, int]:
    """(violations, points checked) over a in (0, 1/2], b in [a, 0.999] on a lattice."""
    n = int(round(1 / step))
    a = np.arange(1, n // 2 + 1) / n
    b = np.arange(1, n) / n
    A, B = np.meshgrid(a, b, indexing="ij")
    keep = B >= A
    A, B = A[keep], B[keep]
    lower = B - A
    middle = B * (1 - A) / (A * (1 - B)) - 1
    upper = (B - A) / (A * (1 - B) ** 2)
    bad = ~((lower <= middle) & (middle <= upper))
    return int(bad.sum()), int(A.size)


def squeeze_terms(model: IsingModel, i: int, j: int, x) -> tuple[float, float, float]:
    theta = model.theta(i, j)
    if theta == 0:
        raise ValueError(f"({i}, {j}) is not an edge")
    b = model.bounds
    c = exact_conditionals(model, i, j, x)
    diff = math.copysign(1.0, theta) * (c.p_plus - c.p_minus)
    return diff, math.expm1(4 * abs(theta)), 8 * math.exp(8 * b.beta * b.d) * diff


def squeeze_check(model: IsingModel, i: int, j: int, x) -> bool:
    """sign(theta)(p+ - p-) <= exp(4|theta|) - 1 <= 8 exp(8 beta d) sign(theta)(p+ - p-).

    For theta < 0 the right side is the (p- - p+) form; a misprint of this
    display elsewhere reads (p- - p-).
    """
    lo, mid, hi = squeeze_terms(model, i, j, x)
    return lo <= mid <= hi


def neighborhood_assignments(model: IsingModel, i: int, j: int):
    """Every assignment of the neighbors of i other than j."""
    need = [k for k in model.graph.neighbors(i) if k != j]
    for bits in range(2 ** len(need)):
        yield {k: (1 if (bits >> n) & 1 else -1) for n, k in enumerate(need)}


def conditional_range(model: IsingModel) -> tuple[float, float]:
    """Smallest and largest conditional P(+1) over all nodes, pairs and assignments."""
    lo, hi = 1.0, 0.0
    for i in range(model.p):
        for j in range(model.p):
            if i == j:
                continue
            for x in neighborhood_assignments(model, i, j):
                c = exact_conditionals(model, i, j, x)
                lo = min(lo, c.p_plus, c.p_minus)
                hi = max(hi, c.p_plus, c.p_minus)
    return lo, hi


def detailed_balance_residual(model: IsingModel) -> float:
    """max |pi(s) P(s -> s') - pi(s') P(s' -> s)| over single-flip pairs of the heat-bath chain."""
    dist = exact_gibbs(model)
    S = all_configs(model.p).astype(float)
    fields = S @ model.dense
    plus = 0.5 * (1.0 + np.tanh(fields))
    # P(s -> s with spin i flipped) = (1/p) * P(new spin = -s_i)
    flip = np.where(S > 0, 1.0 - plus, plus) / model.p
    idx = np.arange(2**model.p)
    worst = 0.0
    pi = dist.probabilities
    for i in range(model.p):
        other = idx ^ (1 << i)
        worst = max(worst, float(np.max(np.abs(pi * flip[:, i] - pi[other] * flip[other, i]))))
    return worst


def stationarity_tv(model: IsingModel, T_burn: float, n_runs: int, seed) -> float:
    """TV distance between exact Gibbs and the end states of runs started from it."""
    if model.p > 10:
        raise ValueError("stationarity check limited to p <= 10")
    seed = as_seed(seed)
    dist = exact_gibbs(model)
    states = dist.sample(n_runs, seed.generator(0))
    if T_burn > 0:
        _kernels.evolve_many(*model.csr, states, float(T_burn), seed.child_int(1))
    idx = ((states > 0).astype(np.int64) << np.arange(model.p)).sum(axis=1)
    emp = np.bincount(idx, minlength=2**model.p) / n_runs
    return 0.5 * float(np.abs(emp - dist.probabilities).sum())


@dataclass(frozen=True)
class WindowEstimate:
    i: int
    j: int
    reps: int
    mean: float
    stderr: float
    freq_A: float
    freq_C: float
    freq_D: float
    freq_AD: float


def window_monte_carlo(model: IsingModel, x, pairs, L: float, reps: int, seed) -> list[WindowEstimate]:
    """Independent one-window runs from ``x``; statistics for every (i, j) in ``pairs``."""
    seed = as_seed(seed)
    x = np.asarray(x, dtype=np.int8)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    acc = _kernels.window_monte_carlo(*model.csr, x, float(L), int(reps), seed.child_int(0), pairs)
    out = []
    for (i, j), (s, ss, na, nc, nd, nad) in zip(pairs.tolist(), acc):
        mean = s / reps
        var = max(ss / reps - mean * mean, 0.0) * reps / (reps - 1)
        out.append(
            WindowEstimate(i, j, reps, mean, math.sqrt(var / reps), na / reps, nc / reps, nd / reps, nad / reps)
        )
    return out


def mc_expected_statistic(model: IsingModel, x, i: int, j: int, L: float, reps: int, seed) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the window statistic started from ``x``."""
    if reps < 1000:
        raise ValueError("need at least 1000 repetitions")
    est = window_monte_carlo(model, x, [(i, j)], L, reps, seed)[0]
    return est.mean, est.stderr


@dataclass(frozen=True)
class EnvelopeCheck:
    i: int
    j: int
    edge: bool
    mean: float
    stderr: float
    bound: float
    bound_strict: float  # edge case with the 1/16 factor; equals ``bound`` for non-edges
    holds: bool


def envelope_check(model: IsingModel, x, i: int, j: int, L: float, reps: int, seed, est: WindowEstimate | None = None) -> EnvelopeCheck:
    """Edge pairs: sign(theta) E X >= bound - 3 se.  Non-edges: |E X| <= bound + 3 se."""
    if est is None:
        est = window_monte_carlo(model, x, [(i, j)], L, reps, seed)[0]
    b = model.bounds
    theta = model.theta(i, j)
    if theta != 0:
        bound = edge_signal_lower_bound(theta, L, b.d, b.beta, 0.25)
        strict = edge_signal_lower_bound(theta, L, b.d, b.beta, 1 / 16)
        holds = math.copysign(1.0, theta) * est.mean >= bound - 3 * est.stderr
        return EnvelopeCheck(i, j, True, est.mean, est.stderr, bound, strict, holds)
    bound = nonedge_bias_bound(L, b.d)
    return EnvelopeCheck(i, j, False, est.mean, est.stderr, bound, bound, abs(est.mean) <= bound + 3 * est.stderr)


def event_D(trace: Trace, graph: Graph, i: int, j: int, k: int, L: float) -> bool:
    """No neighbor of i other than j updates during window k (needs the true graph)."""
    _check_window(trace, k, L)
    start, _, _, end = window_bounds(k, L)
    return all(not updates_in(trace, n, start, end) for n in graph.neighbors(i) if n != j)


def independence_AD_check(model: IsingModel, i: int, j: int, L: float, reps: int, seed) -> bool:
    """|P(A and D) - P(A) P(D)| within 4 binomial standard errors."""
    if reps < 10_000:
        raise ValueError("need at least 1e4 repetitions")
    # A reads the clocks of {i, j}; D reads the clocks of the other neighbors of i.
    others = {n for n in model.graph.neighbors(i) if n != j}
    assert not ({i, j} & others)
    x = np.ones(model.p, dtype=np.int8)
    est = window_monte_carlo(model, x, [(i, j)], L, reps, seed)[0]
    prod = est.freq_A * est.freq_D
    se = math.sqrt(max(prod * (1 - prod), 1e-300) / reps)
    return abs(est.freq_AD - prod) <= 4 * se


def conditional_bounds_hold(model: IsingModel) -> bool:
    floor = min_update_prob(model.bounds.beta, model.bounds.d)
    lo, hi = conditional_range(model)
    return lo >= floor and hi <= 1 - floor

