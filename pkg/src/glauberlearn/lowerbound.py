"""Hard instances for structure learning and the divergences between them.

The base model is a union of (d+1)-cliques: pairing edges carry the weak
coupling alpha, every other clique edge carries beta.  Each variant deletes one
pairing edge.  Divergences between trace laws are computed exactly on the
clique containing the deleted edge, which carries all of the divergence.
All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .graphs import clique_ensemble_layout
from .model import Graph, IsingModel, ParamBounds
from .oracle import MAX_ENUM_NODES, all_configs, exact_gibbs


@dataclass(frozen=True)
class Variant:
    u: int
    v: int
    model: IsingModel


@dataclass(frozen=True)
class CliqueEnsemble:
    p: int
    d: int
    alpha: float
    beta: float
    base: IsingModel
    variants: tuple[Variant, ...]
    cliques: tuple[tuple[int, ...], ...]

    @property
    def M(self) -> int:
        return len(self.variants)


def ensemble_size(p: int, d: int) -> int:
    """Number of variants M: one per matching edge."""
    return (p // (d + 1)) * (d + 1) // 2


def build_ensemble(p: int, d: int, alpha: float, beta: float) -> CliqueEnsemble:
    if not 0 < alpha <= beta:
        raise ValueError("need 0 < alpha <= beta")
    cliques, matching, rest = clique_ensemble_layout(p, d)
    theta = {e: alpha for e in matching}
    theta.update({e: beta for e in rest})
    bounds = ParamBounds(alpha, beta, d)
    base = IsingModel(Graph.from_edges(p, theta), theta, bounds)
    variants = []
    for u, v in matching:
        t = {e: c for e, c in theta.items() if e != (u, v)}
        variants.append(Variant(u, v, IsingModel(Graph.from_edges(p, t), t, bounds)))
    return CliqueEnsemble(p, d, alpha, beta, base, tuple(variants), tuple(map(tuple, cliques)))


def _component(model: IsingModel, u: int) -> list[int]:
    seen, stack = {u}, [u]
    while stack:
        for n in model.graph.neighbors(stack.pop()):
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return sorted(seen)


def project(model: IsingModel, nodes: Sequence[int]) -> IsingModel:
    """Restriction to ``nodes`` (relabelled 0..len-1)."""
    pos = {n: k for k, n in enumerate(nodes)}
    theta = {
        (pos[i], pos[j]): model.theta(i, j)
        for i, j in model.graph.edges
        if i in pos and j in pos
    }
    return IsingModel(Graph.from_edges(len(nodes), theta), theta, model.bounds)


def _removed_edge(base: IsingModel, variant: IsingModel) -> tuple[int, int]:
    gone = set(base.graph.edges) - set(variant.graph.edges)
    if len(gone) != 1 or set(variant.graph.edges) - set(base.graph.edges):
        raise ValueError("variant must differ from the base model by exactly one removed edge")
    return gone.pop()


def _clique_pair(base: IsingModel, variant: IsingModel):
    """Both models restricted to the clique of the removed edge, plus local u, v."""
    if base is variant or base.graph.edges == variant.graph.edges:
        u = 0
        nodes = _component(base, u)
        v = None
    else:
        u, v = _removed_edge(base, variant)
        nodes = _component(base, u)
    if len(nodes) > MAX_ENUM_NODES:
        raise ValueError(f"clique of {len(nodes)} nodes is too large to enumerate")
    local_v = nodes.index(v) if v is not None else None
    return project(base, nodes), project(variant, nodes), nodes.index(u), local_v


def exact_C1(base: IsingModel, variant: IsingModel) -> float:
    """KL divergence between the stationary laws, variant relative to base."""
    b, w, _, _ = _clique_pair(base, variant)
    pb, pw = exact_gibbs(b), exact_gibbs(w)
    log_ratio = (pw.log_weights - pw.log_Z) - (pb.log_weights - pb.log_Z)
    return max(float(np.dot(pw.probabilities, log_ratio)), 0.0)


def _log_update_probs(model: IsingModel, node: int, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log P(new spin = +1 | s) and log P(new spin = -1 | s) for every row of S."""
    field = S @ model.dense[:, node]
    return -np.logaddexp(0.0, -2.0 * field), -np.logaddexp(0.0, 2.0 * field)


def update_kl(base: IsingModel, variant: IsingModel, endpoint: str = "u") -> float:
    """Expected divergence of one update of ``endpoint`` ("u" or "v") from a stationary state."""
    if endpoint not in ("u", "v"):
        raise ValueError("endpoint must be 'u' or 'v'")
    b, w, u, v = _clique_pair(base, variant)
    k = v if endpoint == "v" and v is not None else u
    S = all_configs(w.p).astype(float)
    pi = exact_gibbs(w).probabilities
    wp, wm = _log_update_probs(w, k, S)
    bp, bm = _log_update_probs(b, k, S)
    inner = np.exp(wp) * (wp - bp) + np.exp(wm) * (wm - bm)
    return float(np.dot(pi, inner))


def exact_Cl(base: IsingModel, variant: IsingModel, p: int) -> float:
    """Per-step divergence: (2/p) times the expected divergence of one update of u."""
    return max(2.0 / p * update_kl(base, variant), 0.0)


def update_log_ratio_max(base: IsingModel, variant: IsingModel) -> float:
    """max over configurations, endpoints and new spin of |log P_variant / P_base|."""
    b, w, u, v = _clique_pair(base, variant)
    S = all_configs(w.p).astype(float)
    worst = 0.0
    for k in (u,) if v is None else (u, v):
        wp, wm = _log_update_probs(w, k, S)
        bp, bm = _log_update_probs(b, k, S)
        worst = max(worst, float(np.max(np.abs(wp - bp))), float(np.max(np.abs(wm - bm))))
    return worst


def flip_prob_max(base: IsingModel, variant: IsingModel) -> tuple[float, float]:
    """Largest P_variant(new s_u = -1 | s) over s with total magnetization >= d/3 + 2,
    and the bound exp(-2 beta d / 3)."""
    _, w, u, _ = _clique_pair(base, variant)
    d, beta = w.bounds.d, w.bounds.beta
    S = all_configs(w.p).astype(float)
    keep = S.sum(axis=1) >= d / 3 + 2
    if not keep.any():
        return 0.0, math.exp(-2 * beta * d / 3)
    _, wm = _log_update_probs(w, u, S[keep])
    return float(np.exp(wm).max()), math.exp(-2 * beta * d / 3)


def kl_total(C1: float, Cl: float, n: int) -> float:
    if n < 1:
        raise ValueError("need n >= 1")
    return C1 + (n - 1) * Cl


def kl_bound(n: float, p: float, alpha: float, beta: float, d: int) -> float:
    return 4 * alpha + (n / p) * 18 * alpha * d * math.exp(d) * math.exp(-2 * beta * d / 3)


@dataclass(frozen=True)
class KlReport:
    variant: int
    u: int
    v: int
    C1: float
    Cl: float
    n: int
    total: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - self.total


def kl_reports(ens: CliqueEnsemble, n: int) -> list[KlReport]:
    out = []
    for k, var in enumerate(ens.variants):
        c1 = exact_C1(ens.base, var.model)
        cl = exact_Cl(ens.base, var.model, ens.p)
        out.append(
            KlReport(k, var.u, var.v, c1, cl, n, kl_total(c1, cl, n), kl_bound(n, ens.p, ens.alpha, ens.beta, ens.d))
        )
    return out


def path_space_kl(base: IsingModel, variant: IsingModel, n: int) -> float:
    """KL between full trace laws by enumerating every path (s1..sn, I2..In).

    The first sample is stationary, each later step picks a uniform node and
    resamples it.  Only feasible for a handful of nodes and steps.
    """
    if base.p > 8 or n > 4:
        raise ValueError("path enumeration limited to p <= 8 and n <= 4")
    p = base.p
    S = all_configs(p).astype(float)
    logs = []
    for m in (variant, base):
        dist = exact_gibbs(m)
        fields = S @ m.dense
        lp = -np.logaddexp(0.0, -2.0 * fields)  # log P(+1 | s), per node
        lm = -np.logaddexp(0.0, 2.0 * fields)
        logs.append((dist.log_weights - dist.log_Z, lp, lm))
    idx = np.arange(2**p)
    state = idx.copy()
    lq = [logs[0][0].copy(), logs[1][0].copy()]
    log_pick = -math.log(p)
    for _ in range(n - 1):
        new_state, new_lq = [], [[], []]
        for i in range(p):
            for plus in (True, False):
                nxt = (state | (1 << i)) if plus else (state & ~(1 << i))
                new_state.append(nxt)
                for side in (0, 1):
                    trans = logs[side][1][state, i] if plus else logs[side][2][state, i]
                    new_lq[side].append(lq[side] + log_pick + trans)
        state = np.concatenate(new_state)
        lq = [np.concatenate(new_lq[0]), np.concatenate(new_lq[1])]
    q = np.exp(lq[0])
    return float(np.dot(q, lq[0] - lq[1]))


def magnetization_tail(model: IsingModel) -> tuple[float, float]:
    """(exact P(|sum s| <= d/3 + 1), the closed-form upper bound)."""
    if model.p > MAX_ENUM_NODES:
        raise ValueError(f"clique of {model.p} nodes is too large to enumerate")
    d, beta = model.bounds.d, model.bounds.beta
    dist = exact_gibbs(model)
    mag = all_configs(model.p).sum(axis=1, dtype=np.int64)
    exact = float(dist.probabilities[np.abs(mag) <= d / 3 + 1].sum())
    bound = d * (3 * math.e) ** (d / 3 + 1) * math.exp(-beta * d * (d - 3) / 3)
    return exact, bound


class FanoResult(NamedTuple):
    gamma: float
    risk_bound: float  # nan when not applicable
    applicable: bool


def fano_risk(gamma: float, M: int) -> float:
    return (math.log(M + 1) - 1) / math.log(M) - gamma


def fano_bound(kl_values: Sequence[float], M: int) -> FanoResult:
    """Minimax risk lower bound from M divergences to the base hypothesis."""
    if M < 2:
        raise ValueError("Fano's bound needs M >= 2")
    if len(kl_values) != M:
        raise ValueError(f"expected {M} divergences, got {len(kl_values)}")
    gamma = math.fsum(kl_values) / ((M + 1) * math.log(M))
    if 0 < gamma < 1 / 8:
        return FanoResult(gamma, fano_risk(gamma, M), True)
    return FanoResult(gamma, math.nan, False)


def theorem2_T(p: int, d: int, alpha: float, beta: float) -> float:
    """Observation time below which no learner has minimax risk <= 1/2."""
    if p < 2 or alpha <= 0 or beta <= 0 or d <= 0:
        raise ValueError("need p >= 2 and positive d, alpha, beta")
    return math.exp(2 * beta * d / 3) / (32 * math.exp(6) * alpha) * math.log(p)
