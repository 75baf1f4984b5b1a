"""Edge recovery from a continuous-time trace by windowed response statistics.

Time is cut into windows of length L aligned at 0; the trailing partial window
is dropped.  Inside window k, pair (i, j) contributes only when node i updates
in the first and last thirds but not the middle, node j updates in the middle
third only, and j's spin differs between the two interior boundaries.  The
per-window value is then ``s_j(L/3) * (s_i(L/3) - s_i(end))`` in {-2, 0, +2},
whose mean has the sign of the coupling.  A pair is declared an edge when
``|mean over windows| >= tau``.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.stats import norm

from . import _kernels
from .dynamics import CONTINUOUS, Trace, spin_at, updates_in

Edge = tuple[int, int]
EdgeSet = frozenset  # of (i, j) with i < j

_LOG_TINY = math.log(1e-300)


class ParameterUnderflow(ArithmeticError):
    """A derived learner parameter left floating-point range."""


@dataclass(frozen=True)
class LearnerParams:
    L: float
    tau: float
    T: float
    q: float
    k_max: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"window length must be positive, got {self.L}")
        if not self.tau > 0:
            raise ValueError(f"threshold must be positive, got {self.tau}")
        if self.k_max < 1:
            raise ValueError(f"need at least one window (T={self.T}, L={self.L})")
        if not 0 < self.q < 1:
            raise ValueError(f"window-event probability must lie in (0, 1), got {self.q}")

    def as_dict(self) -> dict:
        return {"L": self.L, "tau": self.tau, "T": self.T, "q": self.q, "k_max": self.k_max}


def window_event_prob(L: float) -> float:
    """Probability that a given ordered pair shows the i-j-i update pattern in a window."""
    third = L / 3.0
    return (-math.expm1(-third) * math.exp(-third)) ** 3


def window_count(horizon: float, L: float) -> int:
    k = math.floor(horizon / L)
    if k >= 2**53:
        # beyond exact float integers a one-window correction is meaningless
        return int(k)
    while k > 0 and k * L > horizon:
        k -= 1
    while (k + 1) * L <= horizon:
        k += 1
    return int(k)


def edge_signal_lower_bound(theta: float, L: float, d: int, beta: float, factor: float = 0.25) -> float:
    """Lower bound on sign(theta) * E[X] for an edge pair, from any starting state."""
    q = window_event_prob(L)
    return 2.0 * q * (abs(theta) * factor * math.exp(-10.0 * d * beta) * math.exp(-L * d) - L * d)


def nonedge_bias_bound(L: float, d: int) -> float:
    """Upper bound on |E[X]| for a non-edge pair."""
    return 2.0 * window_event_prob(L) * L * d


def theory_params(p: int, d: int, alpha: float, beta: float) -> LearnerParams:
    """Window length, threshold and horizon that carry the high-probability guarantee."""
    if p < 2 or d < 1 or not (0 < alpha <= beta):
        raise ValueError("need p >= 2, d >= 1 and 0 < alpha <= beta")
    log_L = math.log(alpha / (16.0 * d)) - 10.0 * d * beta
    if log_L < _LOG_TINY:
        raise ParameterUnderflow(f"window length L = exp({log_L:.1f}) underflows")
    L = math.exp(log_L)
    q = window_event_prob(L)
    if q == 0.0:
        raise ParameterUnderflow(f"window-event probability q underflows for L = {L:.3g}")
    log_T = math.log(1e6) + 20.0 * d * beta - 2.0 * math.log(alpha) + math.log(math.log(p))
    if log_T > math.log(np.finfo(float).max):
        raise ParameterUnderflow(f"horizon T = exp({log_T:.1f}) overflows")
    T = math.exp(log_T)
    if log_T - log_L > math.log(np.finfo(float).max):
        raise ParameterUnderflow("window count T/L overflows")
    return LearnerParams(L=L, tau=3.0 * L * d * q, T=T, q=q, k_max=window_count(T, L))


def calibrated_tau(q: float, k_max: int, n_tests: int, delta: float = 0.01) -> float:
    """CLT threshold: with independent spins a window value is +-2 w.p. q/4 each,
    so the mean has standard deviation sqrt(q / k_max); Bonferroni over the tests."""
    z = norm.isf(delta / (2.0 * max(n_tests, 1)))
    return float(z * math.sqrt(q / k_max))


def practical_params(
    L: float,
    T: float,
    alpha: float,
    beta: float,
    d: int,
    tau: float | str | None = None,
    p: int | None = None,
    delta: float = 0.01,
    symmetrize: bool = False,
) -> LearnerParams:
    """User-chosen window and horizon.

    ``tau`` may be a number, ``"default"``/None (half the edge-signal bound when
    that is positive, else ``3*L*d*q``), or ``"clt"`` (see :func:`calibrated_tau`,
    which needs ``p``).
    """
    q = window_event_prob(L)
    k_max = window_count(T, L)
    if tau is None or tau == "default":
        half = 0.5 * edge_signal_lower_bound(alpha, L, d, beta)
        tau = half if half > 0 else 3.0 * L * d * q
    elif tau == "clt":
        if p is None:
            raise ValueError("the calibrated threshold needs the node count p")
        n_tests = p * (p - 1) // 2 * (2 if symmetrize else 1)
        tau = calibrated_tau(q, max(k_max, 1), n_tests, delta)
    return LearnerParams(L=float(L), tau=float(tau), T=float(T), q=q, k_max=k_max)


# -- reference (per-window) route ------------------------------------------------


def window_bounds(k: int, L: float) -> tuple[float, float, float, float]:
    """Start, L/3 mark, 2L/3 mark and end of window k (1-based)."""
    start = (k - 1) * L
    return start, start + L / 3.0, start + 2.0 * L / 3.0, k * L


def _check_window(trace: Trace, k: int, L: float) -> None:
    k_max = window_count(trace.horizon, L)
    if not 1 <= k <= k_max:
        raise ValueError(f"window {k} outside [1, {k_max}]")


def _updated(trace: Trace, i: int, t1: float, t2: float) -> bool:
    return len(updates_in(trace, i, t1, t2)) > 0


def event_A(trace: Trace, i: int, j: int, k: int, L: float) -> bool:
    """i alone (of the two) in the first third, j alone in the middle, i alone in the last."""
    if i == j:
        raise ValueError("event A needs two distinct nodes")
    _check_window(trace, k, L)
    start, b1, b2, end = window_bounds(k, L)
    return (
        _updated(trace, i, start, b1) and not _updated(trace, j, start, b1)
        and _updated(trace, j, b1, b2) and not _updated(trace, i, b1, b2)
        and _updated(trace, i, b2, end) and not _updated(trace, j, b2, end)
    )


def event_B(trace: Trace, j: int, k: int, L: float) -> bool:
    _check_window(trace, k, L)
    _, b1, b2, _ = window_bounds(k, L)
    return spin_at(trace, j, b1) != spin_at(trace, j, b2)


def edge_statistic(trace: Trace, i: int, j: int, k: int, L: float) -> int:
    """Window-k value of the (i responds to j) statistic, computed from the trace directly."""
    if i == j:
        raise ValueError("statistic needs two distinct nodes")
    if not (event_A(trace, i, j, k, L) and event_B(trace, j, k, L)):
        return 0
    _, b1, _, end = window_bounds(k, L)
    si_b1 = spin_at(trace, i, b1)
    si_end = spin_at(trace, i, end, left=True)
    return spin_at(trace, j, b1) * (si_b1 - si_end)


# -- fast route -------------------------------------------------------------------


@dataclass(frozen=True)
class PairStatistic:
    i: int
    j: int
    k_max: int
    windows: np.ndarray  # 1-based windows where C holds
    window_values: np.ndarray  # statistic in those windows; zero elsewhere
    mean: float

    @property
    def windows_with_C(self) -> int:
        return int(self.windows.size)


_ROLE_CACHE: "weakref.WeakKeyDictionary[Trace, dict]" = weakref.WeakKeyDictionary()


def role_index(trace: Trace, L: float) -> tuple:
    """Per-node window summaries, cached per (trace, L)."""
    if trace.mode != CONTINUOUS:
        raise ValueError("the learner needs a continuous-time trace")
    cache = _ROLE_CACHE.setdefault(trace, {})
    if L not in cache:
        k_max = window_count(trace.horizon, L)
        order, ptr = trace._node_order
        cache[L] = _kernels.node_roles(
            trace.times, trace.nodes, trace.spins, trace.initial, order, ptr, float(L), k_max
        )
    return cache[L]


def forget_index(trace: Trace) -> None:
    """Drop the cached window summaries of ``trace``."""
    _ROLE_CACHE.pop(trace, None)


def _k_max(trace: Trace, L: float) -> int:
    k_max = window_count(trace.horizon, L)
    if k_max < 1:
        raise ValueError(f"trace horizon {trace.horizon} is shorter than one window (L={L})")
    return k_max


def pair_statistic(trace: Trace, i: int, j: int, params: LearnerParams) -> PairStatistic:
    if i == j:
        raise ValueError("pair needs two distinct nodes")
    k_max = _k_max(trace, params.L)
    ks, vals = _kernels.pair_windows(i, j, *role_index(trace, params.L))
    return PairStatistic(i, j, k_max, ks + 1, vals, float(vals.sum()) / k_max)


def pair_mean(trace: Trace, i: int, j: int, params: LearnerParams) -> float:
    """Mean of the (i responds to j) statistic over all complete windows."""
    if i == j:
        raise ValueError("pair needs two distinct nodes")
    k_max = _k_max(trace, params.L)
    s, _ = _kernels.pair_sum(i, j, *role_index(trace, params.L))
    return s / k_max


def glauber_learn(trace: Trace, params: LearnerParams, symmetrize: bool = False) -> EdgeSet:
    """Estimated edge set: pairs i < j with ``|pair_mean(i, j)| >= tau``.

    The window count is taken from the trace horizon, not from ``params``.
    """
    if trace.p < 2:
        raise ValueError("need at least two nodes")
    k_max = _k_max(trace, params.L)
    ii, jj, _ = _kernels.select_pairs(
        trace.p, symmetrize, float(params.tau), k_max, *role_index(trace, params.L)
    )
    return frozenset(zip(ii.tolist(), jj.tolist()))


def write_edges(edges: Iterable[Edge], path: str | Path) -> None:
    lines = [f"{i} {j}" for i, j in sorted(edges)]
    Path(path).write_text("".join(ln + "\n" for ln in lines))


def read_edges(path: str | Path) -> EdgeSet:
    out = set()
    for ln in Path(path).read_text().splitlines():
        if ln.strip():
            i, j = map(int, ln.split())
            out.add((min(i, j), max(i, j)))
    return frozenset(out)
