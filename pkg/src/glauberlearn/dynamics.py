"""Glauber dynamics traces: generation, indexing and serialization.

A trace stores the initial configuration and the update events only; the
configuration at any time is reconstructed on demand.  In continuous mode the
event time is real; in discrete (heat-bath) mode it is the integer step index,
with step 1 reserved for the initial sample so the first update is step 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _kernels
from .model import IsingModel, as_config

CONTINUOUS = "continuous"
DISCRETE = "discrete"


class UpdateEvent(NamedTuple):
    time: float
    node: int
    new_spin: int


@dataclass(frozen=True)
class RngSeed:
    """Explicit seed plus a stream id for independent substreams."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream < 0:
            raise ValueError("stream id must be nonnegative")

    def generator(self, purpose: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.stream, purpose]))

    def child_int(self, purpose: int) -> int:
        """Deterministic 32-bit integer for seeding compiled kernels."""
        return int(np.random.SeedSequence([self.seed, self.stream, purpose]).generate_state(1)[0])


# RNG purposes; distinct SeedSequence keys give independent streams.
CLOCK_STREAM = 0
COIN_STREAM = 1
INIT_STREAM = 2


def as_seed(seed) -> RngSeed:
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed))


@dataclass(frozen=True, eq=False)
class Trace:
    p: int
    mode: str
    initial: np.ndarray
    times: np.ndarray
    nodes: np.ndarray
    spins: np.ndarray
    horizon: float

    def __post_init__(self):
        if self.mode not in (CONTINUOUS, DISCRETE):
            raise ValueError(f"unknown trace mode {self.mode!r}")
        object.__setattr__(self, "initial", as_config(self.initial, self.p))
        dtype = np.float64 if self.mode == CONTINUOUS else np.int64
        times = np.asarray(self.times, dtype=dtype)
        nodes = np.asarray(self.nodes, dtype=np.int64)
        spins = np.asarray(self.spins, dtype=np.int8)
        if not (times.shape == nodes.shape == spins.shape) or times.ndim != 1:
            raise ValueError("times, nodes and spins must be equal-length vectors")
        if times.size:
            if np.any(np.diff(times) < 0):
                raise ValueError("event times must be nondecreasing")
            if times[0] < 0 or times[-1] > self.horizon:
                raise ValueError("event times must lie in [0, horizon]")
            if nodes.min() < 0 or nodes.max() >= self.p:
                raise ValueError("event node outside [0, p)")
            if not np.all(np.abs(spins) == 1):
                raise ValueError("event spins must be -1 or +1")
        for arr in (times, nodes, spins):
            arr.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "spins", spins)

    __hash__ = object.__hash__

    def __len__(self) -> int:
        return int(self.times.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.p == other.p
            and self.mode == other.mode
            and self.horizon == other.horizon
            and np.array_equal(self.initial, other.initial)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.spins, other.spins)
        )

    @cached_property
    def _node_order(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.argsort(self.nodes, kind="stable")
        ptr = np.zeros(self.p + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.nodes, minlength=self.p), out=ptr[1:])
        return order, ptr

    @property
    def per_node_index(self) -> list[np.ndarray]:
        """For each node, the sorted positions of its events in ``times``."""
        order, ptr = self._node_order
        return [order[ptr[i] : ptr[i + 1]] for i in range(self.p)]

    def node_positions(self, i: int) -> np.ndarray:
        order, ptr = self._node_order
        return order[ptr[i] : ptr[i + 1]]

    def node_times(self, i: int) -> np.ndarray:
        return self.times[self.node_positions(i)]

    def events(self) -> list[UpdateEvent]:
        return [
            UpdateEvent(t, int(n), int(s))
            for t, n, s in zip(self.times.tolist(), self.nodes, self.spins)
        ]


def _check_initial(model: IsingModel, initial) -> np.ndarray:
    return as_config(initial, model.p)


def _event_times(rng: np.random.Generator, p: int, T: float) -> np.ndarray:
    # One rate-p clock is the superposition of p independent rate-1 clocks.
    mean = p * T
    chunk = int(mean + 6.0 * math.sqrt(mean) + 16)
    parts = []
    last = 0.0
    while True:
        t = last + np.cumsum(rng.exponential(1.0 / p, size=chunk))
        if t[-1] > T:
            parts.append(t[t <= T])
            break
        parts.append(t)
        last = float(t[-1])
    return np.concatenate(parts)


def simulate_ct(model: IsingModel, initial, T: float, seed) -> Trace:
    """Continuous-time Glauber dynamics on ``[0, T]``."""
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"horizon T must be positive and finite, got {T}")
    seed = as_seed(seed)
    init = _check_initial(model, initial)
    p = model.p
    if p == 0:
        return Trace(0, CONTINUOUS, init, [], [], [], float(T))
    clock = seed.generator(CLOCK_STREAM)
    times = _event_times(clock, p, float(T))
    nodes = clock.integers(0, p, size=times.size)
    coins = seed.generator(COIN_STREAM).random(times.size)
    spins = _kernels.apply_updates(*model.csr, init, nodes, coins)
    return Trace(p, CONTINUOUS, init, times, nodes, spins, float(T))


def simulate_dt(model: IsingModel, initial, n: int, seed) -> Trace:
    """Heat-bath chain: samples 1..n, each of steps 2..n resamples a uniform node."""
    if int(n) != n or n < 1:
        raise ValueError(f"sample count n must be a positive integer, got {n}")
    n = int(n)
    seed = as_seed(seed)
    init = _check_initial(model, initial)
    steps = np.arange(2, n + 1, dtype=np.int64)
    nodes = seed.generator(CLOCK_STREAM).integers(0, model.p, size=steps.size)
    coins = seed.generator(COIN_STREAM).random(steps.size)
    spins = _kernels.apply_updates(*model.csr, init, nodes, coins)
    return Trace(model.p, DISCRETE, init, steps, nodes, spins, n)


def _replay(trace: Trace, stop: int) -> np.ndarray:
    state = trace.initial.copy()
    if stop:
        nodes = trace.nodes[:stop]
        # last write per node wins
        rev_nodes = nodes[::-1]
        uniq, first = np.unique(rev_nodes, return_index=True)
        state[uniq] = trace.spins[:stop][::-1][first]
    return state


def _check_time(trace: Trace, t: float) -> None:
    if not 0 <= t <= trace.horizon:
        raise ValueError(f"time {t} outside [0, {trace.horizon}]")


def state_at(trace: Trace, t: float) -> np.ndarray:
    """Configuration after every event with time <= t."""
    _check_time(trace, t)
    return _replay(trace, int(np.searchsorted(trace.times, t, side="right")))


def state_before(trace: Trace, t: float) -> np.ndarray:
    """Left limit: configuration after every event with time < t."""
    _check_time(trace, t)
    return _replay(trace, int(np.searchsorted(trace.times, t, side="left")))


def spin_at(trace: Trace, i: int, t: float, *, left: bool = False) -> int:
    """Single-node version of :func:`state_at` via the per-node index."""
    nt = trace.node_times(i)
    k = int(np.searchsorted(nt, t, side="left" if left else "right"))
    if k == 0:
        return int(trace.initial[i])
    return int(trace.spins[trace.node_positions(i)[k - 1]])


def updates_in(trace: Trace, i: int, t1: float, t2: float) -> list[UpdateEvent]:
    """Events of node i with t1 <= time < t2, in time order."""
    if t1 > t2:
        raise ValueError(f"need t1 <= t2, got {t1} > {t2}")
    nt = trace.node_times(i)
    a = int(np.searchsorted(nt, t1, side="left"))
    b = int(np.searchsorted(nt, t2, side="left"))
    pos = trace.node_positions(i)[a:b]
    return [UpdateEvent(t, int(i), int(s)) for t, s in zip(trace.times[pos].tolist(), trace.spins[pos])]


def _fmt_spin(s: int) -> str:
    return "+1" if s > 0 else "-1"


def write_trace(trace: Trace, path: str | Path) -> None:
    """Line format: ``p mode horizon``, ``init s_0 .. s_{p-1}``, then ``time node spin``."""
    if trace.mode == CONTINUOUS:
        fmt_t = lambda t: "%.17g" % t  # noqa: E731
    else:
        fmt_t = lambda t: "%d" % t  # noqa: E731
    with open(path, "w") as fh:
        fh.write(f"{trace.p} {trace.mode} {fmt_t(trace.horizon)}\n")
        fh.write("init " + " ".join(_fmt_spin(s) for s in trace.initial) + "\n")
        for t, n, s in zip(trace.times.tolist(), trace.nodes.tolist(), trace.spins.tolist()):
            fh.write(f"{fmt_t(t)} {n} {_fmt_spin(s)}\n")


def read_trace(path: str | Path) -> Trace:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: header must be 'p mode horizon'")
        p, mode = int(header[0]), header[1]
        horizon = float(header[2]) if mode == CONTINUOUS else int(header[2])
        init = fh.readline().split()
        if not init or init[0] != "init" or len(init) != p + 1:
            raise ValueError(f"{path}: second line must be 'init' followed by {p} spins")
        rows = [ln.split() for ln in fh if ln.strip()]
    if any(len(r) != 3 for r in rows):
        raise ValueError(f"{path}: event lines must be 'time node spin'")
    conv = float if mode == CONTINUOUS else int
    times = [conv(r[0]) for r in rows]
    nodes = [int(r[1]) for r in rows]
    spins = [int(r[2]) for r in rows]
    return Trace(p, mode, [int(s) for s in init[1:]], times, nodes, spins, horizon)
