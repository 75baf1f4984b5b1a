"""Zero-field Ising models on bounded-degree graphs.

Couplings are stored sparsely, one value per unordered edge ``(i, j)`` with
``i < j``.  Node indices are 0-based everywhere, including the model file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

Edge = tuple[int, int]


def canonical_edge(i: int, j: int) -> Edge:
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0..p-1``."""

    p: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.p < 0:
            raise ValueError(f"node count must be nonnegative, got {self.p}")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise ValueError(f"edge ({i}, {j}) has a node outside [0, {self.p})")
            e = canonical_edge(i, j)
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[Edge]) -> "Graph":
        return cls(int(p), tuple(canonical_edge(i, j) for i, j in edges))

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.p)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(n)) for n in nbrs)

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def has_edge(self, i: int, j: int) -> bool:
        return canonical_edge(i, j) in self.edge_set


@dataclass(frozen=True)
class ParamBounds:
    alpha: float
    beta: float
    d: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta < self.alpha:
            raise ValueError(f"need alpha <= beta, got alpha={self.alpha}, beta={self.beta}")
        if self.d < 0:
            raise ValueError(f"d must be nonnegative, got {self.d}")


@dataclass(frozen=True)
class IsingModel:
    """Graph plus sparse couplings plus the declared bounds.

    Construction does not enforce membership in the admissible parameter set;
    call :func:`validate_model` (or :meth:`violations`) for that.
    """

    graph: Graph
    couplings: Mapping[Edge, float]
    bounds: ParamBounds
    _couplings: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "_couplings",
            {canonical_edge(i, j): float(v) for (i, j), v in dict(self.couplings).items()},
        )

    @property
    def p(self) -> int:
        return self.graph.p

    def theta(self, i: int, j: int) -> float:
        return self._couplings.get(canonical_edge(i, j), 0.0)

    def violations(self) -> list[str]:
        return validate_model(self.graph, self._couplings, self.bounds)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Neighbor lists as ``(ptr, idx, weight)`` arrays for the compiled kernels."""
        adj = self.graph.adjacency
        ptr = np.zeros(self.p + 1, dtype=np.int64)
        for i, nb in enumerate(adj):
            ptr[i + 1] = ptr[i] + len(nb)
        idx = np.fromiter((j for nb in adj for j in nb), dtype=np.int64, count=int(ptr[-1]))
        w = np.fromiter(
            (self.theta(i, j) for i, nb in enumerate(adj) for j in nb),
            dtype=np.float64,
            count=int(ptr[-1]),
        )
        return ptr, idx, w

    @cached_property
    def dense(self) -> np.ndarray:
        """Symmetric ``p x p`` coupling matrix; only for small models."""
        if self.p > 2000:
            raise ValueError("dense coupling matrix requested for a large model")
        m = np.zeros((self.p, self.p))
        for (i, j), v in self._couplings.items():
            m[i, j] = m[j, i] = v
        return m


def make_model(
    p: int,
    couplings: Mapping[Edge, float],
    alpha: float,
    beta: float,
    d: int | None = None,
) -> IsingModel:
    """Build a model whose graph is the support of ``couplings``.

    Zero couplings are dropped, so ``make_model(p, {}, ...)`` is the empty graph.
    """
    nz = {canonical_edge(i, j): float(v) for (i, j), v in couplings.items() if v != 0}
    graph = Graph.from_edges(p, nz)
    if d is None:
        d = max(graph.max_degree, 1)
    return IsingModel(graph, nz, ParamBounds(alpha, beta, d))


def validate_model(graph: Graph, theta: Mapping[Edge, float], bounds: ParamBounds) -> list[str]:
    """Every reason the couplings fall outside the admissible set for ``graph``.

    An empty list means the model is admissible.
    """
    report = []
    for (i, j), v in sorted(theta.items()):
        e = canonical_edge(i, j)
        if not graph.has_edge(*e):
            if v != 0:
                report.append(f"off-edge coupling theta_{e[0]}{e[1]} = {v} is nonzero")
            continue
        if abs(v) < bounds.alpha:
            report.append(f"|theta_{e[0]}{e[1]}| = {abs(v)} < alpha = {bounds.alpha}")
        if abs(v) > bounds.beta:
            report.append(f"|theta_{e[0]}{e[1]}| = {abs(v)} > beta = {bounds.beta}")
    for e in graph.edges:
        if e not in theta and (e[1], e[0]) not in theta:
            report.append(f"edge {e} has no coupling (0 < alpha = {bounds.alpha})")
    for i in range(graph.p):
        if graph.degree(i) > bounds.d:
            report.append(f"degree of node {i} is {graph.degree(i)} > d = {bounds.d}")
    return report


def as_config(spins, p: int | None = None) -> np.ndarray:
    s = np.asarray(spins, dtype=np.int8)
    if s.ndim != 1:
        raise ValueError("a spin configuration is one-dimensional")
    if p is not None and s.size != p:
        raise ValueError(f"configuration has {s.size} spins, expected {p}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("spins must be -1 or +1")
    return s


def _check_node(model: IsingModel, i: int) -> None:
    if not 0 <= i < model.p:
        raise IndexError(f"node {i} outside [0, {model.p})")


def local_field(model: IsingModel, config, i: int) -> float:
    _check_node(model, i)
    return float(sum(model.theta(i, j) * int(config[j]) for j in model.graph.neighbors(i)))


def plus_prob(field_value: float) -> float:
    """exp(2S) / (1 + exp(2S)) without overflow."""
    if field_value >= 0:
        return 1.0 / (1.0 + math.exp(-2.0 * field_value))
    e = math.exp(2.0 * field_value)
    return e / (1.0 + e)


def update_prob_plus(model: IsingModel, config, i: int) -> float:
    return plus_prob(local_field(model, config, i))


def min_update_prob(beta: float, d: int) -> float:
    if beta < 0 or d < 0:
        raise ValueError("beta and d must be nonnegative")
    return 0.5 * math.exp(-2.0 * beta * d)


def read_model(path: str | Path) -> IsingModel:
    """Parse ``p d alpha beta`` followed by ``i j theta`` lines."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln[0].startswith("#")]
    if not lines or len(lines[0]) != 4:
        raise ValueError(f"{path}: header must be 'p d alpha beta'")
    try:
        p, d = int(lines[0][0]), int(lines[0][1])
        alpha, beta = float(lines[0][2]), float(lines[0][3])
        theta = {}
        for n, ln in enumerate(lines[1:], start=2):
            if len(ln) != 3:
                raise ValueError(f"line {n}: expected 'i j theta'")
            theta[(int(ln[0]), int(ln[1]))] = float(ln[2])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    graph = Graph.from_edges(p, theta)
    return IsingModel(graph, theta, ParamBounds(alpha, beta, d))


def write_model(model: IsingModel, path: str | Path) -> None:
    b = model.bounds
    out = [f"{model.p} {b.d} {b.alpha!r} {b.beta!r}"]
    out += [f"{i} {j} {model.theta(i, j)!r}" for i, j in model.graph.edges]
    Path(path).write_text("\n".join(out) + "\n")
