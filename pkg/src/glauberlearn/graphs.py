"""Graph generators and coupling assignment for experiments."""

from __future__ import annotations

import numpy as np

from .model import Edge, Graph, IsingModel, ParamBounds, read_model

GENERATORS = ("empty", "single-edge", "path", "cycle", "grid", "random-d-regular", "clique-ensemble", "file")


def clique_ensemble_layout(p: int, d: int) -> tuple[list[list[int]], list[Edge], list[Edge]]:
    """Cliques of size d+1 on consecutive nodes, each with the pairing 2m <-> 2m+1.

    Returns (cliques, matching edges, other clique edges).  Leftover nodes stay isolated.
    """
    if d < 1 or d % 2 == 0:
        raise ValueError(f"clique ensemble needs odd d >= 1, got {d}")
    if p < d + 1:
        raise ValueError(f"need p >= d + 1, got p={p}, d={d}")
    size = d + 1
    cliques, matching, rest = [], [], []
    for c in range(p // size):
        nodes = list(range(c * size, (c + 1) * size))
        cliques.append(nodes)
        for a in range(size):
            for b in range(a + 1, size):
                e = (nodes[a], nodes[b])
                (matching if (a % 2 == 0 and b == a + 1) else rest).append(e)
    return cliques, matching, rest


def random_regular_edges(p: int, d: int, rng: np.random.Generator, max_tries: int = 10_000) -> list[Edge]:
    """Pairing model: shuffle p*d stubs, pair them up, reject self-loops and multi-edges."""
    if (p * d) % 2:
        raise ValueError(f"no {d}-regular graph on {p} nodes (p*d odd)")
    if d >= p:
        raise ValueError(f"need d < p, got d={d}, p={p}")
    stubs = np.repeat(np.arange(p), d)
    for _ in range(max_tries):
        perm = rng.permutation(stubs).reshape(-1, 2)
        a, b = perm.min(axis=1), perm.max(axis=1)
        if np.any(a == b):
            continue
        edges = set(zip(a.tolist(), b.tolist()))
        if len(edges) == len(a):
            return sorted(edges)
    raise RuntimeError(f"pairing model failed {max_tries} times for p={p}, d={d}")


def generate_graph(
    name: str,
    p: int = 0,
    d: int = 2,
    seed: int = 0,
    rows: int | None = None,
    cols: int | None = None,
    path: str | None = None,
) -> Graph:
    if name == "empty":
        return Graph.from_edges(p, [])
    if name == "single-edge":
        if p < 2:
            raise ValueError("single-edge graph needs p >= 2")
        return Graph.from_edges(p, [(0, 1)])
    if name == "path":
        return Graph.from_edges(p, [(i, i + 1) for i in range(p - 1)])
    if name == "cycle":
        if p < 3:
            raise ValueError("cycle needs p >= 3")
        return Graph.from_edges(p, [(i, (i + 1) % p) for i in range(p)])
    if name == "grid":
        if rows is None or cols is None:
            raise ValueError("grid needs rows and cols")
        idx = lambda r, c: r * cols + c  # noqa: E731
        edges = [(idx(r, c), idx(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
        edges += [(idx(r, c), idx(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
        return Graph.from_edges(rows * cols, edges)
    if name == "random-d-regular":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6EA9]))
        return Graph.from_edges(p, random_regular_edges(p, d, rng))
    if name == "clique-ensemble":
        _, matching, rest = clique_ensemble_layout(p, d)
        return Graph.from_edges(p, matching + rest)
    if name == "file":
        if path is None:
            raise ValueError("file graph needs a path")
        return read_model(path).graph
    raise ValueError(f"unknown graph generator {name!r}; choose from {', '.join(GENERATORS)}")


def assign_couplings(
    graph: Graph,
    theta: float,
    signs: str = "random",
    seed: int = 0,
    alpha: float | None = None,
    beta: float | None = None,
    d: int | None = None,
) -> IsingModel:
    """Every edge gets magnitude ``theta``; signs are all positive ("const") or
    independent fair +-1 ("random")."""
    if signs == "const":
        s = np.ones(len(graph.edges))
    elif signs == "random":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5161]))
        s = rng.choice([-1.0, 1.0], size=len(graph.edges))
    else:
        raise ValueError(f"unknown sign mode {signs!r}")
    couplings = {e: float(v) * theta for e, v in zip(graph.edges, s)}
    # bounds are unused by the dynamics; with theta = 0 any positive pair will do
    a = alpha if alpha is not None else (abs(theta) or 1.0)
    b = beta if beta is not None else max(abs(theta), a)
    if d is None:
        d = max(graph.max_degree, 1)
    return IsingModel(graph, couplings, ParamBounds(a, b, d))
