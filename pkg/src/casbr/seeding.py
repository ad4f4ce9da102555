"""Cascade seed selection: uniform sampling and NewGreedyIC."""
from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from casbr.errors import InvalidParameterError
from casbr.graph import Graph
from casbr.rng import RngSeed, as_seed


def random_seeds(g: Graph, fraction: float, seed: RngSeed | int = 0) -> np.ndarray:
    """Sample ``round(fraction * n)`` distinct nodes uniformly; returned sorted."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidParameterError(f"seed fraction must lie in (0, 1], got {fraction}")
    k = int(round(fraction * g.n))
    if k < 1:
        raise InvalidParameterError(f"fraction {fraction} of {g.n} nodes yields no seeds")
    rng = as_seed(seed).generator()
    return np.sort(rng.choice(g.n, size=k, replace=False)).astype(np.int64)


def _live_edge_components(g: Graph, p: float, rng: np.random.Generator) -> np.ndarray:
    e = g.edges
    keep = e[rng.random(len(e)) < p]
    mat = csr_matrix((np.ones(len(keep), dtype=np.int8), (keep[:, 0], keep[:, 1])), shape=(g.n, g.n))
    _, labels = connected_components(mat, directed=False)
    return labels


def marginal_gains(g: Graph, chosen, p: float, r: int, seed: RngSeed) -> np.ndarray:
    """Summed (over ``r`` live-edge samples) increase in reach from adding each node.

    Already chosen nodes get -1 so they are never re-selected.
    """
    total = np.zeros(g.n, dtype=np.int64)
    chosen = np.asarray(chosen, dtype=np.int64)
    for i in range(r):
        labels = _live_edge_components(g, p, seed.child(i).generator())
        sizes = np.bincount(labels, minlength=g.n)
        gain = sizes[labels]
        if len(chosen):
            covered = np.zeros(g.n, dtype=bool)
            covered[labels[chosen]] = True
            gain = np.where(covered[labels], 0, gain)
        total += gain
    if len(chosen):
        total[chosen] = -1
    return total


def new_greedy_ic(g: Graph, k: int, p: float = 0.01, r: int = 100, seed: RngSeed | int = 0) -> np.ndarray:
    """Greedy influence maximization with fresh live-edge samples per round.

    In each of ``k`` rounds, ``r`` live-edge graphs are drawn by keeping
    every edge with probability ``p``; a candidate's gain is the number of
    nodes in its live component not already reached by the chosen set. The
    candidate with the highest mean gain is added (lowest id on ties).
    Returns node ids in selection order.
    """
    if not 0 <= k <= g.n:
        raise InvalidParameterError(f"seed count k={k} must lie in [0, {g.n}]")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"propagation probability must lie in [0, 1], got {p}")
    if r < 1:
        raise InvalidParameterError("need at least one simulation round")
    base = as_seed(seed)
    chosen: list[int] = []
    for rnd in range(k):
        gains = marginal_gains(g, chosen, p, r, base.child(rnd))
        chosen.append(int(np.argmax(gains)))
    return np.array(chosen, dtype=np.int64)


def read_seeds(path) -> np.ndarray:
    with open(path) as fh:
        return np.array([int(line) for line in fh if line.strip()], dtype=np.int64)


def write_seeds(seeds, path) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{int(s)}\n" for s in seeds)


def estimated_spread(g: Graph, nodes, p: float, r: int, seed: RngSeed | int = 0) -> float:
    """Mean number of nodes reachable from ``nodes`` over ``r`` live-edge samples."""
    base = as_seed(seed)
    nodes = np.asarray(nodes, dtype=np.int64)
    total = 0
    for i in range(r):
        labels = _live_edge_components(g, p, base.child(i).generator())
        if len(nodes):
            total += int(np.isin(labels, labels[nodes]).sum())
    return total / r
