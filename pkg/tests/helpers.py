"""Independent oracles and shared fixtures for the test suite.

Nothing here calls into the package except to build inputs; expected values
are recomputed from first principles (BFS, exhaustive enumeration, closed
form expectations).
"""
from __future__ import annotations

import itertools
from collections import deque
from functools import lru_cache

import numpy as np

from casbr.cascade import SpilloverProbs, simulate_cascade, simulate_universe, true_tte
from casbr.designs import TREATMENT
from casbr.graph import Graph, load_edge_list
from casbr.rng import RngSeed

# 12-node toy: seeds 0,1,2; one-hop ring 3..7; two-hop ring 8..11.
# The duplicate "3 0" and the self-loop are deliberate.
TOY_EDGES = """\
# toy cascade graph
0 3
0 4
1 4
1 5
1 6
2 6
2 7
3 4
3 0
3 8
4 8
5 9
6 10
7 10
7 11
9 10
5 5
"""
TOY_SEEDS = [0, 1, 2]
TOY_ONE_HOP = [3, 4, 5, 6, 7]
TOY_TWO_HOP = [8, 9, 10, 11]

# 15 nodes, 15 edges: a big star, a small star and a 4-cycle tail.
GREEDY_EDGES = [(0, i) for i in range(1, 7)] + [(0, 7), (7, 8), (7, 9), (7, 10),
                                                  (10, 11), (11, 12), (12, 13), (13, 14), (14, 11)]


def toy_graph() -> Graph:
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return load_edge_list(TOY_EDGES)


def toy_edge_set() -> set[frozenset]:
    out = set()
    for line in TOY_EDGES.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        u, v = map(int, line.split())
        if u != v:
            out.add(frozenset((u, v)))
    return out


def adjacency(n, edges) -> list[set]:
    adj = [set() for _ in range(n)]
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def bfs(adj, sources) -> list[int]:
    dist = [-1] * len(adj)
    q = deque()
    for s in sources:
        dist[s] = 0
        q.append(s)
    while q:
        u = q.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def brute_diameter(adj) -> int:
    best = 0
    for s in range(len(adj)):
        best = max(best, max(bfs(adj, [s]), default=0))
    return best


def random_edges(rng, n, m):
    return [tuple(rng.choice(n, size=2, replace=False).tolist()) for _ in range(m)]


class ExactSpread:
    """Exact IC spread by enumerating every live-edge configuration."""

    def __init__(self, n, edges, p):
        edges = np.asarray(edges, dtype=np.int64)
        m = len(edges)
        bits = ((np.arange(2 ** m)[:, None] >> np.arange(m)) & 1).astype(bool)
        k = bits.sum(axis=1)
        self.weight = p ** k * (1 - p) ** (m - k)
        labels = np.tile(np.arange(n), (2 ** m, 1))
        while True:
            old = labels.copy()
            for j, (u, v) in enumerate(edges):
                live = bits[:, j]
                low = np.minimum(labels[:, u], labels[:, v])
                labels[live, u] = low[live]
                labels[live, v] = low[live]
            if np.array_equal(old, labels):
                break
        self.labels = labels
        self.n = n

    def spread(self, nodes) -> float:
        if not len(nodes):
            return 0.0
        roots = self.labels[:, list(nodes)]
        covered = (self.labels[:, :, None] == roots[:, None, :]).any(axis=2)
        return float(self.weight @ covered.sum(axis=1))

    def greedy(self, k) -> list[int]:
        chosen: list[int] = []
        for _ in range(k):
            base = self.spread(chosen)
            gains = [self.spread(chosen + [v]) - base if v not in chosen else -1.0 for v in range(self.n)]
            chosen.append(int(np.argmax(gains)))
        return chosen

    def margins(self, k) -> list[float]:
        """Gap between best and runner-up gain in each exact greedy round."""
        chosen, out = [], []
        for _ in range(k):
            base = self.spread(chosen)
            gains = sorted((self.spread(chosen + [v]) - base for v in range(self.n) if v not in chosen), reverse=True)
            out.append(gains[0] - gains[1])
            chosen.append(self.greedy(len(chosen) + 1)[-1])
        return out


def path_graph(n) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


# Monte Carlo runs used by both the unit tests and the acceptance suite;
# cached so a full pytest session pays for each only once.

@lru_cache(maxsize=None)
def single_edge_rate(runs: int = 100_000, p: float = 0.05) -> float:
    g = Graph.from_edges(2, [(0, 1)])
    a = np.full(2, TREATMENT, dtype=np.int8)
    probs = SpilloverProbs(p_tt=p, p_ct=0.0, p_cc=0.0, p_tc=0.0, p_bystander=0.0)
    root = RngSeed(11)
    hits = sum(int(simulate_cascade(g, a, [0], probs, root.child(i)).activation_step[1] >= 0) for i in range(runs))
    return hits / runs


@lru_cache(maxsize=None)
def path_universe_counts(runs: int = 100_000, p: float = 0.5) -> np.ndarray:
    g = path_graph(3)
    root = RngSeed(12)
    return np.array([int((simulate_universe(g, [0], p, root.child(i)).activation_step >= 0).sum())
                     for i in range(runs)])


@lru_cache(maxsize=None)
def path_true_tte(q: int = 100_000) -> np.ndarray:
    return true_tte(path_graph(3), [0], 0.5, 0.2, q, RngSeed(13))


@lru_cache(maxsize=None)
def greedy_match_rate(seeds: int = 40) -> tuple[int, int]:
    from casbr.seeding import new_greedy_ic
    g = Graph.from_edges(15, GREEDY_EDGES)
    want = ExactSpread(15, GREEDY_EDGES, 0.3).greedy(2)
    hits = sum(new_greedy_ic(g, 2, 0.3, 500, RngSeed(s)).tolist() == want for s in range(seeds))
    return hits, seeds


def all_two_partitions(n):
    """Every balanced split of range(n) into two labelled halves."""
    for half in itertools.combinations(range(n), n // 2):
        lab = np.ones(n, dtype=np.int64)
        lab[list(half)] = 0
        yield lab
