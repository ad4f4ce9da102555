"""Treatment assignment designs and bystander post-processing.

Assignments are int8 arrays indexed by node id holding ``CONTROL``,
``TREATMENT``, ``BYSTANDER`` or ``UNASSIGNED``.
"""
from __future__ import annotations

import numpy as np

from casbr.errors import (
    InvalidAssignmentError,
    InvalidParameterError,
    InvalidPartitionError,
    UndefinedQuantityError,
)
from casbr.graph import Graph
from casbr.rng import RngSeed, as_seed

CONTROL = 0
TREATMENT = 1
BYSTANDER = 2
UNASSIGNED = -1


def _neighbor_counts(g: Graph, a, v: int) -> tuple[int, int]:
    nb = a[g.neighbors(v)]
    return int(np.count_nonzero(nb == TREATMENT)), int(np.count_nonzero(nb == CONTROL))


def treatment_probability(g: Graph, a, v: int) -> float:
    """Share of ``v``'s treated neighbors among its treated-or-control neighbors."""
    t, c = _neighbor_counts(g, np.asarray(a), v)
    if t + c == 0:
        raise UndefinedQuantityError(f"node {v} has no treated or control neighbor")
    return t / (t + c)


def randomized_assignment(g: Graph, seed: RngSeed | int = 0) -> np.ndarray:
    rng = as_seed(seed).generator()
    return (rng.random(g.n) < 0.5).astype(np.int8)


def cbr_assignment(g: Graph, part, seed: RngSeed | int = 0) -> np.ndarray:
    """Flip one fair coin per cluster; every node inherits its cluster's label."""
    labels = np.asarray(part, dtype=np.int64)
    if labels.shape != (g.n,):
        raise InvalidPartitionError(f"partition covers {labels.size} nodes, graph has {g.n}")
    if g.n == 0:
        return np.zeros(0, dtype=np.int8)
    if labels.min() < 0:
        raise InvalidPartitionError("partition leaves nodes unassigned")
    k = int(labels.max()) + 1
    rng = as_seed(seed).generator()
    coins = (rng.random(k) < 0.5).astype(np.int8)
    return coins[labels]


class WorkCounter:
    """Tally of node and adjacency-entry visits, for complexity checks."""

    def __init__(self):
        self.count = 0


def casbr_assignment(g: Graph, seeds, seed: RngSeed | int = 0, touches: WorkCounter | None = None) -> np.ndarray:
    """Cascade-based randomization.

    Seeds get fair coins. Then, round by round, the unassigned neighbors of
    treated nodes and of control nodes form two shuffled queues; pops
    alternate between them, skipping nodes assigned earlier in the round,
    and each popped node is treated with probability equal to its treated
    share among assigned neighbors. Nodes never reached from a seed get a
    fair coin each.
    """
    seeds = np.asarray(seeds, dtype=np.int64)
    if seeds.size == 0:
        raise InvalidParameterError("CasBR needs at least one cascade seed")
    if seeds.min() < 0 or seeds.max() >= g.n:
        raise InvalidParameterError("seed id outside the graph")
    rng = as_seed(seed).generator()
    adj = g.adj
    z = [UNASSIGNED] * g.n
    work = 0

    uniq = sorted(set(seeds.tolist()))
    for s, u in zip(uniq, rng.random(len(uniq)).tolist()):
        z[s] = TREATMENT if u < 0.5 else CONTROL
    fresh = uniq

    while fresh:
        # Only nodes assigned in the previous round can have unassigned neighbors.
        q_t: list[int] = []
        q_c: list[int] = []
        seen_t: set[int] = set()
        seen_c: set[int] = set()
        for v in fresh:
            q, seen = (q_t, seen_t) if z[v] == TREATMENT else (q_c, seen_c)
            for u in adj[v]:
                work += 1
                if z[u] == UNASSIGNED and u not in seen:
                    seen.add(u)
                    q.append(u)
        rng.shuffle(q_t)
        rng.shuffle(q_c)
        fresh = []
        it, ic = 0, 0
        turn_t = True
        while True:
            # entries assigned earlier in the round are skipped without using a turn
            while it < len(q_t) and z[q_t[it]] != UNASSIGNED:
                it += 1
                work += 1
            while ic < len(q_c) and z[q_c[ic]] != UNASSIGNED:
                ic += 1
                work += 1
            if it == len(q_t) and ic == len(q_c):
                break
            if turn_t and it < len(q_t) or ic == len(q_c):
                v = q_t[it]
                it += 1
            else:
                v = q_c[ic]
                ic += 1
            turn_t = not turn_t
            t = c = 0
            for u in adj[v]:
                work += 1
                if z[u] == TREATMENT:
                    t += 1
                elif z[u] == CONTROL:
                    c += 1
            z[v] = TREATMENT if rng.random() < t / (t + c) else CONTROL
            fresh.append(v)
        fresh.sort()

    out = np.array(z, dtype=np.int8)
    rest = np.flatnonzero(out == UNASSIGNED)
    work += len(rest)
    out[rest] = (rng.random(len(rest)) < 0.5).astype(np.int8)
    if touches is not None:
        touches.count += work + g.n
    return out


def bystander_score(g: Graph, a, v: int) -> float:
    """Absolute gap between treated and control neighbor counts over degree."""
    deg = int(g.degree[v])
    if deg == 0:
        raise UndefinedQuantityError(f"node {v} has no neighbors")
    t, c = _neighbor_counts(g, np.asarray(a), v)
    return abs(t - c) / deg


def bystander_scores(g: Graph, a) -> np.ndarray:
    """Vectorized :func:`bystander_score`; NaN for isolated nodes."""
    a = np.asarray(a)
    nb = a[g.indices]
    t = np.bincount(g.sources, weights=nb == TREATMENT, minlength=g.n)
    c = np.bincount(g.sources, weights=nb == CONTROL, minlength=g.n)
    deg = g.degree
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.abs(t - c) / deg
    s = np.where(deg > 0, s, np.nan)
    return s


def post_process(g: Graph, a, alpha: float) -> np.ndarray:
    """Relabel as bystanders the nodes whose score is below ``alpha``.

    Scores are taken against the input assignment in a single pass;
    isolated nodes are never bystanders.
    """
    if alpha < 0:
        raise InvalidParameterError(f"alpha must be nonnegative, got {alpha}")
    a = np.asarray(a, dtype=np.int8)
    if a.shape != (g.n,) or np.any((a != CONTROL) & (a != TREATMENT)):
        raise InvalidAssignmentError("post-processing needs a full treatment/control assignment")
    scores = bystander_scores(g, a)
    out = a.copy()
    out[np.nan_to_num(scores, nan=np.inf) < alpha] = BYSTANDER
    return out


def cut_edge_fraction(g: Graph, a) -> float:
    """Fraction of all edges joining a treated node to a control node."""
    m = g.num_edges
    if m == 0:
        return 0.0
    a = np.asarray(a)
    e = g.edges
    lu, lv = a[e[:, 0]], a[e[:, 1]]
    cross = ((lu == TREATMENT) & (lv == CONTROL)) | ((lu == CONTROL) & (lv == TREATMENT))
    return int(np.count_nonzero(cross)) / m


def validate_assignment(a, n: int, allow_bystanders: bool = True) -> np.ndarray:
    a = np.asarray(a)
    if a.shape != (n,):
        raise InvalidAssignmentError(f"assignment covers {a.size} nodes, graph has {n}")
    top = BYSTANDER if allow_bystanders else TREATMENT
    bad = (a < CONTROL) | (a > top)
    if a.dtype.kind == "f":
        bad |= a != np.round(a)
    if bad.any():
        v = int(np.flatnonzero(bad)[0])
        raise InvalidAssignmentError(f"node {v} has label {a[v]}")
    return a.astype(np.int8)


def write_assignment(a, path) -> None:
    with open(path, "w") as fh:
        fh.write("node_id,label\n")
        fh.writelines(f"{v},{int(x)}\n" for v, x in enumerate(a))


def read_assignment(path) -> np.ndarray:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    a = np.full(len(rows), UNASSIGNED, dtype=np.int8)
    a[rows[:, 0]] = rows[:, 1]
    return a
