"""Restreaming linear deterministic greedy (reLDG) balanced partitioning."""
from __future__ import annotations

import heapq
import math

import numpy as np

from casbr.errors import InvalidParameterError, InvalidPartitionError
from casbr.graph import Graph
from casbr.rng import RngSeed, as_seed


def _stream_pass(adj, order, labels, k, capacity):
    """One streaming pass; ``labels`` holds the previous pass (or -1) and is updated in place."""
    sizes = [0] * k
    # lazy min-heap of (size, cluster); sizes only grow within a pass
    smallest = [(0, c) for c in range(k)]
    for v in order:
        counts: dict[int, int] = {}
        for u in adj[v]:
            c = labels[u]
            if c >= 0:
                counts[c] = counts.get(c, 0) + 1
        best, best_cnt = -1, 0
        for c, cnt in counts.items():
            if sizes[c] >= capacity:
                continue
            if cnt > best_cnt or (cnt == best_cnt and (sizes[c], c) < (sizes[best], best)):
                best, best_cnt = c, cnt
        if best < 0:
            # no neighbor-holding cluster has room: smallest cluster, lowest id
            while sizes[smallest[0][1]] != smallest[0][0]:
                heapq.heappop(smallest)
            best = smallest[0][1]
        labels[v] = best
        sizes[best] += 1
        heapq.heappush(smallest, (sizes[best], best))
    return sizes


def reldg_partition(g: Graph, k: int, passes: int = 10, seed: RngSeed | int = 0,
                    history: list | None = None) -> np.ndarray:
    """Partition ``g`` into ``k`` clusters of at most ``ceil(n/k)`` nodes.

    Nodes are streamed in one seeded random order, fixed across passes. Each
    node joins the below-capacity cluster holding most of its neighbors
    (ties: smaller cluster, then lower id). Later passes count neighbors by
    their most recent label, so the previous pass informs placement. If
    ``history`` is a list, a copy of the labels after every pass is appended.
    """
    if not 1 <= k <= max(g.n, 1):
        raise InvalidParameterError(f"cluster count k={k} must lie in [1, {g.n}]")
    if passes < 1:
        raise InvalidParameterError("need at least one pass")
    if g.n == 0:
        return np.zeros(0, dtype=np.int64)
    capacity = math.ceil(g.n / k)
    order = as_seed(seed).generator().permutation(g.n).tolist()
    labels = [-1] * g.n
    adj = g.adj
    for _ in range(passes):
        _stream_pass(adj, order, labels, k, capacity)
        if history is not None:
            history.append(np.array(labels, dtype=np.int64))
    return np.array(labels, dtype=np.int64)


def cut_edges(g: Graph, labels) -> int:
    """Number of edges whose endpoints carry different labels."""
    labels = np.asarray(labels)
    e = g.edges
    return int(np.count_nonzero(labels[e[:, 0]] != labels[e[:, 1]]))


def validate_partition(labels, n: int, k: int | None = None) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise InvalidPartitionError(f"partition covers {labels.size} nodes, graph has {n}")
    if n and labels.min() < 0:
        raise InvalidPartitionError("partition leaves nodes unassigned")
    if k is not None and n and labels.max() >= k:
        raise InvalidPartitionError(f"cluster label {labels.max()} outside [0, {k})")
    return labels


def write_partition(labels, path) -> None:
    with open(path, "w") as fh:
        fh.write("node_id,cluster_id\n")
        fh.writelines(f"{v},{int(c)}\n" for v, c in enumerate(labels))


def read_partition(path) -> np.ndarray:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    labels = np.full(len(rows), -1, dtype=np.int64)
    labels[rows[:, 0]] = rows[:, 1]
    return labels
