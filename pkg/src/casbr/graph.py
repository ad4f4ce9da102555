"""Undirected simple graphs, edge-list ingestion, generators and diameter."""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from casbr.errors import EdgeListParseError, InvalidParameterError
from casbr.rng import RngSeed, as_seed

_SEP = re.compile(r"[\s,]+")


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph stored in CSR form.

    ``indices[indptr[v]:indptr[v+1]]`` are the neighbors of ``v`` in
    ascending order. Build instances with :meth:`from_edges`.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    original_ids: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, n: int, edges, original_ids=None) -> "Graph":
        """Build a graph on nodes ``0..n-1``; self-loops and duplicate edges are dropped."""
        if n < 0:
            raise InvalidParameterError("node count must be nonnegative")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise InvalidParameterError(f"edge endpoint outside [0, {n})")
        e = e[e[:, 0] != e[:, 1]]
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst.astype(np.int64), original_ids)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @cached_property
    def adj(self) -> list[list[int]]:
        """Plain-list adjacency, for the pure-Python inner loops."""
        return [self.indices[self.indptr[v]:self.indptr[v + 1]].tolist() for v in range(self.n)]

    @cached_property
    def edges(self) -> np.ndarray:
        """Each undirected edge once as a row ``(u, v)`` with ``u < v``."""
        src = np.repeat(np.arange(self.n), self.degree)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    @cached_property
    def sources(self) -> np.ndarray:
        """Source node of every directed CSR slot; pairs with :attr:`indices`."""
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degree)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def to_sparse(self) -> csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def to_edge_list(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in self.edges.tolist())


def load_edge_list(text: str, remap: bool = True) -> Graph:
    """Parse line-oriented edge data.

    Lines hold two integer ids separated by whitespace and/or a comma; blank
    lines and ``#`` comments are skipped. With ``remap`` (the default) the
    distinct ids are relabelled ``0..u-1`` in ascending order, otherwise the
    graph has ``max_id + 1`` nodes. The original ids are kept on
    ``Graph.original_ids`` when remapping.
    """
    pairs = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in _SEP.split(line) if p]
        if len(parts) != 2:
            raise EdgeListParseError(line_no, raw)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(line_no, raw) from None
        if u < 0 or v < 0:
            raise EdgeListParseError(line_no, raw)
        pairs.append((u, v))

    if not pairs:
        return Graph.from_edges(0, np.empty((0, 2), dtype=np.int64))

    e = np.array(pairs, dtype=np.int64)
    loops = int(np.count_nonzero(e[:, 0] == e[:, 1]))
    if loops:
        warnings.warn(f"dropped {loops} self-loop(s) from edge list", stacklevel=2)
    if remap:
        ids, inverse = np.unique(e, return_inverse=True)
        return Graph.from_edges(len(ids), inverse.reshape(-1, 2), original_ids=ids)
    return Graph.from_edges(int(e.max()) + 1, e)


def read_edge_list(path, remap: bool = True) -> Graph:
    with open(path) as fh:
        return load_edge_list(fh.read(), remap=remap)


def generate_barabasi_albert(n: int, m: int, seed: RngSeed | int = 0) -> Graph:
    """Preferential attachment grown from an ``m``-node clique.

    Each new node attaches to ``m`` distinct existing nodes chosen with
    probability proportional to their current degree.
    """
    if not (m >= 1 and n > m):
        raise InvalidParameterError(f"Barabasi-Albert needs n > m >= 1, got n={n}, m={m}")
    rng = as_seed(seed).generator()
    edges = [(i, j) for i in range(m) for j in range(i + 1, m)]
    # each node appears once per incident edge end, so uniform picks are degree-weighted
    ends = [v for e in edges for v in e]
    for new in range(m, n):
        targets: set[int] = set()
        if not ends:
            # only possible for m == 1: the single core node has degree 0
            targets.add(0)
        while len(targets) < m:
            targets.add(ends[int(rng.integers(len(ends)))])
        for t in sorted(targets):
            edges.append((t, new))
            ends.extend((t, new))
    return Graph.from_edges(n, edges)


def _burn_count(rng: np.random.Generator, p: float, available: int) -> int:
    # Geometric fan-out with mean p / (1 - p), the usual forest-fire convention.
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return available
    return min(available, int(rng.geometric(1.0 - p)) - 1)


def generate_forest_fire(n: int, p_f: float, p_b: float, seed: RngSeed | int = 0) -> Graph:
    """Forest-Fire growth model, recorded as an undirected graph.

    Growth is tracked as a directed graph (new node -> burned node) so that
    forward burning follows out-links and backward burning follows in-links.
    From each burned node the new node links to a geometric number of
    unburned out-neighbors (mean p_f/(1-p_f)) and in-neighbors (mean
    r/(1-r) with r = p_f * p_b, i.e. p_b is the backward burning ratio),
    which then burn in turn.
    """
    if n < 1:
        raise InvalidParameterError("forest fire needs n >= 1")
    for name, p in (("p_f", p_f), ("p_b", p_b)):
        if not 0.0 <= p <= 1.0:
            raise InvalidParameterError(f"{name} must lie in [0, 1], got {p}")
    rng = as_seed(seed).generator()
    out_links: list[list[int]] = [[] for _ in range(n)]
    in_links: list[list[int]] = [[] for _ in range(n)]
    edges = []
    for new in range(1, n):
        ambassador = int(rng.integers(new))
        burned = {ambassador}
        queue = [ambassador]
        head = 0
        while head < len(queue):
            w = queue[head]
            head += 1
            for links, p in ((out_links[w], p_f), (in_links[w], p_f * p_b)):
                fresh = [x for x in links if x not in burned]
                k = _burn_count(rng, p, len(fresh))
                if k:
                    picked = rng.choice(len(fresh), size=k, replace=False)
                    for i in sorted(picked.tolist()):
                        burned.add(fresh[i])
                        queue.append(fresh[i])
        for t in queue:
            out_links[new].append(t)
            in_links[t].append(new)
            edges.append((t, new))
    return Graph.from_edges(n, edges)


def diameter(g: Graph, chunk: int = 256) -> int:
    """Largest finite shortest-path distance over all node pairs.

    On a disconnected graph this is the maximum of the per-component
    diameters. Computed with BFS from every node, in chunks to bound memory.
    """
    if g.n == 0 or g.num_edges == 0:
        return 0
    mat = g.to_sparse()
    best = 0
    for start in range(0, g.n, chunk):
        idx = np.arange(start, min(start + chunk, g.n))
        dist = shortest_path(mat, directed=False, unweighted=True, indices=idx)
        finite = dist[np.isfinite(dist)]
        if finite.size:
            best = max(best, int(finite.max()))
    return best
