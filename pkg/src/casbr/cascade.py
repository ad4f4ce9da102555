"""Independent cascade simulation with group-dependent spillover probabilities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from casbr.designs import BYSTANDER, CONTROL, TREATMENT, validate_assignment
from casbr.errors import InvalidParameterError
from casbr.graph import Graph
from casbr.rng import RngSeed, as_seed

INACTIVE, NEWLY_ACTIVE, ACTIVATED = 0, 1, 2


@dataclass(frozen=True)
class SpilloverProbs:
    """Activation probability keyed by (activator group, target group).

    ``p_ct`` is control activating treatment, ``p_tc`` treatment activating
    control. Any attempt with a bystander on either side uses
    ``p_bystander``.
    """

    p_tt: float = 0.05
    p_ct: float = 0.02
    p_cc: float = 0.02
    p_tc: float = 0.05
    p_bystander: float = 0.02

    def __post_init__(self):
        for name in ("p_tt", "p_ct", "p_cc", "p_tc", "p_bystander"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {p}")

    @classmethod
    def uniform(cls, p: float) -> "SpilloverProbs":
        return cls(p, p, p, p, p)

    def table(self) -> np.ndarray:
        tab = np.full((3, 3), self.p_bystander)
        tab[TREATMENT, TREATMENT] = self.p_tt
        tab[CONTROL, TREATMENT] = self.p_ct
        tab[CONTROL, CONTROL] = self.p_cc
        tab[TREATMENT, CONTROL] = self.p_tc
        return tab


@dataclass(frozen=True, eq=False)
class CascadeTrace:
    """Outcome of one cascade.

    ``activation_step[v]`` is the step at which ``v`` became newly active
    (-1 if never). ``events`` rows are ``(step, activator, activator_group,
    target, target_group)``. ``horizon`` is the first step with no new
    activation.
    """

    activation_step: np.ndarray
    events: np.ndarray
    horizon: int
    # (step, activator, target) of every attempt; only kept when requested
    attempts: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.activation_step)

    def outcomes(self, t: int) -> np.ndarray:
        """Per-node outcome Y at step ``t``: 1 once the node has left the inactive state."""
        s = self.activation_step
        return ((s >= 0) & (s <= t)).astype(np.int8)

    def states(self, t: int) -> np.ndarray:
        s = self.activation_step
        out = np.full(self.n, INACTIVE, dtype=np.int8)
        out[s == t] = NEWLY_ACTIVE
        out[(s >= 0) & (s < t)] = ACTIVATED
        return out

    @property
    def states_by_step(self) -> np.ndarray:
        """Node states for steps ``0..horizon`` as a ``(horizon + 1, n)`` array."""
        return np.stack([self.states(t) for t in range(self.horizon + 1)]) if self.n else \
            np.zeros((self.horizon + 1, 0), dtype=np.int8)

    def active_counts(self, length: int | None = None) -> np.ndarray:
        """Cumulative active-node count for steps ``0..length-1``, frozen after the horizon."""
        length = max(self.horizon, 1) if length is None else length
        s = self.activation_step
        hits = np.bincount(s[(s >= 0) & (s < length)], minlength=length)
        return np.cumsum(hits)


def simulate_cascade(g: Graph, a, seeds, probs: SpilloverProbs, seed: RngSeed | int = 0,
                     record_attempts: bool = False) -> CascadeTrace:
    """Run one independent cascade from ``seeds`` under assignment ``a``.

    Seeds are newly active at step 0. At each later step every newly active
    node tries each still-inactive neighbor once. Several activators
    reaching one target in the same step are tried in ascending id order
    and the first success is recorded. Each directed edge owns one uniform
    draw per cascade, so the process is coupled across probability settings
    and independent of attempt scheduling.
    """
    a = validate_assignment(a, g.n)
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    if seeds.size and (seeds[0] < 0 or seeds[-1] >= g.n):
        raise InvalidParameterError("seed id outside the graph")
    tab = probs.table()
    rng = as_seed(seed).generator()
    coin = rng.random(len(g.indices))

    step = np.full(g.n, -1, dtype=np.int64)
    step[seeds] = 0
    frontier = seeds
    events = []
    tried = []
    t = 0
    indptr, indices, deg = g.indptr, g.indices, g.degree
    while frontier.size:
        t += 1
        lengths = deg[frontier]
        total = int(lengths.sum())
        if total == 0:
            break
        starts = np.repeat(indptr[frontier], lengths)
        offsets = np.arange(total) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        slot = starts + offsets
        act = np.repeat(frontier, lengths)
        tgt = indices[slot]
        inactive = step[tgt] < 0
        ok = inactive & (coin[slot] < tab[a[act], a[tgt]])
        pos = np.flatnonzero(ok)
        new, first = np.unique(tgt[pos], return_index=True)
        if record_attempts:
            # later activators never try a target once an earlier one succeeded
            cutoff = np.full(g.n, total, dtype=np.int64)
            cutoff[new] = pos[first]
            mask = inactive & (np.arange(total) <= cutoff[tgt])
            tried.append(np.column_stack([np.full(int(mask.sum()), t), act[mask], tgt[mask]]))
        if not pos.size:
            break
        win = act[pos[first]]
        step[new] = t
        events.append(np.column_stack([np.full(len(new), t), win, a[win], new, a[new]]))
        frontier = new
    ev = np.concatenate(events) if events else np.zeros((0, 5), dtype=np.int64)
    att = None
    if record_attempts:
        att = np.concatenate(tried).astype(np.int64) if tried else np.zeros((0, 3), dtype=np.int64)
    return CascadeTrace(step, ev.astype(np.int64), t, att)


def simulate_universe(g: Graph, seeds, p: float, seed: RngSeed | int = 0) -> CascadeTrace:
    """Cascade in which every node shares one group and every edge uses ``p``."""
    return simulate_cascade(g, np.ones(g.n, dtype=np.int8), seeds, SpilloverProbs.uniform(p), seed)


def pad_series(series, length: int) -> np.ndarray:
    """Extend a per-step series to ``length`` by repeating its last value."""
    series = np.asarray(series, dtype=float)
    if len(series) >= length:
        return series[:length]
    fill = series[-1] if len(series) else 0.0
    return np.concatenate([series, np.full(length - len(series), fill)])


def true_tte(g: Graph, seeds, p_tt: float, p_cc: float, q: int = 100, seed: RngSeed | int = 0) -> np.ndarray:
    """Per-step total treatment effect from ``q`` all-treated / all-control universe pairs.

    Entry ``t`` is the mean over pairs of the difference in active-node
    share at step ``t``; the last entry is the scalar effect.
    """
    if q < 1:
        raise InvalidParameterError("need at least one simulation pair")
    base = as_seed(seed)
    pairs = []
    for i in range(q):
        treated = simulate_universe(g, seeds, p_tt, base.child(i, TREATMENT))
        control = simulate_universe(g, seeds, p_cc, base.child(i, CONTROL))
        pairs.append((treated, control))
    length = max(1, max(max(t.horizon, c.horizon) for t, c in pairs))
    diff = np.zeros(length)
    for treated, control in pairs:
        diff += treated.active_counts(length) - control.active_counts(length)
    return diff / (q * max(g.n, 1))


def cross_group_activation_counts(trace: CascadeTrace) -> dict[tuple[int, int], int]:
    """Number of successful activations for every (activator group, target group) pair."""
    groups = (CONTROL, TREATMENT, BYSTANDER)
    counts = {(ga, gt): 0 for ga in groups for gt in groups}
    if len(trace.events):
        pairs, hits = np.unique(trace.events[:, [2, 4]], axis=0, return_counts=True)
        for (ga, gt), c in zip(pairs.tolist(), hits.tolist()):
            counts[(ga, gt)] = c
    return counts


def unallowable_events(counts: dict[tuple[int, int], int]) -> int:
    return counts[(TREATMENT, CONTROL)] + counts[(CONTROL, TREATMENT)]


def write_events(trace: CascadeTrace, path) -> None:
    with open(path, "w") as fh:
        fh.write("step,activator,activator_group,target,target_group\n")
        fh.writelines(",".join(map(str, row)) + "\n" for row in trace.events.tolist())
