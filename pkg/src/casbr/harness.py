"""Experiment pipeline: configuration, runs, CSV tables and SVG charts."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from casbr.cascade import SpilloverProbs, cross_group_activation_counts, pad_series, simulate_cascade, true_tte
from casbr.designs import (
    cbr_assignment,
    casbr_assignment,
    cut_edge_fraction,
    post_process,
    randomized_assignment,
)
from casbr.errors import CasbrError, InvalidParameterError
from casbr.graph import Graph, generate_barabasi_albert, generate_forest_fire, read_edge_list
from casbr.metrics import ExperimentResult, estimated_tte_series, excluded_fraction, rmse
from casbr.partitioning import reldg_partition
from casbr.rng import RngSeed
from casbr.seeding import new_greedy_ic, random_seeds

log = logging.getLogger(__name__)

# Fixed order: a design's random streams do not depend on which others run.
DESIGNS = ("randomized", "cbr", "casbr", "randomized-post", "cbr-post", "casbr-post")
BASE_DESIGNS = ("randomized", "cbr", "casbr")

# stream tags under the master seed
_GRAPH, _SEEDS, _TRUTH, _PARTITION, _ASSIGN, _CASCADE = range(6)


class InvalidConfigError(CasbrError, ValueError):
    pass


class ExperimentError(CasbrError, RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        super().__init__(f"{stage} failed: {cause}")


@dataclass
class ExperimentConfig:
    graph_path: str | None = None
    generator: str | None = None  # "ba" or "ff"
    generator_params: list = field(default_factory=list)  # [n, m] or [n, p_f, p_b]
    seed_method: str = "random"  # "random" or "greedy"
    seed_fraction: float = 0.1
    greedy: list = field(default_factory=lambda: [10, 0.01, 100])  # k, p, r
    designs: list = field(default_factory=lambda: list(BASE_DESIGNS))
    alpha: float = 0.01
    probs: SpilloverProbs = field(default_factory=SpilloverProbs)
    q: int = 100
    truth_q: int | None = None
    repetitions: int = 1
    master_seed: int = 0
    clusters: int | None = None  # defaults to the number of seeds
    passes: int = 10
    # "repetition": one assignment per repetition shared by all q cascades;
    # "simulation": a fresh assignment for every cascade
    redraw: str = "repetition"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        probs = data.pop("probs", None)
        try:
            if isinstance(probs, dict):
                data["probs"] = SpilloverProbs(**probs)
            elif probs is not None:
                data["probs"] = SpilloverProbs(*probs)
        except (TypeError, ValueError) as exc:
            raise InvalidConfigError(f"bad probs: {exc}") from None
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfigError(f"cannot read config {path}: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.q < 1 or self.repetitions < 1 or (self.truth_q is not None and self.truth_q < 1):
            raise InvalidConfigError("q, truth_q and repetitions must be >= 1")
        if self.alpha < 0:
            raise InvalidConfigError("alpha must be >= 0")
        if (self.graph_path is None) == (self.generator is None):
            raise InvalidConfigError("give exactly one of graph_path or generator")
        if self.generator is not None:
            want = {"ba": 2, "ff": 3}.get(self.generator)
            if want is None or len(self.generator_params) != want:
                raise InvalidConfigError(f"generator must be 'ba' [n, m] or 'ff' [n, p_f, p_b], got {self.generator!r}")
        if self.seed_method not in ("random", "greedy"):
            raise InvalidConfigError(f"seed_method must be 'random' or 'greedy', got {self.seed_method!r}")
        if self.seed_method == "greedy" and len(self.greedy) != 3:
            raise InvalidConfigError("greedy needs [k, p, r]")
        bad = [d for d in self.designs if d not in DESIGNS]
        if bad or not self.designs:
            raise InvalidConfigError(f"unknown designs {bad}; choose from {DESIGNS}")
        if self.clusters is not None and self.clusters < 1:
            raise InvalidConfigError("clusters must be >= 1")
        if self.redraw not in ("repetition", "simulation"):
            raise InvalidConfigError(f"redraw must be 'repetition' or 'simulation', got {self.redraw!r}")
        if self.passes < 1:
            raise InvalidConfigError("passes must be >= 1")


def build_graph(cfg: ExperimentConfig) -> Graph:
    root = RngSeed(cfg.master_seed)
    if cfg.graph_path is not None:
        return read_edge_list(cfg.graph_path)
    if cfg.generator == "ba":
        n, m = cfg.generator_params
        return generate_barabasi_albert(int(n), int(m), root.child(_GRAPH))
    n, pf, pb = cfg.generator_params
    return generate_forest_fire(int(n), float(pf), float(pb), root.child(_GRAPH))


def select_seeds(g: Graph, cfg: ExperimentConfig, rep: int) -> np.ndarray:
    stream = RngSeed(cfg.master_seed).child(_SEEDS, rep)
    if cfg.seed_method == "random":
        return random_seeds(g, cfg.seed_fraction, stream)
    k, p, r = cfg.greedy
    return new_greedy_ic(g, int(k), float(p), int(r), stream)


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except (CasbrError, OSError) as exc:
        raise ExperimentError(name, exc) from exc


def evaluate_design(g: Graph, assignments, seeds, probs: SpilloverProbs, truth, q: int,
                    stream: RngSeed, design: str = "assignment", rep: int = 0) -> ExperimentResult:
    """Run ``q`` cascades and score them against a true-TTE series.

    ``assignments`` holds one assignment (shared by every cascade) or ``q``
    of them (cascade ``i`` uses the ``i``-th); cascade ``i`` draws from
    ``stream.child(i)``.
    """
    assignments = list(assignments)
    pick = [assignments[i % len(assignments)] for i in range(q)]
    traces = [
        _stage("cascade simulation", simulate_cascade, g, a, seeds, probs, stream.child(i))
        for i, a in enumerate(pick)
    ]
    length = max([len(truth)] + [t.horizon for t in traces])
    est = np.stack([_stage("estimation", estimated_tte_series, t, a, length) for t, a in zip(traces, pick)])
    tau = pad_series(truth, length)
    return ExperimentResult(
        design=design,
        repetition=rep,
        estimates=est,
        truth=tau,
        rmse_by_step=rmse(est, tau),
        cut_edge_fraction=float(np.mean([cut_edge_fraction(g, a) for a in assignments])),
        excluded_fraction=float(np.mean([excluded_fraction(a) for a in assignments])),
        cross_group_counts=[cross_group_activation_counts(t) for t in traces],
    )


def _run_repetition(g: Graph, cfg: ExperimentConfig, rep: int) -> list[ExperimentResult]:
    root = RngSeed(cfg.master_seed)
    seeds = _stage("seed selection", select_seeds, g, cfg, rep)
    truth = _stage("true TTE", true_tte, g, seeds, cfg.probs.p_tt, cfg.probs.p_cc,
                   cfg.truth_q or cfg.q, root.child(_TRUTH, rep))

    needed = {d.removesuffix("-post") for d in cfg.designs}
    part = None
    if "cbr" in needed:
        k = cfg.clusters or len(seeds)
        part = _stage("reLDG partition", reldg_partition, g, min(k, g.n), cfg.passes,
                      root.child(_PARTITION, rep))

    def draw(base, *key):
        stream = root.child(_ASSIGN, rep, DESIGNS.index(base), *key)
        if base == "randomized":
            return _stage("randomized assignment", randomized_assignment, g, stream)
        if base == "cbr":
            return _stage("CBR assignment", cbr_assignment, g, part, stream)
        return _stage("CasBR assignment", casbr_assignment, g, seeds, stream)

    per_sim = cfg.redraw == "simulation"
    raw = {base: [draw(base, i) for i in range(cfg.q)] if per_sim else [draw(base)]
           for base in BASE_DESIGNS if base in needed}

    results = []
    for design in cfg.designs:
        assignments = raw[design.removesuffix("-post")]
        if design.endswith("-post"):
            assignments = [_stage("post-processing", post_process, g, a, cfg.alpha) for a in assignments]
        stream = root.child(_CASCADE, rep, DESIGNS.index(design))
        results.append(evaluate_design(g, assignments, seeds, cfg.probs, truth, cfg.q, stream, design, rep))
        log.info("rep %d %s: final RMSE %.4f", rep, design, results[-1].final_rmse)
    return results


def run_experiment(cfg: ExperimentConfig, graph: Graph | None = None, workers: int = 1) -> list[ExperimentResult]:
    """Run every configured design for every repetition.

    Within a repetition all designs share the graph, seed set and true-TTE
    series. Results are ordered by repetition, then by ``cfg.designs``, and
    depend only on ``cfg`` (not on ``workers``).
    """
    cfg.validate()
    g = graph if graph is not None else _stage("graph construction", build_graph, cfg)
    reps = range(cfg.repetitions)
    if workers > 1 and cfg.repetitions > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_repetition, [g] * len(reps), [cfg] * len(reps), reps))
    else:
        chunks = [_run_repetition(g, cfg, rep) for rep in reps]
    return [r for chunk in chunks for r in chunk]


STEP_FIELDS = ["repetition", "design", "step", "rmse", "truth", "mean_estimate", "std_estimate"]
SUMMARY_FIELDS = ["repetition", "design", "cut_edge_fraction", "excluded_fraction"]


def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_summary" + path.suffix)


def emit_csv(results: list[ExperimentResult], path) -> tuple[Path, Path]:
    """Write per-step rows to ``path`` and per-design summary rows next to it."""
    path = Path(path)
    spath = summary_path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(STEP_FIELDS)
            for r in results:
                mean, std = r.mean_estimate, r.std_estimate
                for t in range(r.steps):
                    w.writerow([r.repetition, r.design, t, repr(float(r.rmse_by_step[t])),
                                repr(float(r.truth[t])), repr(float(mean[t])), repr(float(std[t]))])
        with open(spath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SUMMARY_FIELDS)
            for r in results:
                w.writerow([r.repetition, r.design, repr(r.cut_edge_fraction), repr(r.excluded_fraction)])
    except OSError as exc:
        raise ExperimentError(f"writing {exc.filename or path}", exc) from exc
    return path, spath


def mean_rmse_by_design(results: list[ExperimentResult]) -> dict[str, np.ndarray]:
    """Per-step RMSE averaged over repetitions, padded to a common length."""
    out = {}
    for design in dict.fromkeys(r.design for r in results):
        series = [r.rmse_by_step for r in results if r.design == design]
        length = max(len(s) for s in series)
        out[design] = np.mean([pad_series(s, length) for s in series], axis=0)
    return out


PLOT_WIDTH, PLOT_HEIGHT = 640, 400
PLOT_MARGIN = {"left": 70, "right": 150, "top": 20, "bottom": 50}
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def plot_axes(series: dict) -> tuple[float, float, float, float]:
    """Data ranges ``(x_min, x_max, y_min, y_max)`` used by :func:`emit_plot`."""
    x_max = max(len(s) for s in series.values()) - 1
    values = np.concatenate([np.asarray(s, dtype=float) for s in series.values()])
    y_min = min(0.0, float(values.min()))
    y_max = float(values.max())
    if y_max <= y_min:
        y_max = y_min + 1.0
    return 0.0, float(max(x_max, 1)), y_min, y_max


def emit_plot(series: dict, path, title: str = "RMSE by cascade step") -> Path:
    """Write an SVG line chart with one polyline per design."""
    if not series or any(len(s) == 0 for s in series.values()):
        raise InvalidParameterError("emit_plot needs at least one nonempty series")
    x_min, x_max, y_min, y_max = plot_axes(series)
    m = PLOT_MARGIN
    x0, x1 = m["left"], PLOT_WIDTH - m["right"]
    y0, y1 = PLOT_HEIGHT - m["bottom"], m["top"]

    def sx(x):
        return x0 + (x - x_min) / (x_max - x_min) * (x1 - x0)

    def sy(y):
        return y0 + (y - y_min) / (y_max - y_min) * (y1 - y0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_WIDTH}" height="{PLOT_HEIGHT}" '
        f'viewBox="0 0 {PLOT_WIDTH} {PLOT_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{PLOT_WIDTH}" height="{PLOT_HEIGHT}" fill="white"/>',
        f'<text x="{(x0 + x1) / 2}" y="14" text-anchor="middle">{title}</text>',
        f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2}" y="{PLOT_HEIGHT - 12}" text-anchor="middle">step</text>',
        f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2})">RMSE</text>',
        f'<text x="{x0 - 6}" y="{y0}" text-anchor="end">{y_min:.3g}</text>',
        f'<text x="{x0 - 6}" y="{y1 + 4}" text-anchor="end">{y_max:.3g}</text>',
        f'<text x="{x0}" y="{y0 + 16}" text-anchor="middle">{x_min:g}</text>',
        f'<text x="{x1}" y="{y0 + 16}" text-anchor="middle">{x_max:g}</text>',
    ]
    for i, (name, values) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(x)!r},{sy(float(y))!r}" for x, y in enumerate(values))
        parts.append(f'<polyline data-design="{name}" fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = m["top"] + 20 + 18 * i
        parts.append(
            f'<g class="legend"><line x1="{x1 + 12}" y1="{ly}" x2="{x1 + 32}" y2="{ly}" stroke="{color}" '
            f'stroke-width="2"/><text x="{x1 + 38}" y="{ly + 4}">{name}</text></g>'
        )
    parts.append("</svg>\n")
    path = Path(path)
    try:
        path.write_text("\n".join(parts))
    except OSError as exc:
        raise ExperimentError(f"writing {path}", exc) from exc
    return path
