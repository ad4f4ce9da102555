import csv
import json
import re

import numpy as np
import pytest

from casbr.cascade import SpilloverProbs
from casbr.designs import CONTROL, TREATMENT, cut_edge_fraction
from casbr.rng import RngSeed
from casbr.harness import (
    DESIGNS,
    PLOT_HEIGHT,
    PLOT_MARGIN,
    PLOT_WIDTH,
    ExperimentConfig,
    ExperimentError,
    InvalidConfigError,
    build_graph,
    emit_csv,
    emit_plot,
    evaluate_design,
    mean_rmse_by_design,
    plot_axes,
    run_experiment,
    select_seeds,
    summary_path,
)
from casbr.errors import InvalidParameterError
from casbr.metrics import ExperimentResult


def small_cfg(**kw):
    base = dict(generator="ba", generator_params=[300, 3], q=8, repetitions=2, designs=list(DESIGNS), master_seed=3)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


@pytest.fixture(scope="module")
def results():
    return run_experiment(small_cfg())


def test_defaults_follow_the_protocol():
    cfg = ExperimentConfig(generator="ba", generator_params=[10, 3])
    assert (cfg.q, cfg.alpha, cfg.seed_fraction) == (100, 0.01, 0.1)
    assert cfg.probs == SpilloverProbs(0.05, 0.02, 0.02, 0.05, 0.02)
    assert cfg.greedy == [10, 0.01, 100]


@pytest.mark.parametrize("bad", [
    dict(q=0), dict(repetitions=0), dict(alpha=-1.0), dict(designs=["nope"]), dict(designs=[]),
    dict(generator="er"), dict(generator_params=[10]), dict(graph_path="x.txt"),
    dict(seed_method="degree"), dict(clusters=0), dict(probs=[0.1, 2, 0, 0, 0]), dict(unknown=1),
    dict(redraw="never"), dict(passes=0), dict(truth_q=0),
])
def test_invalid_configs(bad):
    with pytest.raises(InvalidConfigError):
        small_cfg(**bad)


def test_config_round_trip(tmp_path):
    cfg = small_cfg(probs={"p_tt": 0.07, "p_ct": 0.05, "p_cc": 0.05, "p_tc": 0.07, "p_bystander": 0.02})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.load(path) == cfg
    with pytest.raises(InvalidConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_result_layout(results):
    assert [(r.repetition, r.design) for r in results] == [(rep, d) for rep in range(2) for d in DESIGNS]
    for r in results:
        assert r.estimates.shape == (8, r.steps)
        assert (r.rmse_by_step >= 0).all()
        assert len(r.cross_group_counts) == 8


def test_designs_share_truth_and_seeds(results):
    for rep in range(2):
        group = [r for r in results if r.repetition == rep]
        assert all(np.array_equal(pad(r.truth, 50), pad(group[0].truth, 50)) for r in group)
    cfg = small_cfg()
    g = build_graph(cfg)
    assert np.array_equal(select_seeds(g, cfg, 1), select_seeds(g, cfg, 1))
    assert not np.array_equal(select_seeds(g, cfg, 0), select_seeds(g, cfg, 1))


def pad(x, n):
    return np.concatenate([x, np.full(n - len(x), x[-1])])


def test_post_variants_exclude_nodes(results):
    for r in results:
        if r.design.endswith("-post"):
            assert r.excluded_fraction > 0
        else:
            assert r.excluded_fraction == 0


def test_zero_probabilities():
    cfg = small_cfg(probs=[0, 0, 0, 0, 0], repetitions=1, designs=["randomized", "cbr", "casbr"])
    for r in run_experiment(cfg):
        assert (r.truth == 0).all() and r.steps == 1
        # one assignment per repetition, nothing spreads: every cascade gives the same estimate
        assert np.allclose(r.estimates, r.estimates[0, 0])
        assert r.rmse_by_step[0] == pytest.approx(abs(r.estimates[0, 0]))


def test_zero_probabilities_seed_gap():
    g = build_graph(small_cfg())
    seeds = np.arange(0, 300, 7)
    a = np.random.default_rng(0).integers(0, 2, g.n).astype(np.int8)
    res = evaluate_design(g, [a], seeds, SpilloverProbs(0, 0, 0, 0, 0), np.zeros(1), 5, RngSeed(1))
    is_seed = np.isin(np.arange(g.n), seeds)
    gap = is_seed[a == TREATMENT].mean() - is_seed[a == CONTROL].mean()
    assert np.allclose(res.estimates, gap)
    assert res.cut_edge_fraction == cut_edge_fraction(g, a)


def test_deterministic_csv(tmp_path):
    a = emit_csv(run_experiment(small_cfg()), tmp_path / "a.csv")
    b = emit_csv(run_experiment(small_cfg()), tmp_path / "b.csv")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_parallel_matches_serial(tmp_path, results):
    par = run_experiment(small_cfg(), workers=2)
    a = emit_csv(results, tmp_path / "serial.csv")
    b = emit_csv(par, tmp_path / "parallel.csv")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_stage_named_in_errors():
    with pytest.raises(ExperimentError) as info:
        run_experiment(small_cfg(seed_fraction=0.0001))
    assert info.value.stage == "seed selection"
    with pytest.raises(ExperimentError) as info:
        run_experiment(ExperimentConfig(graph_path="/nonexistent/graph.txt"))
    assert info.value.stage == "graph construction"


def test_redraw_per_simulation():
    res = run_experiment(small_cfg(redraw="simulation", repetitions=1, designs=["cbr"]))
    assert res[0].estimates.shape[0] == 8


def test_emit_csv_empty(tmp_path):
    path, spath = emit_csv([], tmp_path / "out.csv")
    assert path.read_text().strip() == "repetition,design,step,rmse,truth,mean_estimate,std_estimate"
    assert spath.read_text().strip() == "repetition,design,cut_edge_fraction,excluded_fraction"


def test_emit_csv_rows(tmp_path):
    est = np.array([[0.1, 0.2, 0.3], [0.3, 0.2, 0.1]])
    r = ExperimentResult("cbr", 0, est, np.array([0.0, 0.1, 0.2]), np.array([0.2, 0.1, 0.1]), 0.25, 0.0)
    path, spath = emit_csv([r], tmp_path / "out.csv")
    assert len(path.read_text().splitlines()) == 1 + 3
    assert len(spath.read_text().splitlines()) == 1 + 1
    assert spath == summary_path(tmp_path / "out.csv") == tmp_path / "out_summary.csv"


def test_emit_csv_round_trip(tmp_path, results):
    path, spath = emit_csv(results, tmp_path / "out.csv")
    rows = list(csv.DictReader(open(path)))
    i = 0
    for r in results:
        for t in range(r.steps):
            row = rows[i]
            i += 1
            assert (int(row["repetition"]), row["design"], int(row["step"])) == (r.repetition, r.design, t)
            for key, value in (("rmse", r.rmse_by_step[t]), ("truth", r.truth[t]),
                               ("mean_estimate", r.mean_estimate[t]), ("std_estimate", r.std_estimate[t])):
                assert float(row[key]) == pytest.approx(float(value), rel=1e-12, abs=1e-300)
    assert i == len(rows)
    summary = list(csv.DictReader(open(spath)))
    assert [float(s["cut_edge_fraction"]) for s in summary] == [r.cut_edge_fraction for r in results]


def test_emit_csv_io_error(tmp_path):
    with pytest.raises(ExperimentError, match="missing"):
        emit_csv([], tmp_path / "missing" / "out.csv")


def test_mean_rmse_by_design(results):
    curves = mean_rmse_by_design(results)
    assert list(curves) == list(DESIGNS)
    cbr = [r.rmse_by_step for r in results if r.design == "cbr"]
    n = max(map(len, cbr))
    assert np.allclose(curves["cbr"], np.mean([pad(x, n) for x in cbr], axis=0))


def polylines(svg):
    return re.findall(r'<polyline data-design="([^"]+)"[^>]*points="([^"]+)"', svg)


def test_plot_flat_series(tmp_path):
    svg = emit_plot({"cbr": [0.2, 0.2, 0.2]}, tmp_path / "p.svg").read_text()
    (name, pts), = polylines(svg)
    ys = {p.split(",")[1] for p in pts.split()}
    assert name == "cbr" and len(ys) == 1


def test_plot_two_series(tmp_path):
    svg = emit_plot({"cbr": [0.1, 0.2], "casbr": [0.05, 0.1]}, tmp_path / "p.svg").read_text()
    assert [n for n, _ in polylines(svg)] == ["cbr", "casbr"]
    assert svg.count('class="legend"') == 2
    assert ">step<" in svg and ">RMSE<" in svg


def test_plot_affine_mapping(tmp_path):
    values = [0.0, 0.1, 0.4, 0.3]
    svg = emit_plot({"x": values}, tmp_path / "p.svg").read_text()
    (_, pts), = polylines(svg)
    got = [tuple(map(float, p.split(","))) for p in pts.split()]
    x_min, x_max, y_min, y_max = 0.0, 3.0, 0.0, 0.4
    assert plot_axes({"x": values}) == (x_min, x_max, y_min, y_max)
    left, right = PLOT_MARGIN["left"], PLOT_WIDTH - PLOT_MARGIN["right"]
    bottom, top = PLOT_HEIGHT - PLOT_MARGIN["bottom"], PLOT_MARGIN["top"]
    want = [(left + (i - x_min) / (x_max - x_min) * (right - left),
             bottom + (v - y_min) / (y_max - y_min) * (top - bottom)) for i, v in enumerate(values)]
    assert got == want


def test_plot_empty(tmp_path):
    with pytest.raises(InvalidParameterError):
        emit_plot({}, tmp_path / "p.svg")
    with pytest.raises(InvalidParameterError):
        emit_plot({"a": []}, tmp_path / "p.svg")
