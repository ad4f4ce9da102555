"""Command-line entry point.

Stages exchange plain files: edge lists, one seed id per line, and
``node_id,value`` CSVs for partitions and assignments. Exit status is 0 on
success, 1 for invalid configuration or arguments, 2 for runtime failures.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from casbr.cascade import SpilloverProbs, simulate_cascade, true_tte, write_events
from casbr.designs import (
    cbr_assignment,
    casbr_assignment,
    post_process,
    randomized_assignment,
    read_assignment,
    validate_assignment,
    write_assignment,
)
from casbr.errors import CasbrError, InvalidParameterError
from casbr.graph import generate_barabasi_albert, generate_forest_fire, read_edge_list
from casbr.harness import (
    DESIGNS,
    ExperimentConfig,
    InvalidConfigError,
    emit_csv,
    emit_plot,
    evaluate_design,
    mean_rmse_by_design,
    run_experiment,
)
from casbr.partitioning import read_partition, reldg_partition, validate_partition, write_partition
from casbr.rng import RngSeed
from casbr.seeding import new_greedy_ic, random_seeds, read_seeds

log = logging.getLogger("casbr")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _numbers(text: str, count: int, name: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != count:
        raise InvalidConfigError(f"{name} expects {count} comma-separated values, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise InvalidConfigError(f"{name}: not a number in {text!r}") from None


def _probs(text: str) -> SpilloverProbs:
    try:
        return SpilloverProbs(*_numbers(text, 5, "--probs"))
    except InvalidParameterError as exc:
        raise InvalidConfigError(str(exc)) from None


def _generate(args):
    if args.ba:
        n, m = _numbers(args.ba, 2, "--ba")
        return generate_barabasi_albert(int(n), int(m), RngSeed(args.master_seed))
    n, pf, pb = _numbers(args.ff, 3, "--ff")
    return generate_forest_fire(int(n), pf, pb, RngSeed(args.master_seed))


def _write_text(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args):
    _write_text(_generate(args).to_edge_list(), args.out)


def cmd_seed(args):
    g = read_edge_list(args.graph)
    if args.greedy:
        k, p, r = _numbers(args.greedy, 3, "--greedy")
        seeds = new_greedy_ic(g, int(k), p, int(r), RngSeed(args.master_seed))
    else:
        seeds = random_seeds(g, args.seed_frac, RngSeed(args.master_seed))
    _write_text("".join(f"{s}\n" for s in seeds.tolist()), args.out)


def cmd_partition(args):
    g = read_edge_list(args.graph)
    k = args.k if args.k is not None else len(read_seeds(args.seeds)) if args.seeds else None
    if k is None:
        raise InvalidConfigError("give --k or --seeds (cluster count = number of seeds)")
    write_partition(reldg_partition(g, k, args.passes, RngSeed(args.master_seed)), args.out)


def cmd_assign(args):
    g = read_edge_list(args.graph)
    base = args.design.removesuffix("-post")
    seed = RngSeed(args.master_seed)
    if base == "randomized":
        a = randomized_assignment(g, seed)
    elif base == "cbr":
        if not args.partition:
            raise InvalidConfigError("cbr needs --partition")
        a = cbr_assignment(g, validate_partition(read_partition(args.partition), g.n), seed)
    else:
        if not args.seeds:
            raise InvalidConfigError("casbr needs --seeds")
        a = casbr_assignment(g, read_seeds(args.seeds), seed)
    if args.design.endswith("-post"):
        a = post_process(g, a, args.alpha)
    write_assignment(a, args.out)


def cmd_simulate(args):
    g = read_edge_list(args.graph)
    a = validate_assignment(read_assignment(args.assignment), g.n)
    trace = simulate_cascade(g, a, read_seeds(args.seeds), args.probs, RngSeed(args.master_seed))
    write_events(trace, args.out)


def cmd_evaluate(args):
    g = read_edge_list(args.graph)
    a = validate_assignment(read_assignment(args.assignment), g.n)
    seeds = read_seeds(args.seeds)
    root = RngSeed(args.master_seed)
    truth = true_tte(g, seeds, args.probs.p_tt, args.probs.p_cc, args.q, root.child(0))
    result = evaluate_design(g, [a], seeds, args.probs, truth, args.q, root.child(1), args.label)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv([result], out / "steps.csv")


def _config_from_args(args) -> ExperimentConfig:
    """Config file values, overridden by any flag given on the command line."""
    data = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    if args.graph:
        data.update(graph_path=args.graph, generator=None, generator_params=[])
    elif args.ba:
        data.update(graph_path=None, generator="ba", generator_params=_numbers(args.ba, 2, "--ba"))
    elif args.ff:
        data.update(graph_path=None, generator="ff", generator_params=_numbers(args.ff, 3, "--ff"))
    if args.seed_frac is not None:
        data.update(seed_method="random", seed_fraction=args.seed_frac)
    elif args.greedy:
        data.update(seed_method="greedy", greedy=_numbers(args.greedy, 3, "--greedy"))
    if args.designs:
        data["designs"] = [d.strip() for d in args.designs.split(",") if d.strip()]
    if args.probs is not None:
        data["probs"] = asdict(args.probs)
    for key, value in (("alpha", args.alpha), ("q", args.q), ("repetitions", args.reps),
                       ("master_seed", args.master_seed)):
        if value is not None:
            data[key] = value
    return ExperimentConfig.from_dict(data)


def cmd_run(args):
    cfg = _config_from_args(args)
    results = run_experiment(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    steps, summary = emit_csv(results, out / "steps.csv")
    log.info("wrote %s and %s", steps, summary)
    curves = mean_rmse_by_design(results)
    if args.plot:
        emit_plot(curves, out / "rmse.svg")
    for design, series in curves.items():
        print(f"{design}\tfinal RMSE {series[-1]:.6f}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="casbr", description="Cascade-aware network experiment design workbench.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, graph=True):
        if graph:
            sp.add_argument("--graph", required=True, help="edge-list file")
        sp.add_argument("--master-seed", type=int, default=0)

    sp = sub.add_parser("generate", help="write a synthetic edge list")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--ba", metavar="N,M")
    g.add_argument("--ff", metavar="N,PF,PB")
    common(sp, graph=False)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("seed", help="select cascade seeds")
    common(sp)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--seed-frac", type=float, default=0.1)
    g.add_argument("--greedy", metavar="K,P,R")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_seed)

    sp = sub.add_parser("partition", help="reLDG partition as node_id,cluster_id CSV")
    common(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--seeds", help="seed file; its size is the default cluster count")
    sp.add_argument("--passes", type=int, default=10)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("assign", help="draw a treatment assignment")
    common(sp)
    sp.add_argument("--design", choices=DESIGNS, required=True)
    sp.add_argument("--seeds")
    sp.add_argument("--partition")
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_assign)

    for name, func, help_ in (("simulate", cmd_simulate, "run one cascade, export its events"),
                              ("evaluate", cmd_evaluate, "score one assignment against the true TTE")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--assignment", required=True)
        sp.add_argument("--seeds", required=True)
        sp.add_argument("--probs", type=_probs, default=SpilloverProbs(), metavar="PTT,PCT,PCC,PTC,PBY")
        if name == "simulate":
            sp.add_argument("--out", required=True)
        else:
            sp.add_argument("--q", type=int, default=100)
            sp.add_argument("--label", default="assignment")
            sp.add_argument("--out-dir", required=True)
        sp.set_defaults(func=func)

    sp = sub.add_parser("run", help="full pipeline from a config file and/or flags")
    sp.add_argument("--config")
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--graph")
    src.add_argument("--ba", metavar="N,M")
    src.add_argument("--ff", metavar="N,PF,PB")
    seeds = sp.add_mutually_exclusive_group()
    seeds.add_argument("--seed-frac", type=float)
    seeds.add_argument("--greedy", metavar="K,P,R")
    sp.add_argument("--designs", help=f"comma-separated subset of {','.join(DESIGNS)}")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--probs", type=_probs, metavar="PTT,PCT,PCC,PTC,PBY")
    sp.add_argument("--q", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--master-seed", type=int)
    sp.add_argument("--out-dir", default="results")
    sp.add_argument("--plot", action="store_true", help="also write rmse.svg")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (InvalidConfigError, InvalidParameterError) as exc:
        print(f"casbr: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CasbrError, OSError) as exc:
        print(f"casbr: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
