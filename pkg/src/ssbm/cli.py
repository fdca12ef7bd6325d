"""Command-line surface: generate, fit, select, eval, bic-scan, benchmark.

Outputs are plain text: edge lists and partition/mapping files, "key value"
score files, CSV tables for anything plottable, and a JSON manifest per
output directory so every run can be reproduced exactly. All commands are
deterministic given --seed.

Exit codes: 0 success, 2 invalid arguments, 3 input parse failure,
4 infeasible problem (more shared blocks than any graph has).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .blocks import (
    InfeasibleSharedError,
    SharedMapping,
    compute_block_counts,
    load_mapping,
    load_partition,
    save_mapping,
    save_partition,
)
from .fit import STRATEGIES, FitResult, McmcConfig, pipeline
from .graph import EdgeListError, load_edge_list, save_edge_list
from .likelihood import SharedState, bic
from .metrics import evaluate_recovery
from .select import select_exact, select_greedy, select_random
from .synth import add_noise, generate

SOLVERS = {"exact": select_exact, "greedy": select_greedy}


def _write_manifest(outdir: Path, command: str, params: dict) -> None:
    payload = {"tool": "ssbm", "version": __version__, "command": command,
               "params": params}
    (outdir / "manifest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_scores(path: Path, fields: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in fields.items():
            fh.write(f"{key} {value}\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")


def _load_graphs(paths, directed: bool):
    return [load_edge_list(p, directed) for p in paths]


def _int_list(text: str, n: int, flag: str) -> list[int]:
    parts = [int(tok) for tok in str(text).split(",")]
    if len(parts) == 1:
        return parts * n
    if len(parts) != n:
        raise ValueError(f"{flag} needs 1 or {n} comma-separated values")
    return parts


def _config_from_args(args, mode: str) -> McmcConfig:
    return McmcConfig(
        sweeps=args.sweeps,
        beta_max=args.beta_max,
        epsilon=args.epsilon,
        seed=args.seed,
        mode=mode,
        track_trace=getattr(args, "trace", False),
    )


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    inst = generate(
        n=args.n,
        num_vertices=_int_list(args.vertices, args.n, "--vertices"),
        num_blocks=_int_list(args.blocks, args.n, "--blocks"),
        num_shared=args.shared,
        beta_params=(args.alpha, args.beta),
        directed=args.directed,
        seed=args.seed,
        balanced=args.balanced,
    )
    for k, (g, p) in enumerate(zip(inst.graphs, inst.true_partitions), start=1):
        save_edge_list(g, outdir / f"graph_{k}.edges")
        save_partition(p, outdir / f"true_partition_{k}.txt")
    save_mapping(inst.true_mapping, outdir / "true_mapping.txt")
    _write_manifest(outdir, "generate", inst.params | {"seed": args.seed})
    print(f"wrote {inst.num_graphs} graphs to {outdir}")
    return 0


def _write_fit_result(outdir: Path, result: FitResult, graphs) -> None:
    for k, p in enumerate(result.partitions, start=1):
        save_partition(p, outdir / f"partition_{k}.txt")
    if result.mapping is not None:
        save_mapping(result.mapping, outdir / "mapping.txt")
    _write_scores(outdir / "scores.txt", {
        "algorithm": result.algorithm,
        "seed": result.seed,
        "log_likelihood": result.log_likelihood,
        "bic": result.bic,
        "num_parameters": result.num_parameters,
        "num_shared": result.mapping.num_shared if result.mapping else 0,
        "num_graphs": len(result.partitions),
        "num_edges": sum(g.num_edges for g in graphs),
    })
    if result.trace is not None:
        _write_csv(outdir / "trace.csv", ["sweep", "beta", "llh", "best_llh"], result.trace)


def cmd_fit(args) -> int:
    graphs = _load_graphs(args.graphs, args.directed)
    blocks = _int_list(args.blocks, len(graphs), "--blocks")
    shared = args.shared if args.shared is not None else 0
    config = _config_from_args(args, "shared" if args.strategy in ("shared", "ml_shared") else "single")
    result = pipeline(args.strategy, graphs, blocks, shared, config)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_fit_result(outdir, result, graphs)
    _write_manifest(outdir, "fit", {
        "graphs": [str(p) for p in args.graphs], "strategy": args.strategy,
        "blocks": blocks, "shared": shared, "sweeps": args.sweeps,
        "beta_max": args.beta_max, "epsilon": args.epsilon,
        "seed": args.seed, "directed": args.directed,
    })
    print(f"{args.strategy}: llh={result.log_likelihood:.6f} bic={result.bic:.6f}")
    return 0


def cmd_select(args) -> int:
    graphs = _load_graphs(args.graphs, args.directed)
    partitions = [load_partition(p) for p in args.partitions]
    if len(partitions) != len(graphs):
        raise ValueError("need one partition file per graph")
    counts = [compute_block_counts(g, p) for g, p in zip(graphs, partitions)]
    if args.solver == "random":
        result = select_random(counts, args.shared, seed=args.seed)
    else:
        result = SOLVERS[args.solver](counts, args.shared)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_mapping(result.mapping, outdir / "mapping.txt")
    # runtime goes to stdout only, keeping output files byte-deterministic
    _write_scores(outdir / "scores.txt", {
        "solver": result.solver,
        "log_likelihood": result.log_likelihood,
        "llh_loss_vs_unshared": result.llh_loss_vs_unshared,
        "num_shared": result.mapping.num_shared,
    })
    _write_manifest(outdir, "select", {
        "graphs": [str(p) for p in args.graphs],
        "partitions": [str(p) for p in args.partitions],
        "shared": args.shared, "solver": args.solver, "seed": args.seed,
        "directed": args.directed,
    })
    print(f"{result.solver}: llh={result.log_likelihood:.6f} "
          f"loss={result.llh_loss_vs_unshared:.6f} "
          f"({result.runtime_seconds:.3f}s)")
    return 0


def cmd_eval(args) -> int:
    partitions = [load_partition(p) for p in args.partitions]
    truth = [load_partition(p) for p in args.true_partitions]
    mapping = load_mapping(args.mapping) if args.mapping else None
    true_mapping = load_mapping(args.true_mapping) if args.true_mapping else None
    llh = score = None
    if args.graphs:
        graphs = _load_graphs(args.graphs, args.directed)
        counts = [compute_block_counts(g, p) for g, p in zip(graphs, partitions)]
        m = mapping if mapping is not None else SharedMapping.identity(len(graphs), 0)
        ms = bic(counts, m)
        llh, score = ms.log_likelihood, ms.bic
    report = evaluate_recovery(partitions, mapping, truth, true_mapping,
                               log_likelihood=llh, bic=score)
    fields = {
        "mean_partition_ari": report.mean_partition_ari,
        "shared_ari": report.shared_ari if report.shared_ari is not None else "nan",
    }
    for k, value in enumerate(report.partition_ari, start=1):
        fields[f"partition_ari_{k}"] = value
    if llh is not None:
        fields["log_likelihood"] = llh
        fields["bic"] = score
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_scores(outdir / "eval.txt", fields)
    for key, value in fields.items():
        print(f"{key} {value}")
    return 0


def cmd_bic_scan(args) -> int:
    graphs = _load_graphs(args.graphs, args.directed)
    if args.partitions:
        partitions = [load_partition(p) for p in args.partitions]
    else:
        blocks = _int_list(args.blocks, len(graphs), "--blocks")
        config = _config_from_args(args, "single")
        partitions = pipeline(args.strategy, graphs, blocks, 0, config).partitions
    counts = [compute_block_counts(g, p) for g, p in zip(graphs, partitions)]
    s_max = args.s_max if args.s_max is not None else min(p.num_blocks for p in partitions)
    solver = SOLVERS[args.solver]
    rows = []
    for s in range(args.s_min, s_max + 1):
        selection = solver(counts, s)
        score = bic(counts, selection.mapping)
        rows.append((s, score.log_likelihood, score.num_parameters, score.bic))
    best_s = min(rows, key=lambda row: row[3])[0]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(outdir / "bic_scan.csv", ["s", "llh", "params", "bic"], rows)
    _write_scores(outdir / "scores.txt", {"best_s": best_s})
    _write_manifest(outdir, "bic-scan", {
        "graphs": [str(p) for p in args.graphs], "solver": args.solver,
        "s_min": args.s_min, "s_max": s_max, "seed": args.seed,
        "directed": args.directed, "strategy": args.strategy,
    })
    print("s llh params bic")
    for row in rows:
        print(" ".join(str(x) for x in row))
    print(f"best_s {best_s}")
    return 0


def _benchmark_selectors(args, outdir: Path) -> None:
    rows = []
    for n in range(2, args.max_graphs + 1):
        inst = generate(n, args.vertices, args.blocks, args.shared,
                        directed=args.directed, seed=args.seed + n)
        counts = [compute_block_counts(g, p) for g, p in zip(inst.graphs, inst.true_partitions)]
        for name in ("exact", "greedy", "random"):
            if name == "random":
                res = select_random(counts, args.shared, seed=args.seed)
            else:
                res = SOLVERS[name](counts, args.shared)
            rows.append((n, name, res.runtime_seconds, res.log_likelihood))
    _write_csv(outdir / "selector_times.csv", ["n", "solver", "seconds", "llh"], rows)
    for row in rows:
        print(" ".join(str(x) for x in row))


def _benchmark_mcmc(args, outdir: Path) -> None:
    from .fit import _sweep

    rows = []
    for edges in (int(tok) for tok in args.edges.split(",")):
        # constant average degree: vertex count scales with the edge budget
        nv = max(64, int(round(edges / args.avg_degree)))
        p_edge = min(1.0, edges / (nv * (nv - 1) if args.directed else nv * (nv - 1) / 2))
        inst = generate(1, nv, args.blocks, 0, directed=args.directed,
                        seed=args.seed, fixed_theta=p_edge)
        graph = inst.graphs[0]
        state = SharedState([graph], [inst.true_partitions[0].copy()], 0)
        rng = np.random.default_rng(args.seed)
        epsilon = McmcConfig().epsilon
        cur = state.log_likelihood()
        times = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            cur = _sweep(state, 1.0, epsilon, rng, cur, None)
            times.append(time.perf_counter() - t0)
        rows.append((graph.num_edges, graph.num_vertices, float(np.median(times))))
    _write_csv(outdir / "mcmc_times.csv", ["edges", "vertices", "sweep_seconds"], rows)
    for row in rows:
        print(" ".join(str(x) for x in row))


def _benchmark_noise(args, outdir: Path) -> None:
    from .metrics import shared_ari

    noise_grid = [float(tok) for tok in args.noise.split(",")]
    rows = []
    for seed_offset in range(args.repeats):
        seed = args.seed + seed_offset
        inst = generate(args.n, args.vertices, args.blocks, args.shared,
                        directed=args.directed, seed=seed)
        for noise in noise_grid:
            noisy = [add_noise(p, noise, seed=seed * 1000 + i)
                     for i, p in enumerate(inst.true_partitions)]
            counts = [compute_block_counts(g, p) for g, p in zip(inst.graphs, noisy)]
            for name in ("exact", "greedy", "random"):
                if name == "random":
                    res = select_random(counts, args.shared, seed=seed)
                else:
                    res = SOLVERS[name](counts, args.shared)
                score = shared_ari(noisy, res.mapping, inst.true_partitions, inst.true_mapping)
                rows.append((seed, noise, name, score))
    _write_csv(outdir / "noise_shared_ari.csv", ["seed", "noise", "solver", "shared_ari"], rows)
    for row in rows:
        print(" ".join(str(x) for x in row))


def cmd_benchmark(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.mode == "selectors":
        _benchmark_selectors(args, outdir)
    elif args.mode == "mcmc":
        _benchmark_mcmc(args, outdir)
    else:
        _benchmark_noise(args, outdir)
    _write_manifest(outdir, "benchmark", {
        "mode": args.mode, "seed": args.seed,
        "args": {k: v for k, v in vars(args).items() if k not in ("func",)},
    })
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_direction(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--directed", dest="directed", action="store_true", default=True,
                       help="treat edges as directed (default)")
    group.add_argument("--undirected", dest="directed", action="store_false",
                       help="treat edges as undirected")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssbm",
        description="Fit stochastic block models with shared blocks across graphs.",
    )
    parser.add_argument("--version", action="version", version=f"ssbm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a planted multi-graph instance")
    p.add_argument("--n", type=int, required=True, help="number of graphs")
    p.add_argument("--vertices", required=True, help="vertex count (or comma list per graph)")
    p.add_argument("--blocks", required=True, help="block count (or comma list per graph)")
    p.add_argument("--shared", type=int, default=0, help="number of shared blocks")
    p.add_argument("--alpha", type=float, default=0.5, help="Beta prior alpha for edge probabilities")
    p.add_argument("--beta", type=float, default=1.0, help="Beta prior beta for edge probabilities")
    p.add_argument("--balanced", action="store_true", help="equal-sized blocks instead of uniform labels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    _add_direction(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit partitions (and optionally shared blocks) by MCMC")
    p.add_argument("--graphs", nargs="+", required=True, help="edge-list files")
    p.add_argument("--strategy", choices=STRATEGIES, default="ml_shared")
    p.add_argument("--blocks", required=True, help="block count (or comma list per graph)")
    p.add_argument("--shared", type=int, default=None, help="number of shared blocks")
    p.add_argument("--sweeps", type=int, default=500)
    p.add_argument("--beta-max", type=float, default=1e4)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--trace", action="store_true", help="write per-sweep llh trace CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_direction(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="choose shared blocks for fixed partitions")
    p.add_argument("--graphs", nargs="+", required=True)
    p.add_argument("--partitions", nargs="+", required=True)
    p.add_argument("--shared", type=int, required=True)
    p.add_argument("--solver", choices=("exact", "greedy", "random"), default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_direction(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="score inferred partitions/mapping against truth")
    p.add_argument("--partitions", nargs="+", required=True)
    p.add_argument("--mapping", default=None)
    p.add_argument("--true-partitions", nargs="+", required=True)
    p.add_argument("--true-mapping", default=None)
    p.add_argument("--graphs", nargs="*", default=None, help="edge lists, to also report llh/bic")
    p.add_argument("--out", default=None)
    _add_direction(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bic-scan", help="table of BIC over a range of shared-block counts")
    p.add_argument("--graphs", nargs="+", required=True)
    p.add_argument("--partitions", nargs="*", default=None, help="fixed partitions (else fit first)")
    p.add_argument("--strategy", choices=("single", "multilevel", "ml_single"), default="multilevel")
    p.add_argument("--blocks", default=None, help="block count when fitting")
    p.add_argument("--solver", choices=("exact", "greedy"), default="exact")
    p.add_argument("--s-min", type=int, default=0)
    p.add_argument("--s-max", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=500)
    p.add_argument("--beta-max", type=float, default=1e4)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_direction(p)
    p.set_defaults(func=cmd_bic_scan)

    p = sub.add_parser("benchmark", help="runtime and recovery benchmarks (CSV output)")
    p.add_argument("--mode", choices=("selectors", "mcmc", "noise"), required=True)
    p.add_argument("--vertices", type=int, default=150)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--shared", type=int, default=2)
    p.add_argument("--n", type=int, default=2, help="graphs per instance (noise mode)")
    p.add_argument("--max-graphs", type=int, default=5, help="selectors mode: largest n")
    p.add_argument("--edges", default="100000,200000", help="mcmc mode: edge budgets")
    p.add_argument("--avg-degree", type=float, default=100.0, help="mcmc mode: mean total degree")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--noise", default="0.0,0.1,0.2,0.3", help="noise mode: grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_direction(p)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        if args.command == "fit" and args.strategy in ("single", "multilevel", "ml_single"):
            if args.shared:
                parser.error(f"--shared is meaningless for strategy {args.strategy!r}")
        if args.command == "bic-scan" and not args.partitions and args.blocks is None:
            parser.error("bic-scan needs --partitions or --blocks")
        return args.func(args)
    except SystemExit as exc:  # parser.error inside command validation
        return int(exc.code) if exc.code else 0
    except InfeasibleSharedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except EdgeListError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
