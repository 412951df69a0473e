"""Command-line interface: measures reports, portfolio construction, experiments.

Exit codes: 0 success, 2 configuration error, 3 data error.  The experiment
runner reads a JSON config (flags override nothing inside it except --runs,
--seed, --protocol, --out) and writes, per protocol: a results CSV, a
per-run summary CSV, a performance-score CSV, and an N^SBS CSV.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import portfolio as portfolio_mod
from .archive import ingest_csv
from .cli_config import ExperimentConfig, load_experiment_config
from .measures import compute_measure_table, impute_all, sbs, sbs_mean_relsp1, write_report_csv
from .pipeline import SystemResult, evaluate_system, n_sbs
from .stats import performance_score
from .util import ConfigError, DataError


def cmd_measures(args) -> int:
    archive = ingest_csv(args.archive)
    if args.portfolio is not None:
        optimizers = [p for p in args.portfolio.split(",") if p]
        if not optimizers:
            raise ConfigError("--portfolio must name at least one optimizer")
    else:
        optimizers = archive.optimizers()
    table = impute_all(compute_measure_table(archive, optimizers))
    write_report_csv(table, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_build_portfolio(args) -> int:
    archive = ingest_csv(args.archive)
    universe = archive.optimizers()
    if args.k >= len(universe):
        raise ConfigError(f"infeasible k={args.k}: universe has {len(universe)} optimizers")
    rank_table = portfolio_mod.build_rank_table(archive, universe)
    result = portfolio_mod.best_of_restarts(rank_table, universe, args.k, args.restarts, args.seed)
    portfolio_mod.write_portfolio_json(result, args.out)
    solves_all = result.quality < 1.0
    print(f"wrote {args.out}: m={result.quality:.6g} solves_all={solves_all}")
    return 0


def _write_rows(path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")


def _evaluate_one(job):
    config, archive, suite, protocol, n_runs, seed_base = job
    seeds = [seed_base + r for r in range(n_runs)]
    return evaluate_system(config, archive, suite, protocol, seeds=seeds)


def _result_rows(result: SystemResult):
    results, summary = [], []
    for run in result.runs:
        for problem, (value, imputed) in sorted(run.relsp1.items()):
            results.append((result.system, run.run_seed, problem.dimension,
                            problem.function_id, f"{value:.10g}", 1 if imputed else 0))
        for dim, mean in sorted(run.mean_relsp1.items()):
            summary.append((result.system, run.run_seed, dim, f"{mean:.10g}"))
    return results, summary


def cmd_run(args) -> int:
    config = load_experiment_config(args.config, runs=args.runs, seed=args.seed,
                                    protocols=args.protocol, out=args.out)
    os.makedirs(config.out_dir, exist_ok=True)
    archive, suite = config.materialize()
    table = impute_all(compute_measure_table(archive, config.shared_portfolio.members))

    jobs = []
    for protocol in config.protocols:
        for system in config.systems:
            jobs.append((system, archive, suite, protocol, config.runs, config.seed))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            all_results = list(pool.map(_evaluate_one, jobs))
    else:
        all_results = [_evaluate_one(job) for job in jobs]

    by_protocol: dict[str, list[SystemResult]] = {}
    for result in all_results:
        by_protocol.setdefault(result.protocol, []).append(result)

    dimensions = sorted({t.key.problem.dimension for t in suite})
    for protocol, results in by_protocol.items():
        tag = protocol.lower()
        result_rows, summary_rows = [], []
        for result in results:
            rows, srows = _result_rows(result)
            result_rows.extend(rows)
            summary_rows.extend(srows)
        _write_rows(os.path.join(config.out_dir, f"results_{tag}.csv"),
                    "system,run_seed,dimension,function,relSP1,imputed", result_rows)
        _write_rows(os.path.join(config.out_dir, f"summary_{tag}.csv"),
                    "system,run_seed,dimension,mean_relSP1", summary_rows)

        score_rows, nsbs_rows = [], []
        for dim in dimensions:
            samples = [r.means_by_dimension()[dim] for r in results]
            names = [r.system for r in results]
            if len(results) >= 2:
                matrix = performance_score(samples, system_ids=names)
                for name, score in zip(matrix.systems, matrix.scores):
                    score_rows.append((name, dim, score))
            sbs_id = sbs(table, config.shared_portfolio.members, dim)
            sbs_mean = sbs_mean_relsp1(table, sbs_id, dim)
            for name, sample in zip(names, samples):
                nsbs_rows.append((name, dim, sbs_id, f"{sbs_mean:.10g}", n_sbs(sample, sbs_mean)))
        _write_rows(os.path.join(config.out_dir, f"scores_{tag}.csv"),
                    "system,dimension,P", score_rows)
        _write_rows(os.path.join(config.out_dir, f"nsbs_{tag}.csv"),
                    "system,dimension,sbs,sbs_mean_relSP1,n_sbs", nsbs_rows)
    print(f"wrote experiment outputs to {config.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asbench",
                                     description="Algorithm-selection benchmarking toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measures", help="compute an ERT/SP1 measure report from an archive CSV")
    p.add_argument("--archive", required=True)
    p.add_argument("--portfolio", default=None, help="comma-separated optimizer ids (default: all)")
    p.add_argument("--out", default="measures.csv")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("build-portfolio", help="local-search portfolio construction")
    p.add_argument("--archive", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--restarts", type=int, default=31)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="portfolio.json")
    p.set_defaults(func=cmd_build_portfolio)

    p = sub.add_parser("run", help="run an algorithm-selection experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--protocol", action="append", default=None,
                   choices=["loio", "lopo", "lopoad", "ri"],
                   help="override the config protocols (repeatable)")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=int(os.environ.get("ASBENCH_JOBS", "1")))
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
