"""
Command line entry point for designs, fits, predictions, latent exports and
benchmark runs.
"""

import argparse
import logging
import sys
from collections import OrderedDict

import numpy as np
import pandas as pd

from src.bench_harness import (
    build_replicate, derive_seeds, export_latent, fit_model, load_experiment_configs,
    read_results_csv, run_experiment, sort_records, summarize, write_results_csv, write_summary_json
)
from src.benchmark_problems import PROBLEM_NAMES, get_problem
from src.covariance import MODEL_FAMILIES, KernelConfig
from src.doe import training_design, write_design_csv
from src.gp_fit import fit, load_model, save_model
from src.gp_predict import predict
from src.mixed_input import load_schema, read_dataset_csv, read_points_csv, save_schema

logger = logging.getLogger(__name__)


def _parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Mixed-input kriging with latent-variable kernels")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    doe = commands.add_parser("doe", help="Write a training design, or list a problem's schema")
    doe.add_argument("--problem", required=True, help=f"One of {', '.join(PROBLEM_NAMES)}")
    doe.add_argument("--n", type=int, help="Design size; omit to print the schema")
    doe.add_argument("--seed", type=int, default=0)
    doe.add_argument("--budget", type=int, default=10000, help="Maximin swap proposals")
    doe.add_argument("--out", help="Design CSV path")
    doe.add_argument("--schema-out", help="Also write the problem schema as JSON")

    fit_parser = commands.add_parser("fit", help="Fit one model on a generated training set")
    fit_parser.add_argument("--problem", help="Benchmark problem to generate training data from")
    fit_parser.add_argument("--data", help="Training CSV (inputs plus a final y column) instead of a problem")
    fit_parser.add_argument("--schema", help="Schema JSON for --data")
    fit_parser.add_argument("--model", default="LV2", choices=list(MODEL_FAMILIES))
    fit_parser.add_argument("--n", type=int, help="Training size (problem default when omitted)")
    fit_parser.add_argument("--seed", type=int, default=0, help="Master seed; replicate 0 seeds are used")
    fit_parser.add_argument("--starts", type=int, default=200)
    fit_parser.add_argument("--out", required=True, help="Model file path (JSON)")

    pred = commands.add_parser("predict", help="Predict at query points from a model file")
    pred.add_argument("--model", required=True)
    pred.add_argument("--in", dest="input", required=True, help="Query CSV with one column per input")
    pred.add_argument("--out", required=True)

    latent = commands.add_parser("latent", help="Export latent coordinates of an LV model")
    latent.add_argument("--model", required=True)
    latent.add_argument("--out", required=True)

    bench = commands.add_parser("bench", help="Run experiments from a TOML config")
    bench.add_argument("--config", required=True)
    bench.add_argument("--out", help="Results CSV (overrides results_path)")

    summary = commands.add_parser("summarize", help="Median and quartile RRMSE per problem and model")
    summary.add_argument("--results", required=True)
    summary.add_argument("--json", help="Also write the summary as JSON")
    return parser.parse_args(argv)


def cmd_doe(args) -> int:
    problem = get_problem(args.problem, args.seed)
    if args.schema_out:
        save_schema(problem.schema, args.schema_out)
        print(f"Wrote schema to {args.schema_out}")
    if args.n is None:
        print(f"Problem {problem.name} (default n = {problem.n_train})")
        for quant in problem.schema.quantitative:
            print(f"  {quant.name:8s} [{quant.lower:g}, {quant.upper:g}]")
        for factor in problem.schema.qualitative:
            print(f"  {factor.name:8s} {factor.m} levels: {', '.join(factor.levels)}")
        return 0
    if not args.out:
        print("--out is required when --n is given")
        return 2
    seeds = derive_seeds(args.seed, 0)
    design = training_design(args.n, problem.schema, seeds.design, seeds.level, args.budget)
    write_design_csv(design, problem.schema, args.out)
    print(f"Wrote {design.n}-point design (maximin distance {design.score:.4f}) to {args.out}")
    return 0


def cmd_fit(args) -> int:
    if args.data:
        return _fit_dataset(args)
    if not args.problem:
        print("either --problem or --data is required")
        return 2
    problem = get_problem(args.problem)
    n = args.n or problem.n_train
    seeds = derive_seeds(args.seed, 0)
    replicate = build_replicate(args.problem, n, 2, seeds, 10000)
    model = fit_model(replicate, args.model, args.starts)
    save_model(model, args.out)
    print(f"Fitted {args.model} on {args.problem} (n={n}): nll={model.nll:.6g}, "
          f"jitter={model.jitter:.1e}, best start {model.diagnostics.start_index}")
    print(f"Saved model to {args.out}")
    return 0


def _fit_dataset(args) -> int:
    if not args.schema:
        print("--schema is required with --data")
        return 2
    data = read_dataset_csv(args.data, load_schema(args.schema))
    model = fit(data, KernelConfig.for_model(args.model), n_starts=args.starts,
                seed=derive_seeds(args.seed, 0).start)
    save_model(model, args.out)
    print(f"Fitted {args.model} on {args.data} (n={data.n}): nll={model.nll:.6g}, "
          f"jitter={model.jitter:.1e}, best start {model.diagnostics.start_index}")
    print(f"Saved model to {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X, T, _ = read_points_csv(args.input, model.schema)
    mean, variance = predict(model, X, T)
    pd.DataFrame({'mean': mean, 'variance': variance}).to_csv(args.out, index=False)
    print(f"Wrote {len(mean)} predictions to {args.out}")
    return 0


def cmd_latent(args) -> int:
    model = load_model(args.model)
    frame = export_latent(model, args.out)
    print(f"Wrote {len(frame)} latent coordinates to {args.out}")
    return 0


def cmd_bench(args) -> int:
    configs = load_experiment_configs(args.config)
    outputs = OrderedDict()
    for config in configs:
        path = args.out or config.resolve_path(config.results_path) or "results.csv"
        outputs.setdefault(path, {'records': [], 'summary': config.resolve_path(config.summary_path)})
        outputs[path]['records'].extend(run_experiment(config))

    for path, output in outputs.items():
        records = sort_records(output['records'])
        write_results_csv(records, path)
        failed = sum(1 for r in records if r.error)
        print(f"Wrote {len(records)} records ({failed} failed) to {path}")
        if output['summary']:
            write_summary_json(summarize(records), output['summary'])
            print(f"Wrote summary to {output['summary']}")
    return 0


def cmd_summarize(args) -> int:
    summary = summarize(read_results_csv(args.results))
    with pd.option_context('display.float_format', '{:.4f}'.format, 'display.width', 120):
        print(summary.to_string(index=False))
    if args.json:
        write_summary_json(summary, args.json)
    return 0


COMMANDS = {
    'doe': cmd_doe,
    'fit': cmd_fit,
    'predict': cmd_predict,
    'latent': cmd_latent,
    'bench': cmd_bench,
    'summarize': cmd_summarize,
}


def main(argv=None) -> int:
    args = _parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s'
    )
    np.seterr(over='ignore', under='ignore')
    try:
        return COMMANDS[args.command](args)
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
