"""Command-line entry point: one subcommand per experiment.

Output is CSV (first line ``# {json metadata}``) or JSON.  On failure a
single-line JSON error record goes to stderr and the exit code is nonzero:
2 for rejected arguments or configuration, 1 for runtime failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, Table, run

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in _list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in _list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pckhdmr", description="Cut-HDMR surrogate experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with experiment settings")
        p.add_argument("--seed", type=_seed)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--method", type=_list, help="comma-separated methods")
        p.add_argument("--function", type=_list, help="comma-separated benchmark names")
        p.add_argument("--C", type=_floats, help="insertion ratio(s)")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--budget", type=_ints, help="evaluation cap(s)")
        p.add_argument("--replicates", type=int)
        p.add_argument("--n-validation", type=int)
        if name == "sensitivity":
            p.add_argument("--mc-samples", type=int)
        if name == "fit":
            p.add_argument("--save-model", help="write the fitted model as JSON")
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def config_from_args(args) -> ExperimentConfig:
    opts = _load_config(args.config) if args.config else {}
    if opts.pop("experiment", args.experiment) != args.experiment:
        raise ConfigError("config file is for a different experiment")
    build = dict(opts.pop("build", {}))
    direct = {
        "seed": args.seed,
        "functions": args.function,
        "methods": args.method,
        "budgets": args.budget,
        "replicates": args.replicates,
        "n_validation": args.n_validation,
        "mc_samples": getattr(args, "mc_samples", None),
        "save_model": getattr(args, "save_model", None),
    }
    opts.update({k: v for k, v in direct.items() if v is not None})
    if args.epsilon is not None:
        build["epsilon"] = args.epsilon
    if args.C is not None:
        if args.experiment == "c-sweep":
            opts["C_values"] = args.C
        elif len(args.C) == 1:
            build["C"] = args.C[0]
        else:
            raise ConfigError("only c-sweep accepts several C values")
    opts["build"] = build
    return ExperimentConfig.create(args.experiment, **opts)


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"meta": table.meta, "columns": table.columns, "rows": table.rows},
                          indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(table.meta, sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.DictWriter(buf, fieldnames=table.columns, lineterminator="\n", extrasaction="raise")
    w.writeheader()
    for row in table.rows:
        w.writerow(row)
    return buf.getvalue()


def _error(kind: str, exc: BaseException, experiment=None) -> None:
    rec = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    if experiment:
        rec["experiment"] = experiment
    sys.stderr.write(json.dumps(rec, sort_keys=True) + "\n")


def main(argv=None) -> int:
    experiment = None
    try:
        args = make_parser().parse_args(argv)
        experiment = args.experiment
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        cfg = config_from_args(args)
    except ConfigError as exc:
        _error("config", exc, experiment)
        return EXIT_CONFIG
    try:
        table = run(cfg)
        table.meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        text = render(table, args.format)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        _error("config", exc, experiment)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable record
        # partial output is suppressed: nothing is written unless the run finished
        _error("runtime", exc, experiment)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
