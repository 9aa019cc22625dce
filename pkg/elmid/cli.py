import argparse
import logging
import pathlib
import sys
from typing import List, Optional

from .harness import (
    PAPER_SEEDS,
    ExperimentConfig,
    apply_overrides,
    export_csv,
    export_weights_csv,
    load_config,
    reproduce_paper_tables,
    run_experiment,
    run_file_name,
    summary_table,
)
from .plants import PLANTS
from .utilities import ConfigError, DivergenceError, OutputError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def get_arguments(argv: Optional[List[str]] = None) -> dict:
    parser = argparse.ArgumentParser(
        prog="elmid", description="Online ELM system identification benchmarks (Lyapunov ELM vs online ELM)."
    )
    parser.add_argument("--log-level", type=str, action="store", default="WARNING")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run one experiment.")
    run.add_argument("--config", type=str, action="store", default=None)
    run.add_argument("--plant", type=str, action="store", choices=sorted(PLANTS) + ["synthetic_elm"], default=None)
    run.add_argument("--noise-sigma", type=float, action="store", default=None)
    run.add_argument("--seed", type=int, action="store", default=None)
    run.add_argument("--dt", type=float, action="store", default=None)
    run.add_argument("--duration", type=float, action="store", default=None)
    run.add_argument("--out", type=str, action="store", default=None)

    reproduce = subparsers.add_parser("reproduce", help="Reproduce the DC motor and Lorentz comparison tables.")
    reproduce.add_argument("--paper-tables", action="store_true")
    reproduce.add_argument("--out", type=str, action="store", required=True)
    reproduce.add_argument("--seeds", type=int, action="store", default=len(PAPER_SEEDS))
    reproduce.add_argument("--workers", type=int, action="store", default=1)
    reproduce.add_argument("--dt", type=float, action="store", default=None)
    reproduce.add_argument("--duration", type=float, action="store", default=None)
    return vars(parser.parse_args(argv))


def run_command(arguments: dict) -> int:
    config = load_config(arguments["config"]) if arguments["config"] else ExperimentConfig()
    config = apply_overrides(
        config,
        plant=arguments["plant"],
        noise_sigma=arguments["noise_sigma"],
        seed=arguments["seed"],
        dt=arguments["dt"],
        duration=arguments["duration"],
        out=arguments["out"],
    )
    result = run_experiment(config)

    print(summary_table([result], title=f"Plant: {result.config.plant}, seed {result.config.seed}"))
    if result.config.out:
        out_dir = pathlib.Path(result.config.out)
        path = out_dir / run_file_name(result)
        export_csv(result, path)
        export_weights_csv(result, path.with_name(path.stem + "_weights.csv"))
        print(f"Saved results to '{path}'")
    return EXIT_DIVERGED if result.any_diverged else EXIT_OK


def reproduce_command(arguments: dict) -> int:
    if not arguments["paper_tables"]:
        raise ConfigError("reproduce needs --paper-tables")
    seeds = tuple(range(arguments["seeds"]))
    overrides = {key: arguments[key] for key in ("dt", "duration") if arguments[key] is not None}
    results, tables = reproduce_paper_tables(
        arguments["out"], seeds=seeds, workers=arguments["workers"], **overrides
    )
    print(tables)
    print(f"Saved results to '{arguments['out']}'")
    return EXIT_DIVERGED if any(r.any_diverged for r in results) else EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    arguments = get_arguments(argv)
    logging.basicConfig(
        level=arguments["log_level"].upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    try:
        if arguments["command"] == "run":
            return run_command(arguments)
        return reproduce_command(arguments)
    except ConfigError as exc:
        print(f"Configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DivergenceError as exc:
        print(f"Simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
