"""
Command-line entry point.

    lmf-solve        h, p_N, p_S, c^gamma over a gamma grid (or h* vs lambda q+)
    equilibria       equilibria, social optimum and price of anarchy
    adoption-curve   equilibrium adoption over (q-, c / l)
    poa-curve        price of anarchy over c / l
    validate         simulation vs local mean field (or vs exact enumeration)
    tipping          minimal seeded adoption that cascades to the top equilibrium
    simulate         one Monte Carlo run on a generated or loaded graph
    gen-graph        write a random graph in edge-list format

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numeric failure.
"""
import argparse
import logging
import sys
from typing import List, Optional

from . import config
from .errors import (BudgetExceededError, ConfigError, ConvergenceError, DomainError, RegimeError,
                     TreeTooLargeError)
from .experiments import output, tables
from .experiments.params import CASES, FORMATS, load_config
from .network.graphs import write_edge_list

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def banner(title: str) -> None:
    print("=" * 70, file=sys.stderr)
    print(title, file=sys.stderr)
    print("=" * 70, file=sys.stderr)


def status(ok: bool, message: str) -> None:
    print(f"[{'OK' if ok else 'FAIL'}] {message}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="TOML experiment config")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=FORMATS, default=None, help="output format (default: csv)")
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    common.add_argument("--case", choices=CASES, default=None,
                        help="strong: p-=q-=0, weak: q-=q+, general: as configured")
    common.add_argument("--include-unstable", action="store_true",
                        help="count unstable interior equilibria in the price of anarchy")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value with a TOML literal (repeatable)")

    parser = argparse.ArgumentParser(prog="netsec-lmf", description="Network security investment under local mean field")
    sub = parser.add_subparsers(dest="command", required=True)

    lmf = sub.add_parser("lmf-solve", parents=[common], help="solve the local mean field over gamma")
    lmf.add_argument("--sweep-lambda-q", action="store_true", help="emit h* as a function of lambda q+")
    sub.add_parser("equilibria", parents=[common], help="enumerate equilibria")
    sub.add_parser("adoption-curve", parents=[common], help="adoption curves over q- and c / l")
    sub.add_parser("poa-curve", parents=[common], help="price of anarchy over c / l")
    validate = sub.add_parser("validate", parents=[common], help="simulation vs analytic validation")
    validate.add_argument("--tiny", action="store_true", help="compare Monte Carlo with exact enumeration")
    sub.add_parser("tipping", parents=[common], help="tipping threshold of best-response dynamics")
    simulate = sub.add_parser("simulate", parents=[common], help="run the Monte Carlo simulator")
    simulate.add_argument("--graph", help="edge-list file to simulate on")
    sub.add_parser("gen-graph", parents=[common], help="generate a random graph as an edge list")
    return parser


def _run(args) -> int:
    overrides = list(args.overrides)
    if getattr(args, "graph", None):
        overrides += ['graph.kind="file"', f"graph.path={_toml_string(args.graph)}"]
    cfg = load_config(args.params, overrides, seed=args.seed, case=args.case,
                      include_unstable=args.include_unstable, fmt=args.format, out=args.out)
    command = args.command
    logger.debug("config %s, overrides %s", cfg.source or "<defaults>", cfg.overrides)
    banner(f"NETSEC-LMF {command.upper()}")

    if command == "lmf-solve":
        frame, meta = tables.lambda_q_sweep(cfg) if args.sweep_lambda_q else tables.lmf_table(cfg)
    elif command == "equilibria":
        frame, meta = tables.equilibria_table(cfg)
        status(True, f"{len(frame)} equilibrium(s), price of anarchy {meta['price_of_anarchy']:.6g}")
    elif command == "adoption-curve":
        frame, meta = tables.adoption_table(cfg)
        witnesses = tables.non_monotone_witnesses(frame)
        meta["non_monotone_cells"] = len(witnesses)
        status(True, f"{len(frame)} rows, {len(witnesses)} cell(s) where a better technology is adopted less")
    elif command == "poa-curve":
        frame, meta = tables.poa_table(cfg)
    elif command == "tipping":
        frame, meta = tables.tipping_table(cfg)
        status(True, f"tipping threshold: {meta['threshold']}")
    elif command == "simulate":
        frame, meta = tables.simulate_table(cfg)
        status(True, f"mean infected {meta['outcome']['mean_infected']:.6g} over {cfg.get('sim', 'trials')} trials")
    elif command == "gen-graph":
        graph = tables.load_graph(cfg)
        if cfg.out is None:
            raise ConfigError("--out: gen-graph needs an output path")
        write_edge_list(graph, cfg.out)
        status(True, f"wrote n={graph.n} m={graph.m} to {cfg.out}")
        return EXIT_OK
    elif command == "validate":
        frame, meta, passed = tables.validate_tiny_table(cfg) if args.tiny else tables.validate_table(cfg)
        output.emit(frame, cfg.fmt, cfg.out, meta)
        status(passed, "validation thresholds met" if passed else "validation thresholds violated")
        return EXIT_OK if passed else EXIT_VALIDATION
    else:  # argparse restricts the choices
        raise ConfigError(f"unknown command {command!r}")

    output.emit(frame, cfg.fmt, cfg.out, meta)
    return EXIT_OK


def _toml_string(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=config.LOG_LEVEL, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, DomainError, RegimeError, TreeTooLargeError, BudgetExceededError) as exc:
        status(False, f"configuration error: {exc}")
        return EXIT_CONFIG
    except ConvergenceError as exc:
        status(False, f"numeric failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
