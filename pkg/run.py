"""
Точка входа командной строки.

Результат печатается в stdout (или --out) одним JSON-документом,
журнал пишется в stderr.
"""
import argparse
import json
import logging
import sys
import time
from typing import Dict, List, Optional

from pydantic import ValidationError

import config
from controllers.commands import COMMANDS, RAW_OUTPUT, RunConfig
from storage.results import ResultEnvelope, dump_result, to_jsonable
from utils.constants import EXIT_INPUT_ERROR, EXIT_INTERNAL, EXIT_OK, EXIT_UNKNOWN_COMMAND, TOOL_NAME, VERSION
from utils.errors import HamiltonianToolError
from utils.logger import setup_logging
from utils.parallel import set_threads

logger = logging.getLogger(__name__)

ENVELOPE_FLAGS = ("eps", "gamma", "beta", "q", "trials", "solver", "mode", "kparam", "r", "l", "restarts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Product-state estimators for local Hamiltonians",
    )
    parser.add_argument("command", help=f"one of: {', '.join(COMMANDS)}")
    parser.add_argument("--input", "-i", help="instance file (JSON)")
    parser.add_argument("--graph", help="graph file (JSON) for qmc and threshold-rank")
    parser.add_argument("--eps", type=float, default=0.5)
    parser.add_argument("--gamma", type=float, default=0.25)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--q", type=int)
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--solver", default="direct")
    parser.add_argument("--mode", help="estimator mode: exhaustive, guided or direct")
    parser.add_argument("--threads", type=int)
    parser.add_argument("--out", "-o", help="write the result here instead of stdout")
    parser.add_argument("--kparam", type=int, default=2, help="Baker layering parameter")
    parser.add_argument("-r", type=int, dest="r", help="cluster size for the sparse pipeline")
    parser.add_argument("-l", type=int, dest="l", default=2, help="measured qudits in eb-experiment")
    parser.add_argument("--restarts", type=int, default=8)
    parser.add_argument("--delta", type=float, action="append", dest="deltas", default=[])
    parser.add_argument("--family", help="generator family for gen")
    parser.add_argument("--param", action="append", default=[], help="generator parameter key=value")
    parser.add_argument("--scan-all", action="store_true")
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    return parser


def _params(pairs: List[str]) -> Dict[str, str]:
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ValueError(f"--param expects key=value, got {pair!r}")
        params[key.strip()] = value.strip()
    return params


def _emit_error(error: Exception, kind: str) -> None:
    sys.stdout.write(json.dumps({"error": str(error), "type": kind}, sort_keys=True) + "\n")


def _write_raw(payload: Dict, out: Optional[str]) -> None:
    text = json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        logger.info(f"Wrote {out}")


def dispatch(cfg: RunConfig) -> int:
    """
    Выполняет команду и пишет результат.

    Returns:
        int: код возврата
    """
    set_threads(cfg.threads or config.THREADS)
    started = time.perf_counter()
    result = COMMANDS[cfg.command](cfg)
    if cfg.command in RAW_OUTPUT:
        _write_raw(result, cfg.out)
        return EXIT_OK

    result = to_jsonable(result)
    budget = result.pop("budget", None)
    if budget is not None and not isinstance(budget, dict):
        budget = {"total": budget}
    envelope = ResultEnvelope(
        command=cfg.command,
        version=VERSION,
        seed=cfg.seed,
        params={k: getattr(cfg, k) for k in ENVELOPE_FLAGS if getattr(cfg, k) is not None},
        result=result,
        budget=budget,
        timing={"wall_seconds": time.perf_counter() - started},
    )
    dump_result(envelope, cfg.out)
    logger.info(f"{cfg.command} finished in {envelope.timing['wall_seconds']:.3f}s")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, config.LOG_FILE)

    if args.command not in COMMANDS:
        build_parser().print_usage(sys.stderr)
        logger.error(f"Unknown command {args.command!r}")
        return EXIT_UNKNOWN_COMMAND

    try:
        params = _params(args.param)
        cfg = RunConfig(
            command=args.command,
            input=args.input,
            graph=args.graph,
            eps=args.eps,
            gamma=args.gamma,
            beta=args.beta,
            q=args.q,
            trials=args.trials,
            seed=args.seed,
            solver=args.solver,
            mode=args.mode,
            threads=args.threads,
            out=args.out,
            kparam=args.kparam,
            r=args.r,
            l=args.l,
            restarts=args.restarts,
            deltas=args.deltas,
            family=args.family,
            params=params,
            scan_all=args.scan_all,
        )
    except (ValidationError, ValueError) as e:
        logger.error(f"Invalid arguments: {e}")
        _emit_error(e, "InputError")
        return EXIT_INPUT_ERROR

    try:
        return dispatch(cfg)
    except HamiltonianToolError as e:
        logger.error(f"{type(e).__name__}: {e}")
        _emit_error(e, type(e).__name__)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure in {cfg.command}")
        _emit_error(e, "InvariantViolation")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
