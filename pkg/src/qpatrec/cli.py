"""Command line entry point: ``simulate``, ``recognize``, ``sweep`` and ``selftest``.

Exit codes: 0 success, 1 parse or constraint error, 2 quantum/classical
recognition mismatch, 3 selftest failure.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from dataclasses import asdict
from typing import Iterator, Optional, Sequence, TextIO

from . import recognizer
from .bbht_search import DEFAULT_CAP_FACTOR, DEFAULT_LAMBDA, SearchConfig, run_search
from .instance import InstanceError, load_instance
from .pattern_model import PatternError
from .quantum_engine import EngineError, QueryContext
from .reports import recognition_record, run_context, search_record, write_records
from .selftest import run_selftest
from .sweep import run_sweep

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DIFF = 2
EXIT_SELFTEST = 3

log = logging.getLogger("qpatrec")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="instance JSON file")
    common.add_argument("--engine", choices=("full", "reduced"), default="reduced")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cap-factor", type=float, default=DEFAULT_CAP_FACTOR)
    common.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    common.add_argument("--report", help="write JSON Lines here instead of stdout")
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(prog="qpatrec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="one search for one feature")
    sim.add_argument("--feature", type=int, required=True)
    sim.add_argument("--alpha", type=int, help="override the instance threshold")

    sub.add_parser("recognize", parents=[common], help="recognize the whole codebook")

    sw = sub.add_parser("sweep", parents=[common], help="query-count sweep over N and M")
    sw.add_argument("--n", type=_int_list, required=True)
    sw.add_argument("--m", type=_int_list, required=True)
    sw.add_argument("--trials", type=int, default=1000)

    sub.add_parser("selftest", parents=[common], help="run the invariant suites")
    return parser


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _config(args: argparse.Namespace) -> SearchConfig:
    return SearchConfig(lam=args.lam, seed=args.seed, cap_factor=args.cap_factor, engine=args.engine)


def _need_instance(args: argparse.Namespace):
    if not args.instance:
        raise InstanceError("--instance is required for this command", "required option")
    return load_instance(args.instance)


def cmd_simulate(args: argparse.Namespace, out: TextIO) -> int:
    inst = _need_instance(args)
    db = inst.database
    alpha = inst.alpha if args.alpha is None else args.alpha
    ctx = QueryContext.for_database(db, alpha, args.feature, inst.mode)
    config = _config(args)
    report = run_search(db, ctx, config)
    context = run_context(config, db.N, inst.digest())
    write_records([search_record(report, feature=ctx.query_feature, alpha=alpha,
                                 mode=ctx.mode.value, **context)], out)
    return EXIT_OK


def cmd_recognize(args: argparse.Namespace, out: TextIO) -> int:
    inst = _need_instance(args)
    db = inst.database
    config = _config(args)
    report = recognizer.recognize_all(db, inst.codebook, inst.alpha, config, inst.mode, args.jobs)
    classical = recognizer.brute_force_recognize(db, inst.codebook, inst.alpha, inst.mode)
    diff = recognizer.diff_reports(report, classical)
    context = run_context(config, db.N, inst.digest())
    records = [
        search_record(s, feature=e.feature, entry=k, search=n, alpha=inst.alpha,
                      mode=inst.mode.value, **context)
        for k, e in enumerate(report.entries)
        for n, s in enumerate(e.searches)
    ]
    records.append(recognition_record(report, diff, alpha=inst.alpha, mode=inst.mode.value, **context))
    write_records(records, out)
    if diff:
        log.error("quantum and classical recognition differ in %d places", len(diff))
        return EXIT_DIFF
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, out: TextIO) -> int:
    if args.engine != "reduced":
        raise EngineError("sweep runs on the reduced engine only")
    config = _config(args)
    rows = run_sweep(args.n, args.m, args.trials, config, args.jobs)
    records = []
    for row in rows:
        rec = {"kind": "sweep_row", **asdict(row), **run_context(config, row.N, row.instance_digest)}
        records.append(rec)
    write_records(records, out)
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace, out: TextIO) -> int:
    results = run_selftest(args.seed)
    write_records([{"kind": "selftest", "seed": args.seed, **asdict(r)} for r in results], out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST


COMMANDS = {
    "simulate": cmd_simulate,
    "recognize": cmd_recognize,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        with _output(args.report) as out:
            return COMMANDS[args.command](args, out)
    except (InstanceError, PatternError, EngineError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
