"""Command-line front end: field | eisenstein | lvalue | cmcycle | verify."""

import argparse
import csv
import json
import sys
import threading
import time
from fractions import Fraction
from typing import Dict, List, Optional, TextIO, Tuple

from cachetools import LRUCache, cached
from pydantic import ValidationError
from sympy import isprime

from arith_kernel import rat_str
from borcherds_eval import cm_value
from cm_cycle import enumerate_cm
from cm_quartic import CMQuartic, build_cm_field
from config import config
from errors import (BasisConstructionFailed, BigCMError, HypothesisViolated, NotPlusSpace,
                    TailNotConvergent)
from hecke_rho import BmTable, bm_table
from l_series import lambda_derivative_at_zero, lambda_numeric, lambda_zero_exact
from logging_config import logger
from models import (BmTableReport, CMCycleReport, ErrorReport, FieldReport, JobConfig,
                    LValueReport, ObstructionReport, Report, VerifyReport)
from quad_field import QuadField
from result_cache import ResultCache, cache_key
from weakly_holomorphic import Obstruction, construct_weakly_holomorphic

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_HYPOTHESIS = 2
EXIT_OBSTRUCTION = 3
EXIT_TAIL = 4

REPORT_TYPES = {
    cls.__name__: cls
    for cls in (FieldReport, BmTableReport, LValueReport, CMCycleReport, VerifyReport, ObstructionReport)
}


def parse_principal_part(text: str) -> Dict[int, int]:
    """'-1:1,-4:2' -> {-1: 1, -4: 2}."""
    result: Dict[int, int] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        exponent, _, coeff = item.partition(":")
        result[int(exponent)] = result.get(int(exponent), 0) + int(coeff or 1)
    return result


@cached(cache=LRUCache(maxsize=16), key=lambda D, a, b: (D, a, b), lock=threading.Lock())
def _field(D: int, a: Fraction, b: Fraction) -> CMQuartic:
    if not (D > 2 and D % 4 == 1 and isprime(D)):
        raise HypothesisViolated(["D ≡ 1 mod 4 prime"])
    F = QuadField(D)
    return build_cm_field(D, F.elem(a, b))


def load_field(job: JobConfig) -> CMQuartic:
    a, b = job.delta_coords
    return _field(job.D, a, b)


def cmd_field(job: JobConfig, cache: ResultCache) -> Tuple[Report, int]:
    cm = load_field(job)
    data = cm.to_json()
    data["lambda_zero"] = rat_str(lambda_zero_exact(cm))
    return FieldReport(**data), EXIT_OK


def _cached_prefix(job: JobConfig, cache: ResultCache) -> Optional[BmTable]:
    for m in range(job.m_max - 1, 0, -1):
        entry = cache.get(cache_key("eisenstein", job.descriptor(), {"m_max": m}))
        if entry is not None:
            logger.info(f"Reusing cached b_m prefix up to m = {m}", extra={"m_max": m})
            return BmTable.from_json(entry["report"])
    return None


def cmd_eisenstein(job: JobConfig, cache: ResultCache) -> Tuple[Report, int]:
    cm = load_field(job)
    previous = _cached_prefix(job, cache) if job.use_cache else None
    table = bm_table(cm, job.m_max, previous=previous)
    return BmTableReport(**table.to_json()), EXIT_OK


def cmd_lvalue(job: JobConfig, cache: ResultCache) -> Tuple[Report, int]:
    cm = load_field(job)
    s = Fraction(job.s)
    value = lambda_numeric(cm, float(s) if s.denominator != 1 else int(s), job.precision)
    derivative = lambda_derivative_at_zero(cm, job.precision).to_json() if s == 0 else None
    report = LValueReport(
        field=cm.descriptor(),
        s=rat_str(s),
        value=value.to_json(),
        derivative_at_zero=derivative,
        exact_at_zero=rat_str(lambda_zero_exact(cm)),
        precision=job.precision,
    )
    return report, EXIT_OK


def cmd_cmcycle(job: JobConfig, cache: ResultCache) -> Tuple[Report, int]:
    cm = load_field(job)
    cycle = enumerate_cm(cm, job.precision)
    return CMCycleReport(**cycle.to_json()), EXIT_OK


def cmd_verify(job: JobConfig, cache: ResultCache) -> Tuple[Report, int]:
    cm = load_field(job)
    try:
        form = construct_weakly_holomorphic(cm.D, job.principal_part, precision=max(120, job.trace_bound + 1))
    except NotPlusSpace as exc:
        # no plus-space form can carry a non-residue exponent
        return ObstructionReport(
            D=cm.D,
            principal_part={str(n): c for n, c in sorted(job.principal_part.items()) if c},
            weights_tried=[],
            rank=0,
            conditions=0,
            message=str(exc),
        ), EXIT_OBSTRUCTION
    if isinstance(form, Obstruction):
        return ObstructionReport(**form.to_json()), EXIT_OBSTRUCTION
    report = cm_value(cm, form, trace_bound=job.trace_bound, precision=job.precision)
    data = report.to_json()
    data["form"] = {
        "principal_part": {str(n): rat_str(c) for n, c in form.principal_part().items()},
        "constant_term": rat_str(Fraction(form.constant_term())),
        "precision": form.precision,
    }
    return VerifyReport(**data), EXIT_OK if report.passed else EXIT_FAILURE


COMMANDS = {
    "field": cmd_field,
    "eisenstein": cmd_eisenstein,
    "lvalue": cmd_lvalue,
    "cmcycle": cmd_cmcycle,
    "verify": cmd_verify,
}


def run(job: JobConfig, cache: Optional[ResultCache] = None) -> Tuple[Report, int]:
    """Run one job, serving and storing results through the on-disk cache."""
    cache = cache or ResultCache(job.cache_dir)
    key = cache_key(job.command, job.descriptor(), job.parameters())
    if job.use_cache:
        entry = cache.get(key)
        if entry is not None:
            logger.info(f"{job.command}: served from cache", extra={"cache_key": key})
            return REPORT_TYPES[entry["type"]](**entry["report"]), int(entry["exit_code"])

    started = time.time()
    report, code = COMMANDS[job.command](job, cache)
    logger.info(f"{job.command} finished", extra={"D": job.D, "elapsed": round(time.time() - started, 3)})
    if job.use_cache:
        cache.put(key, {"type": type(report).__name__, "exit_code": code, "report": report.as_dict()})
    return report, code


def emit(report: Report, fmt: str, stream: TextIO = None):
    stream = stream or sys.stdout
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerows(report.csv_rows())
    elif fmt == "text":
        stream.write("\n".join(report.text_lines()) + "\n")
    else:
        stream.write(json.dumps(report.as_dict(), sort_keys=True, indent=2) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--D", type=int, required=True, help="discriminant of F, a prime = 1 mod 4")
    common.add_argument("--delta", required=True, help="delta = a + b*sqrt(D) given as 'a,b'")
    common.add_argument("--precision", type=int, default=config.default_precision, help="bits")
    common.add_argument("--cache-dir", default=None, help="cache directory (BIGCM_CACHE)")
    common.add_argument("--format", choices=["json", "csv", "text"], default="json")
    common.add_argument("--no-cache", action="store_true", help="ignore and do not write the cache")

    parser = argparse.ArgumentParser(prog="bigcm", description="CM values of Borcherds products on Hilbert modular surfaces")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("field", parents=[common], help="CM field invariants")
    eis = sub.add_parser("eisenstein", parents=[common], help="b_m table")
    eis.add_argument("--mmax", type=int, default=20)
    lv = sub.add_parser("lvalue", parents=[common], help="Lambda(s, chi)")
    lv.add_argument("--s", default="0")
    sub.add_parser("cmcycle", parents=[common], help="CM points")
    ver = sub.add_parser("verify", parents=[common], help="CM value identity")
    ver.add_argument("--trace-bound", type=int, default=config.trace_bound)
    ver.add_argument("--principal-part", default="-1:1", help="e.g. '-1:1,-4:2' for q^-1 + 2q^-4")
    return parser


def job_from_args(args: argparse.Namespace) -> JobConfig:
    return JobConfig(
        command=args.command,
        D=args.D,
        delta=args.delta,
        m_max=getattr(args, "mmax", 20),
        precision=args.precision,
        trace_bound=getattr(args, "trace_bound", config.trace_bound),
        s=getattr(args, "s", "0"),
        cache_dir=args.cache_dir,
        format=args.format,
        principal_part=parse_principal_part(getattr(args, "principal_part", "-1:1")),
        use_cache=not args.no_cache,
    )


def _fail(error: Exception, code: int, stream: TextIO, details: dict = None) -> int:
    logger.error(f"{type(error).__name__}: {error}")
    emit(ErrorReport(error=type(error).__name__, message=str(error), exit_code=code, details=details), "json", stream)
    return code


def main(argv: Optional[List[str]] = None, stream: TextIO = None) -> int:
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        job = job_from_args(args)
    except (ValidationError, ValueError) as exc:
        return _fail(exc, EXIT_HYPOTHESIS, stream)

    try:
        report, code = run(job)
    except HypothesisViolated as exc:
        return _fail(exc, EXIT_HYPOTHESIS, stream, {"failures": exc.failures})
    except BasisConstructionFailed as exc:
        return _fail(exc, EXIT_OBSTRUCTION, stream, exc.diagnostics)
    except TailNotConvergent as exc:
        return _fail(exc, EXIT_TAIL, stream)
    except BigCMError as exc:
        return _fail(exc, EXIT_FAILURE, stream)

    emit(report, job.format, stream)
    return code
