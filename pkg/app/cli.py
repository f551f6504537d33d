"""
Command-line front end

    run             simulate one policy over an instance file
    verify          fifo | ssfw competitive-ratio sweeps against the exact optimum
    lf-lowerbound   build the LF adversary and check it exactly
    metrics         evaluate a saved transcript
    oracle          exact offline optimum of a small instance
    gen             lf-adversary | random instance generation
    validate        check a transcript against its instance

Exit codes: 0 ok, 1 verification failure, 2 usage/input error, 3 policy or
metric needs deadlines the instance lacks.
"""

import argparse
import logging
import sys
from contextlib import nullcontext
from fractions import Fraction
from typing import List, Optional

from app.core.config import settings
from app.core.exceptions import PolicyMismatchError, ServiceError, VerificationError
from app.models.schemas import MetricKind, Mode
from app.services.engine import EventLog, make_sim_config, simulate_with_stats
from app.services.generators import (
    build_lf_adversary,
    expanded_adversary,
    make_random_params,
    plan_sidecar,
    random_instance,
)
from app.services.grouped import simulate_grouped_unicast
from app.services.instances import load_instance, serialize_instance
from app.services.metrics import evaluate, per_request_report, report_csv, summarize
from app.services.oracle import optimal_schedule
from app.services.policies import make_policy
from app.services.transcripts import dump_transcript, load_transcript, validate_transcript
from app.services.verification import FamilySpec, verify_fifo, verify_lf_lowerbound, verify_ssfw
from app.utils.helpers import format_rat, format_table
from app.utils.validators import parse_rat

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_MISMATCH = 3


def _rat(text: str) -> Fraction:
    try:
        return parse_rat(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _write(path: Optional[str], text: str) -> None:
    """Write to a file, or to standard output when no path is given"""
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info(f"Wrote {path}")


def _print_lines(pairs) -> None:
    for name, value in pairs:
        print(f"{name} = {format_rat(value) if isinstance(value, Fraction) else value}")


# ============= run =============


def cmd_run(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    policy = make_policy(args.policy, args.c)
    config = make_sim_config(args.speed, args.mode, policy)

    sink = open(args.log, "w", encoding="utf-8") if args.log else nullcontext(
        sys.stderr if settings.EVENT_LOG_ENABLED else None
    )
    with sink as stream:
        event_log = EventLog(stream) if stream is not None else None
        if args.grouped:
            transcript, _ = simulate_grouped_unicast(instance, config, event_log)
            stats = None
        else:
            transcript, stats = simulate_with_stats(instance, config, event_log)

    if args.out:
        _write(args.out, dump_transcript(transcript))
    _print_lines((kind.value, value) for kind, value in summarize(transcript).items())
    if stats is not None:
        _print_lines([
            ("transmitted_volume", stats.transmitted_volume),
            ("abandoned_volume", stats.abandoned_volume),
            ("preemptions", stats.preemptions),
            ("restarts", stats.restarts),
            ("resumes", stats.resumes),
            ("idle_time", stats.idle_time),
        ])
    logger.info(f"✅ {policy.label} finished: {len(transcript.attempts)} attempts")
    return EXIT_OK


# ============= verify =============


def _family_spec(args: argparse.Namespace, defaults: dict) -> FamilySpec:
    values = dict(defaults)
    for name in ("max_pages", "horizon", "max_requests", "seeds", "max_length"):
        given = getattr(args, name)
        if given is not None:
            values[name] = given
    values["family"] = args.family
    values["seed"] = args.seed
    values["varying_sizes"] = args.varying_sizes
    return FamilySpec(**values)


def _finish_sweep(report, csv_path: Optional[str]) -> int:
    _write(csv_path, report.to_csv())
    print(f"instances = {len(report.rows)}", file=sys.stderr)
    print(f"max_ratio = {format_rat(report.max_ratio)}", file=sys.stderr)
    print(f"bound = {format_rat(report.bound)}", file=sys.stderr)
    if report.violating_instance is not None:
        print(report.violating_instance, file=sys.stderr)
    report.raise_for_violations()
    return EXIT_OK


def _sweep_defaults(args: argparse.Namespace, exhaustive: dict) -> dict:
    if args.family == "exhaustive":
        return exhaustive
    return {"max_pages": 3, "horizon": 5, "max_requests": 6, "seeds": 500, "max_length": 3}


def cmd_verify_fifo(args: argparse.Namespace) -> int:
    defaults = _sweep_defaults(args, {"max_pages": 3, "horizon": 5, "max_requests": 5})
    report = verify_fifo(_family_spec(args, defaults), workers=args.workers)
    return _finish_sweep(report, args.csv)


def cmd_verify_ssfw(args: argparse.Namespace) -> int:
    defaults = _sweep_defaults(args, {"max_pages": 2, "horizon": 3, "max_requests": 4})
    report = verify_ssfw(args.epsilon, _family_spec(args, defaults), workers=args.workers)
    return _finish_sweep(report, args.csv)


# ============= lf-lowerbound =============


def cmd_lf_lowerbound(args: argparse.Namespace) -> int:
    report = verify_lf_lowerbound(args.s, args.c, args.k, compressed=args.compressed)
    _print_lines([
        ("k", report.k),
        ("jobs", report.jobs),
        ("lf_max_delay_factor", report.lf_value),
        ("opt_max_delay_factor", report.opt_value),
        ("ratio", report.ratio),
    ])
    rows = [["check", "expected", "got", "status"]]
    rows += [[c.name, c.expected, c.got, "ok" if c.ok else "FAIL"] for c in report.checks]
    print(format_table(rows))
    report.raise_for_failures()
    return EXIT_OK


# ============= metrics / oracle / validate =============


def cmd_metrics(args: argparse.Namespace) -> int:
    transcript = load_transcript(args.transcript)
    if args.report:
        _write(None, report_csv(per_request_report(transcript)))
        return EXIT_OK
    if args.metric:
        kind = MetricKind(args.metric)
        _print_lines([(kind.value, evaluate(transcript, kind))])
    else:
        _print_lines((kind.value, value) for kind, value in summarize(transcript).items())
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    result = optimal_schedule(instance, MetricKind(args.metric), speed=args.speed, cap=args.cap)
    _write(args.out, result.model_dump_json(indent=2))
    print(f"{args.metric} = {format_rat(result.objective)}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    transcript = load_transcript(args.transcript)
    violations = validate_transcript(instance, transcript)
    if transcript.instance != instance:
        violations.insert(0, "transcript embeds a different instance")
    for line in violations:
        print(line)
    if violations:
        logger.error(f"❌ {len(violations)} violations")
        return EXIT_VERIFICATION
    print("valid")
    return EXIT_OK


# ============= gen =============


def cmd_gen_lf_adversary(args: argparse.Namespace) -> int:
    build = expanded_adversary if args.expand else build_lf_adversary
    plan, instance = build(args.s, args.c, args.k)
    _write(args.out, serialize_instance(instance))
    if args.plan:
        _write(args.plan, plan_sidecar(plan))
    return EXIT_OK


def cmd_gen_random(args: argparse.Namespace) -> int:
    params = make_random_params(
        pages=args.pages,
        requests=args.requests,
        horizon=args.horizon,
        max_length=args.max_length,
        granularity=args.granularity,
        deadline_style=args.deadlines,
        weight_style=args.weights,
        slotted=args.slotted,
        setting=args.setting,
    )
    _write(args.out, serialize_instance(random_instance(args.seed, params)))
    return EXIT_OK


# ============= PARSER =============


def _add_family_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", choices=["exhaustive", "random"], default="exhaustive")
    parser.add_argument("--max-pages", type=int, dest="max_pages")
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--max-requests", type=int, dest="max_requests")
    parser.add_argument("--seeds", type=int, help="random family size")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="first seed of the random family")
    parser.add_argument("--varying-sizes", action="store_true", dest="varying_sizes")
    parser.add_argument("--max-length", type=int, dest="max_length")
    parser.add_argument("--workers", type=int, default=None, help="worker threads (default BSIM_WORKERS)")
    parser.add_argument("--csv", help="report path (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bsim", description="Broadcast scheduling workbench")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="simulate a policy")
    run.add_argument("--instance", required=True)
    run.add_argument("--policy", required=True)
    run.add_argument("--c", type=_rat)
    run.add_argument("--speed", type=_rat, default=Fraction(1))
    run.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.NONPREEMPTIVE.value)
    run.add_argument("--grouped", action="store_true", help="batched unicast engine (lf, fifo)")
    run.add_argument("--out", help="transcript path")
    run.add_argument("--log", help="event log path")
    run.set_defaults(handler=cmd_run)

    verify = commands.add_parser("verify", help="competitive-ratio sweeps")
    which = verify.add_subparsers(dest="target", required=True)
    fifo = which.add_parser("fifo")
    _add_family_flags(fifo)
    fifo.set_defaults(handler=cmd_verify_fifo)
    ssfw = which.add_parser("ssfw")
    ssfw.add_argument("--epsilon", type=_rat, default=Fraction(1))
    _add_family_flags(ssfw)
    ssfw.set_defaults(handler=cmd_verify_ssfw)

    lower = commands.add_parser("lf-lowerbound", help="check the LF adversary exactly")
    lower.add_argument("--s", type=int, required=True)
    lower.add_argument("--c", type=int, required=True)
    lower.add_argument("--k", type=int)
    lower.add_argument("--compressed", action="store_true")
    lower.set_defaults(handler=cmd_lf_lowerbound)

    metrics = commands.add_parser("metrics", help="evaluate a transcript")
    metrics.add_argument("--transcript", required=True)
    metrics.add_argument("--metric", choices=[k.value for k in MetricKind])
    metrics.add_argument("--report", action="store_true", help="per-request CSV")
    metrics.set_defaults(handler=cmd_metrics)

    oracle = commands.add_parser("oracle", help="exact offline optimum")
    oracle.add_argument("--instance", required=True)
    oracle.add_argument("--metric", choices=[k.value for k in MetricKind], required=True)
    oracle.add_argument("--speed", type=_rat, default=Fraction(1))
    oracle.add_argument("--cap", type=int)
    oracle.add_argument("--out")
    oracle.set_defaults(handler=cmd_oracle)

    validate = commands.add_parser("validate", help="check a transcript")
    validate.add_argument("--instance", required=True)
    validate.add_argument("--transcript", required=True)
    validate.set_defaults(handler=cmd_validate)

    gen = commands.add_parser("gen", help="instance generators")
    kinds = gen.add_subparsers(dest="generator", required=True)
    adversary = kinds.add_parser("lf-adversary")
    adversary.add_argument("--s", type=int, required=True)
    adversary.add_argument("--c", type=int, required=True)
    adversary.add_argument("--k", type=int)
    adversary.add_argument("--expand", action="store_true", help="one request per job")
    adversary.add_argument("--out")
    adversary.add_argument("--plan", help="plan sidecar path")
    adversary.set_defaults(handler=cmd_gen_lf_adversary)
    rnd = kinds.add_parser("random")
    rnd.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    rnd.add_argument("--pages", type=int, default=3)
    rnd.add_argument("--requests", type=int, default=5)
    rnd.add_argument("--horizon", type=int, default=5)
    rnd.add_argument("--max-length", type=int, default=1, dest="max_length")
    rnd.add_argument("--granularity", type=int, default=1)
    rnd.add_argument("--deadlines", choices=["none", "tight", "random"], default="none")
    rnd.add_argument("--weights", choices=["unit", "random", "inverse_slack"], default="unit")
    rnd.add_argument("--slotted", action="store_true")
    rnd.add_argument("--setting", choices=["broadcast", "unicast"], default="broadcast")
    rnd.add_argument("--out")
    rnd.set_defaults(handler=cmd_gen_random)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.LOG_LEVEL),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    try:
        return args.handler(args)
    except VerificationError as e:
        print(f"verification failed: {e.message}", file=sys.stderr)
        return EXIT_VERIFICATION
    except PolicyMismatchError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_MISMATCH
    except ServiceError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
