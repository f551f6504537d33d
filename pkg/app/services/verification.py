"""
Verification Service
Batch drivers that check the competitive guarantees empirically:
FIFO max response within 2x of optimum, SSF-W delay factor within c^2 of
optimum under speed augmentation, and the exact LF lower-bound construction
"""

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Iterator, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from app.core.config import settings
from app.core.exceptions import ConfigurationError, VerificationError
from app.models.schemas import (
    Instance,
    MetricKind,
    Mode,
    PolicyConfig,
    PolicyKind,
    Rat,
    SimConfig,
)
from app.services.engine import simulate
from app.services.generators import (
    build_lf_adversary,
    make_random_params,
    random_instance,
    reference_opt_schedule,
)
from app.services.grouped import simulate_grouped_unicast
from app.services.instances import serialize_instance
from app.services.metrics import evaluate, group_wait_ratios
from app.services.oracle import enumerate_small_instances, optimal_schedule
from app.services.transcripts import validate_transcript
from app.utils.helpers import format_rat, to_csv

logger = logging.getLogger(__name__)

RATIO_HEADER = ("instance", "online", "optimum", "ratio", "bound")

# per-job LF simulations beyond this many jobs need the grouped engine
PER_JOB_LIMIT = 100_000


# ============= FAMILIES =============


class FamilySpec(BaseModel):
    """Which instances a verification run sweeps"""
    family: Literal["exhaustive", "random"] = "exhaustive"
    max_pages: int = Field(3, ge=1)
    horizon: int = Field(5, ge=0)
    max_requests: int = Field(5, ge=1)
    seeds: int = Field(500, ge=0)
    seed: int = Field(0, description="First seed of the random family")
    varying_sizes: bool = False
    max_length: int = Field(3, ge=1)
    deadlines: bool = False


def family_instances(spec: FamilySpec) -> Iterator[Tuple[str, Instance]]:
    """(name, instance) pairs in a fixed order"""
    if spec.family == "exhaustive":
        for n, instance in enumerate(
            enumerate_small_instances(spec.max_pages, spec.horizon, spec.max_requests, spec.deadlines)
        ):
            yield f"exhaustive-{n}", instance
        return
    for seed in range(spec.seed, spec.seed + spec.seeds):
        size = random.Random(seed).randint(1, spec.max_requests)
        params = make_random_params(
            pages=spec.max_pages,
            requests=size,
            horizon=spec.horizon,
            max_length=spec.max_length if spec.varying_sizes else 1,
            granularity=2 if spec.varying_sizes else 1,
            deadline_style="random" if spec.deadlines else "none",
            slotted=not spec.varying_sizes,
        )
        yield f"seed-{seed}", random_instance(seed, params)


# ============= REPORTS =============


class RatioRow(BaseModel):
    instance: str
    online: Rat
    optimum: Rat
    ratio: Rat
    bound: Rat

    def cells(self) -> list:
        return [self.instance, self.online, self.optimum, self.ratio, self.bound]


class RatioReport(BaseModel):
    """Per-instance competitive ratios of one verification run"""
    title: str
    bound: Rat
    rows: List[RatioRow] = Field(default_factory=list)
    violating_instance: Optional[str] = Field(None, description="JSON of the first instance over the bound")

    @property
    def max_ratio(self) -> Optional[Fraction]:
        return max((row.ratio for row in self.rows), default=None)

    @property
    def violations(self) -> List[RatioRow]:
        return [row for row in self.rows if row.ratio > self.bound]

    def to_csv(self) -> str:
        return to_csv(RATIO_HEADER, (row.cells() for row in self.rows))

    def raise_for_violations(self) -> None:
        bad = self.violations
        if bad:
            worst = max(bad, key=lambda row: row.ratio)
            raise VerificationError(
                f"{self.title}: {len(bad)} instances exceed bound {format_rat(self.bound)}; "
                f"worst {worst.instance} with ratio {format_rat(worst.ratio)}",
                details={"instance": worst.instance, "ratio": format_rat(worst.ratio)},
            )


def _sweep(
    title: str,
    bound: Fraction,
    spec: FamilySpec,
    measure: Callable[[Instance], Tuple[Fraction, Fraction]],
    workers: Optional[int] = None,
) -> RatioReport:
    """Run `measure` over the family, one instance per task; rows keep family order"""
    named = list(family_instances(spec))
    pool_size = workers or settings.WORKERS

    def task(item: Tuple[str, Instance]) -> RatioRow:
        name, instance = item
        online, optimum = measure(instance)
        return RatioRow(instance=name, online=online, optimum=optimum, ratio=online / optimum, bound=bound)

    if pool_size > 1:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            rows = list(pool.map(task, named))
    else:
        rows = [task(item) for item in named]

    report = RatioReport(title=title, bound=bound, rows=rows)
    bad = report.violations
    if bad:
        worst = max(bad, key=lambda row: row.ratio)
        lookup = dict(named)
        report.violating_instance = serialize_instance(lookup[worst.instance])
        logger.error(f"❌ {title}: {len(bad)} of {len(rows)} instances exceed {format_rat(bound)}")
    else:
        logger.info(
            f"✅ {title}: {len(rows)} instances, max ratio {format_rat(report.max_ratio)} <= {format_rat(bound)}"
        )
    return report


def verify_fifo(spec: FamilySpec, workers: Optional[int] = None) -> RatioReport:
    """FIFO max response at speed 1 against the exact optimum; bound 2"""
    config = SimConfig(speed=Fraction(1), policy=PolicyConfig(kind=PolicyKind.FIFO))

    def measure(instance: Instance) -> Tuple[Fraction, Fraction]:
        online = evaluate(simulate(instance, config), MetricKind.MAX_RESPONSE)
        optimum = optimal_schedule(instance, MetricKind.MAX_RESPONSE).objective
        return online, optimum

    return _sweep("verify fifo", Fraction(2), spec, measure, workers)


def ssfw_parameters(epsilon: Fraction, varying_sizes: bool) -> Tuple[Fraction, Fraction, Mode]:
    """(c, speed, mode): c = 1 + 3/eps at speed 1 + eps for unit pages; c = 1 + 5/eps at 2 + eps otherwise"""
    if epsilon <= 0:
        raise ConfigurationError(f"epsilon must be > 0, got {format_rat(epsilon)}", "BAD_PARAMETER")
    if varying_sizes:
        return 1 + 5 / epsilon, 2 + epsilon, Mode.PREEMPTIVE
    return 1 + 3 / epsilon, 1 + epsilon, Mode.NONPREEMPTIVE


def verify_ssfw(epsilon: Fraction, spec: FamilySpec, workers: Optional[int] = None) -> RatioReport:
    """SSF-W max delay factor with speed augmentation against the speed-1 optimum; bound c^2"""
    c, speed, mode = ssfw_parameters(epsilon, spec.varying_sizes)
    spec = spec.model_copy(update={"deadlines": True})
    config = SimConfig(speed=speed, mode=mode, policy=PolicyConfig(kind=PolicyKind.SSFW, c=c))

    def measure(instance: Instance) -> Tuple[Fraction, Fraction]:
        online = evaluate(simulate(instance, config), MetricKind.MAX_DELAY_FACTOR)
        optimum = optimal_schedule(instance, MetricKind.MAX_DELAY_FACTOR).objective
        return online, optimum

    title = f"verify ssfw (eps={format_rat(epsilon)}, c={format_rat(c)}, speed={format_rat(speed)})"
    return _sweep(title, c * c, spec, measure, workers)


# ============= LF LOWER BOUND =============


class Check(BaseModel):
    name: str
    expected: str
    got: str
    ok: bool


class LowerBoundReport(BaseModel):
    s: int
    c: int
    k: int
    jobs: int
    lf_value: Rat
    opt_value: Rat
    ratio: Rat
    checks: List[Check] = Field(default_factory=list)

    @property
    def failures(self) -> List[Check]:
        return [check for check in self.checks if not check.ok]

    def raise_for_failures(self) -> None:
        failures = self.failures
        if failures:
            lines = "; ".join(f"{f.name}: expected {f.expected}, got {f.got}" for f in failures)
            raise VerificationError(
                f"LF lower bound (s={self.s}, c={self.c}): {len(failures)} checks failed: {lines}",
                details={"failed": [f.name for f in failures]},
            )


def _equal(name: str, expected, got) -> Check:
    return Check(name=name, expected=_show(expected), got=_show(got), ok=expected == got)


def _at_most(name: str, value: Fraction, bound: Fraction) -> Check:
    return Check(name=name, expected=f"<= {format_rat(bound)}", got=format_rat(value), ok=value <= bound)


def _show(value) -> str:
    if isinstance(value, Fraction):
        return format_rat(value)
    if isinstance(value, (list, tuple)):
        return "(" + ", ".join(_show(v) for v in value) + ")"
    return str(value)


def verify_lf_lowerbound(
    s: int, c: int, k_override: Optional[int] = None, compressed: bool = False
) -> LowerBoundReport:
    """
    Build the adversary, run LF at speed s and check the construction exactly:
    LF value c, reference optimum 1, group intervals, per-group ratios,
    boundary equalities and the side conditions of the reference schedule

    Raises:
        AdversaryError: invalid (s, c, k)
        ConfigurationError: per-job run requested for a plan too large to expand
    """
    plan, instance = build_lf_adversary(s, c, k_override)
    if not compressed and instance.total_jobs > PER_JOB_LIMIT:
        raise ConfigurationError(
            f"plan has {instance.total_jobs} jobs; use --compressed above {PER_JOB_LIMIT}", "MODE_NOT_SUPPORTED"
        )
    config = SimConfig(speed=Fraction(s), policy=PolicyConfig(kind=PolicyKind.LF))
    if compressed:
        transcript, _ = simulate_grouped_unicast(instance, config)
    else:
        transcript = simulate(instance, config)

    shift = plan.shift
    checks: List[Check] = []
    problems = validate_transcript(instance, transcript)
    checks.append(Check(
        name="lf transcript valid", expected="no violations",
        got="; ".join(problems[:3]) or "no violations", ok=not problems,
    ))

    for i in range(plan.k + 1):
        page = plan.page_id(i)
        attempts = [a for a in transcript.attempts if a.page == page]
        start = min(a.start for a in attempts)
        end = max(a.end for a in attempts)
        expected_start = (plan.A[0] if i == 0 else plan.F[i - 1]) + shift
        checks.append(_equal(f"group {i} interval", (expected_start, plan.F[i] + shift), (start, end)))

    ratios = group_wait_ratios(transcript)
    for i in range(plan.k + 1):
        checks.append(_equal(f"group {i} wait ratio", plan.R[i], ratios[plan.page_id(i)]))

    for i in range(plan.k):
        here = (plan.F[i] - plan.A[i]) / plan.S[i]
        nxt = (plan.F[i] - plan.A[i + 1]) / plan.S[i + 1]
        checks.append(_equal(f"boundary {i}/{i + 1} ratio", here, nxt))

    lf_value = evaluate(transcript, MetricKind.MAX_DELAY_FACTOR)
    checks.append(_equal("lf max delay factor", Fraction(c), lf_value))

    reference = reference_opt_schedule(plan)
    problems = validate_transcript(instance, reference)
    checks.append(Check(
        name="reference schedule valid", expected="no violations",
        got="; ".join(problems[:3]) or "no violations", ok=not problems,
    ))
    opt_value = evaluate(reference, MetricKind.MAX_DELAY_FACTOR)
    checks.append(_equal("reference max delay factor", Fraction(1), opt_value))

    checks.append(_at_most("R_0", plan.R[0], Fraction(1, 3 * s)))
    checks.append(_at_most("|F_k - A_0|", abs(plan.F[plan.k] - plan.A[0]), 2 * abs(plan.F[0] - plan.A[0])))
    group0_ratio = (reference.finish[(plan.page_id(0), 0)] - (plan.A[0] + shift)) / plan.S[0]
    checks.append(_at_most("reference group 0 wait ratio", group0_ratio, Fraction(2 + s, 3 * s)))

    report = LowerBoundReport(
        s=s, c=c, k=plan.k, jobs=instance.total_jobs,
        lf_value=lf_value, opt_value=opt_value, ratio=lf_value / opt_value, checks=checks,
    )
    if report.failures:
        logger.error(f"❌ LF lower bound (s={s}, c={c}): {len(report.failures)} checks failed")
    else:
        logger.info(f"✅ LF lower bound (s={s}, c={c}): k={plan.k}, LF={format_rat(lf_value)}, OPT={format_rat(opt_value)}")
    return report


__all__ = [
    "FamilySpec",
    "family_instances",
    "RatioRow",
    "RatioReport",
    "verify_fifo",
    "verify_ssfw",
    "ssfw_parameters",
    "LowerBoundReport",
    "verify_lf_lowerbound",
    "RATIO_HEADER",
]
