"""
Generators Service
Adversarial group family against LF with its reference offline schedule,
and seeded random instances for fuzzing
"""

import logging
import random
from fractions import Fraction
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator

from app.core.exceptions import AdversaryError, ConfigurationError
from app.models.schemas import (
    AdversaryPlan,
    AttemptStatus,
    FinishRecord,
    Instance,
    Page,
    Request,
    RequestRef,
    Segment,
    Setting,
    TimeModel,
    TransmissionAttempt,
    Transcript,
)
from app.services.instances import build_instance, expand_multiplicities
from app.utils.helpers import format_rat

logger = logging.getLogger(__name__)


# ============= LF ADVERSARY =============


def _k_condition(s: int, c: int, k: int) -> bool:
    decay = 1 - Fraction(1, s * c)
    return decay ** k * c <= Fraction(1, 3 * s)


def minimal_k(s: int, c: int) -> int:
    """Smallest k with (1 - 1/sc)^k * c <= 1/(3s)"""
    k = 0
    while not _k_condition(s, c, k):
        k += 1
    return k


def build_lf_adversary(s: int, c: int, k_override: Optional[int] = None) -> Tuple[AdversaryPlan, Instance]:
    """
    Groups J_0..J_k of unit unicast jobs; group i arrives at A_i with slack S_i
    and m_i jobs. LF at speed s works on group 0 during [A_0, F_0] and on
    group i during [F_(i-1), F_i], ending with wait ratio c on group k.

    Raises:
        AdversaryError: s < 1, c < 2, or a k override below the minimal k
    """
    if not isinstance(s, int) or isinstance(s, bool) or s < 1:
        raise AdversaryError(f"s must be an integer >= 1, got {s!r}", "BAD_PARAMETER")
    if not isinstance(c, int) or isinstance(c, bool) or c < 2:
        raise AdversaryError(f"c must be an integer >= 2, got {c!r}", "BAD_PARAMETER")
    k_min = minimal_k(s, c)
    if k_override is None:
        k = k_min
    elif k_override < k_min:
        r0 = c * (1 - Fraction(1, s * c)) ** k_override
        raise AdversaryError(
            f"k={k_override} is below the minimal k={k_min}: R_0 = {format_rat(r0)} > {format_rat(Fraction(1, 3 * s))}",
            "K_TOO_SMALL",
        )
    else:
        k = k_override

    q = s * c
    decay = 1 - Fraction(1, q)
    A: List[Fraction] = []
    F: List[Fraction] = []
    S: List[Fraction] = []
    R: List[Fraction] = []
    m: List[int] = []
    for i in range(k + 1):
        arrival = Fraction(-(q ** (k - i + 1)) - sum(q ** j for j in range(k - i)))
        A.append(arrival)
        F.append(arrival + q ** (k - i + 1))
        S.append(Fraction(s * q ** (k - i)) / decay ** (k - i))
        R.append(c * decay ** (k - i))
        m.append(s * q ** (k + 1) if i == 0 else s * q ** (k - i))
    shift = -A[0]
    plan = AdversaryPlan(s=s, c=c, k=k, A=A, S=S, m=m, F=F, R=R, shift=shift)

    pages = [Page(id=plan.page_id(i), length=Fraction(1)) for i in range(k + 1)]
    requests = [
        Request(
            page=plan.page_id(i),
            arrival=A[i] + shift,
            deadline=A[i] + shift + S[i],
            multiplicity=m[i],
        )
        for i in range(k + 1)
    ]
    instance = build_instance(pages, requests, TimeModel.CONTINUOUS, Setting.UNICAST)
    logger.info(f"✅ LF adversary (s={s}, c={c}): k={k}, {instance.total_jobs} jobs, shift {format_rat(shift)}")
    return plan, instance


def reference_opt_schedule(plan: AdversaryPlan) -> Transcript:
    """
    Speed-1 schedule running J_0 during [F_k, F_k + m_0] and J_i during
    [A_i, A_i + m_i] for i >= 1 (shifted), one batched attempt per group

    Raises:
        AdversaryError: the group intervals overlap (never for a valid plan)
    """
    shift = plan.shift
    blocks = [(plan.F[plan.k] + shift, 0)]
    blocks += [(plan.A[i] + shift, i) for i in range(1, plan.k + 1)]
    blocks.sort()

    attempts = []
    finish = {}
    previous_end = None
    for start, i in blocks:
        end = start + plan.m[i]
        if previous_end is not None and start < previous_end:
            raise AdversaryError(f"reference blocks overlap at {format_rat(start)}")
        previous_end = end
        page = plan.page_id(i)
        attempts.append(TransmissionAttempt(
            page=page,
            start=start,
            segments=[Segment(start=start, end=end)],
            end=end,
            status=AttemptStatus.COMPLETED,
            forcing_request=RequestRef(page=page, index=0),
            count=plan.m[i],
        ))
        finish[i] = end

    _, instance = build_lf_adversary(plan.s, plan.c, plan.k)
    finishes = [FinishRecord(page=plan.page_id(i), index=0, finish=finish[i]) for i in range(plan.k + 1)]
    return Transcript(instance=instance, speed=Fraction(1), attempts=attempts, finishes=finishes)


def plan_sidecar(plan: AdversaryPlan) -> str:
    """Plan JSON {s, c, k, A, S, m, F, R, shift}, rationals as "p/q" strings"""
    return plan.model_dump_json(indent=2)


def expanded_adversary(s: int, c: int, k_override: Optional[int] = None) -> Tuple[AdversaryPlan, Instance]:
    """Adversary with one request (and page) per job"""
    plan, instance = build_lf_adversary(s, c, k_override)
    return plan, expand_multiplicities(instance)


# ============= RANDOM INSTANCES =============


class RandomParams(BaseModel):
    """Shape of a random instance"""
    pages: int = Field(3, ge=1, description="Number of pages (broadcast)")
    requests: int = Field(5, ge=0, description="Number of requests")
    horizon: int = Field(5, ge=0, description="Arrivals drawn from [0, horizon]")
    max_length: int = Field(1, ge=1, description="Page lengths drawn from {1..max_length}")
    granularity: int = Field(1, ge=1, description="Continuous arrivals are multiples of 1/granularity")
    deadline_style: Literal["none", "tight", "random"] = "none"
    weight_style: Literal["unit", "random", "inverse_slack"] = "unit"
    slotted: bool = False
    setting: Setting = Setting.BROADCAST

    @model_validator(mode="after")
    def check_consistency(self) -> "RandomParams":
        if self.slotted and self.max_length != 1:
            raise ValueError("slotted instances need max_length 1")
        if self.slotted and self.granularity != 1:
            raise ValueError("slotted instances need granularity 1")
        if self.weight_style == "inverse_slack" and self.deadline_style == "none":
            raise ValueError("inverse_slack weights need deadlines")
        return self


def make_random_params(**values) -> RandomParams:
    """
    Raises:
        ConfigurationError: inconsistent or out-of-range parameters
    """
    try:
        return RandomParams(**values)
    except ValidationError as e:
        message = e.errors()[0].get("msg", str(e)).removeprefix("Value error, ")
        raise ConfigurationError(message, "BAD_PARAMETER")


def random_instance(seed: int, params: RandomParams) -> Instance:
    """Deterministic in (seed, params); slack always at least the page length"""
    rng = random.Random(seed)
    unicast = params.setting == Setting.UNICAST
    page_count = params.requests if unicast else params.pages
    pages = [
        Page(id=f"p{i}", length=Fraction(1 if params.slotted else rng.randint(1, params.max_length)))
        for i in range(page_count)
    ]
    requests = []
    for n in range(params.requests):
        page = pages[n] if unicast else pages[rng.randrange(page_count)]
        if params.slotted:
            arrival = Fraction(rng.randint(0, params.horizon))
        else:
            arrival = Fraction(rng.randint(0, params.horizon * params.granularity), params.granularity)
        deadline = None
        if params.deadline_style == "tight":
            deadline = arrival + page.length
        elif params.deadline_style == "random":
            deadline = arrival + page.length + rng.randint(0, params.horizon)
        weight = Fraction(1)
        if params.weight_style == "random":
            weight = Fraction(rng.randint(1, 4))
        elif params.weight_style == "inverse_slack":
            weight = 1 / (deadline - arrival)
        requests.append(Request(page=page.id, arrival=arrival, deadline=deadline, weight=weight))
    time_model = TimeModel.SLOTTED if params.slotted else TimeModel.CONTINUOUS
    return build_instance(pages, requests, time_model, params.setting)


__all__ = [
    "minimal_k",
    "build_lf_adversary",
    "reference_opt_schedule",
    "plan_sidecar",
    "expanded_adversary",
    "RandomParams",
    "make_random_params",
    "random_instance",
]
