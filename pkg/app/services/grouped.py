"""
Grouped Unicast Engine
Fast-forward execution of LF / FIFO over unicast instances whose requests
carry multiplicities. Makes exactly the decisions the per-job engine makes,
but emits each maximal run of jobs from one group as a single batched attempt.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from app.core.exceptions import ConfigurationError
from app.models.schemas import (
    AttemptStatus,
    FinishRecord,
    Instance,
    Mode,
    PolicyKind,
    Request,
    RequestKey,
    RequestRef,
    Segment,
    Setting,
    SimConfig,
    TransmissionAttempt,
    Transcript,
)
from app.services.engine import EventLog
from app.services.policies import QueueView, check_policy_fits, make_selector
from app.utils.helpers import ceil_fraction, format_rat

logger = logging.getLogger(__name__)

_NEVER = None


def _floor(value: Fraction) -> int:
    return value.numerator // value.denominator


def _first_overtake(
    selected: Request,
    rival: Request,
    now: Fraction,
    step: Fraction,
) -> Optional[int]:
    """
    Index j >= 1 of the first decision instant now + j*step at which LF would
    prefer `rival` over `selected`, or None if that never happens.
    """
    j_min = 1
    if rival.arrival > now:
        j_min = max(1, ceil_fraction((rival.arrival - now) / step))
    d0 = (now - rival.arrival) / rival.slack - (now - selected.arrival) / selected.slack
    inc = (1 / rival.slack - 1 / selected.slack) * step
    favours_rival = (rival.slack, rival.arrival, rival.page, rival.index) < (
        selected.slack, selected.arrival, selected.page, selected.index
    )

    def wins(j: int) -> bool:
        d = d0 + inc * j
        return d > 0 or (d == 0 and favours_rival)

    if inc > 0:
        bound = -d0 / inc
        threshold = ceil_fraction(bound) if favours_rival else _floor(bound) + 1
        return max(j_min, threshold)
    return j_min if wins(j_min) else _NEVER


def simulate_grouped_unicast(
    instance: Instance,
    config: SimConfig,
    event_log: Optional[EventLog] = None,
) -> Tuple[Transcript, Dict[str, Fraction]]:
    """
    Compressed unicast simulation

    Returns:
        (transcript with batched attempts, per-group wait ratio (f - a)/S at the
        group's last job completion; empty for FIFO runs without deadlines)

    Raises:
        ConfigurationError: unsupported policy, mode or setting
        PolicyMismatchError: LF without deadlines
    """
    if instance.setting != Setting.UNICAST:
        raise ConfigurationError("grouped simulation requires the unicast setting", "MODE_NOT_SUPPORTED")
    if config.mode != Mode.NONPREEMPTIVE:
        raise ConfigurationError("grouped simulation is nonpreemptive only", "MODE_NOT_SUPPORTED")
    if config.policy.kind not in (PolicyKind.LF, PolicyKind.FIFO):
        raise ConfigurationError(
            f"grouped simulation supports lf and fifo, not {config.policy.kind.value}", "MODE_NOT_SUPPORTED"
        )
    check_policy_fits(instance, config.policy)

    speed = config.speed
    selector = make_selector(config.policy)
    lengths = {page.id: page.length for page in instance.pages}
    pending = sorted(instance.requests, key=lambda r: (r.arrival, r.page, r.index))
    cursor = 0
    released: Dict[RequestKey, Request] = {}
    remaining: Dict[RequestKey, int] = {}
    finish: Dict[RequestKey, Fraction] = {}
    attempts: List[TransmissionAttempt] = []
    now = Fraction(0)

    def emit(t: Fraction, kind: str, **details) -> None:
        if event_log is not None:
            event_log.emit(t, kind, **details)

    def release_until(t: Fraction) -> None:
        nonlocal cursor
        while cursor < len(pending) and pending[cursor].arrival <= t:
            request = pending[cursor]
            released[request.key] = request
            remaining[request.key] = request.multiplicity
            emit(request.arrival, "arrive", request=request.label, page=request.page, jobs=request.multiplicity)
            cursor += 1

    release_until(now)
    while released or cursor < len(pending):
        if not released:
            nxt = pending[cursor].arrival
            emit(now, "idle", until=nxt)
            now = nxt
            release_until(now)
            continue
        selected = selector(QueueView.build(now, list(released.values())))
        step = lengths[selected.page] / speed
        jobs = remaining[selected.key]
        if config.policy.kind == PolicyKind.LF:
            rivals = [r for key, r in released.items() if key != selected.key] + pending[cursor:]
            for rival in rivals:
                j = _first_overtake(selected, rival, now, step)
                if j is not None and j < jobs:
                    jobs = j
        end = now + jobs * step
        attempts.append(TransmissionAttempt(
            page=selected.page,
            start=now,
            segments=[Segment(start=now, end=end)],
            end=end,
            status=AttemptStatus.COMPLETED,
            forcing_request=RequestRef(page=selected.page, index=selected.index),
            count=jobs,
        ))
        emit(now, "start", page=selected.page, forcing=selected.label, jobs=jobs)
        release_until(end)
        now = end
        remaining[selected.key] -= jobs
        satisfied = 0
        if remaining[selected.key] == 0:
            finish[selected.key] = end
            del released[selected.key]
            del remaining[selected.key]
            satisfied = 1
        emit(end, "complete", page=selected.page, forcing=selected.label, satisfied=satisfied)

    finishes = [
        FinishRecord(page=request.page, index=request.index, finish=finish[request.key])
        for request in instance.requests
    ]
    transcript = Transcript(instance=instance, speed=speed, attempts=attempts, finishes=finishes)
    ratios = {
        request.page: (finish[request.key] - request.arrival) / request.slack
        for request in instance.requests
        if request.slack is not None
    }
    logger.debug(
        f"Grouped simulation: {instance.total_jobs} jobs in {len(attempts)} batched attempts "
        f"(speed {format_rat(speed)})"
    )
    return transcript, ratios


def unroll_batches(transcript: Transcript) -> Transcript:
    """Split every batched attempt into `count` consecutive single-job attempts"""
    lengths = {page.id: page.length for page in transcript.instance.pages}
    attempts = []
    for attempt in transcript.attempts:
        if attempt.count == 1:
            attempts.append(attempt)
            continue
        step = lengths[attempt.page] / transcript.speed
        for j in range(attempt.count):
            start = attempt.start + j * step
            attempts.append(attempt.model_copy(update={
                "start": start,
                "segments": [Segment(start=start, end=start + step)],
                "end": start + step,
                "count": 1,
            }))
    return transcript.model_copy(update={"attempts": attempts})


__all__ = ["simulate_grouped_unicast", "unroll_batches"]
