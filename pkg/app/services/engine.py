"""
Simulation Engine
Deterministic single-server discrete-event simulator. Runs a selection rule
over an instance at speed s, non-preemptively or (SSF-W only) preemptively
with resume and restart, and produces a Transcript.
"""

import heapq
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, TextIO, Tuple

from pydantic import ValidationError

from app.core.exceptions import ConfigurationError
from app.models.schemas import (
    AttemptStatus,
    FinishRecord,
    Instance,
    Mode,
    PolicyConfig,
    PolicyKind,
    Request,
    RequestKey,
    RequestRef,
    RunStats,
    Segment,
    Setting,
    SimConfig,
    TimeModel,
    TransmissionAttempt,
    Transcript,
)
from app.services.policies import QueueView, Selector, check_policy_fits, make_selector, waiting_queue
from app.utils.helpers import format_rat

logger = logging.getLogger(__name__)


# ============= EVENT LOG =============


class EventLog:
    """Text event stream: one line per event, `t=<rat> <event-kind> <key=value ...>`"""

    KINDS = ("arrive", "start", "resume", "restart", "preempt", "complete", "abandon", "cross", "idle")

    def __init__(self, sink: TextIO):
        self.sink = sink
        self.lines = 0

    def emit(self, t: Fraction, kind: str, **details) -> None:
        parts = [f"t={format_rat(t)}", kind]
        for name, value in details.items():
            if isinstance(value, Fraction):
                value = format_rat(value)
            parts.append(f"{name}={value}")
        self.sink.write(" ".join(parts) + "\n")
        self.lines += 1


# ============= SERVER STATE =============


@dataclass
class OpenAttempt:
    """An attempt in progress or suspended; progress is measured in page-length units"""
    page: str
    forcing: Request
    start: Fraction
    length: Fraction
    segments: List[Tuple[Fraction, Fraction]] = field(default_factory=list)
    progress: Fraction = Fraction(0)
    segment_start: Optional[Fraction] = None
    status: Optional[AttemptStatus] = None
    end: Optional[Fraction] = None

    def completion_time(self, speed: Fraction) -> Fraction:
        return self.segment_start + (self.length - self.progress) / speed

    def close_segment(self, now: Fraction, speed: Fraction) -> None:
        if now > self.segment_start:
            self.segments.append((self.segment_start, now))
            self.progress += (now - self.segment_start) * speed
        self.segment_start = None

    def to_model(self) -> TransmissionAttempt:
        return TransmissionAttempt(
            page=self.page,
            start=self.start,
            segments=[Segment(start=a, end=b) for a, b in self.segments],
            end=self.end,
            status=self.status,
            forcing_request=RequestRef(page=self.forcing.page, index=self.forcing.index),
        )


@dataclass
class ServerState:
    now: Fraction = Fraction(0)
    released: Dict[RequestKey, Request] = field(default_factory=dict)
    remaining: Dict[RequestKey, int] = field(default_factory=dict)
    current: Optional[OpenAttempt] = None
    suspended: Dict[RequestKey, OpenAttempt] = field(default_factory=dict)
    pending: List[Tuple[Fraction, str, int, Request]] = field(default_factory=list)

    def next_arrival(self) -> Optional[Fraction]:
        return self.pending[0][0] if self.pending else None


# ============= Q(t) ENTRY CROSSINGS =============


def _entry_time(request: Request, others: Iterable[Request], c: Fraction, now: Fraction) -> Optional[Fraction]:
    """Earliest t > now with c(t-a_r)/S_r >= (t-a_j)/S_j for every j, or None"""
    lo = now
    hi = None
    slack_r = request.slack
    for other in others:
        coef = c / slack_r - 1 / other.slack
        rhs = c * request.arrival / slack_r - other.arrival / other.slack
        if coef > 0:
            lo = max(lo, rhs / coef)
        elif coef < 0:
            bound = rhs / coef
            hi = bound if hi is None else min(hi, bound)
        elif rhs > 0:
            return None
    if hi is not None and lo > hi:
        return None
    if lo <= now:
        return None
    return lo


def next_q_entry_crossing(
    state: ServerState,
    c: Fraction,
    horizon: Optional[Fraction] = None,
    candidates: Optional[Callable[[Request], bool]] = None,
) -> Optional[Tuple[Fraction, Request]]:
    """
    First moment after state.now at which a request outside Q(t) enters it

    The released set is fixed until the next arrival/completion, so every
    ratio is linear in t and each pairwise condition is a half-line.

    Args:
        state: server state (released unsatisfied requests, now)
        c: waiting parameter
        horizon: next arrival/completion; crossings at or after it are not reported
        candidates: optional filter on which excluded requests to consider

    Returns:
        (time, request) of the earliest crossing, ties by (arrival, page, index); or None
    """
    released = list(state.released.values())
    if len(released) < 2:
        return None
    now = state.now
    view = QueueView.build(now, released)
    alpha = max(entry.ratio for entry in view.entries)
    best = None
    for entry in view.entries:
        if c * entry.ratio >= alpha:
            continue
        request = entry.request
        if candidates is not None and not candidates(request):
            continue
        t = _entry_time(request, released, c, now)
        if t is None or (horizon is not None and t >= horizon):
            continue
        key = (t, request.arrival, request.page, request.index)
        if best is None or key < best[0]:
            best = (key, request)
    if best is None:
        return None
    return best[0][0], best[1]


# ============= SIMULATOR =============


def make_sim_config(speed: Fraction, mode: str, policy: PolicyConfig) -> SimConfig:
    """
    Raises:
        ConfigurationError: speed below 1 or unknown mode
    """
    try:
        return SimConfig(speed=speed, mode=Mode(mode), policy=policy)
    except ValueError as e:
        message = e.errors()[0].get("msg", str(e)) if isinstance(e, ValidationError) else str(e)
        raise ConfigurationError(message.removeprefix("Value error, "), "BAD_PARAMETER")


def validate_sim_config(instance: Instance, config: SimConfig) -> None:
    """
    Raises:
        ConfigurationError: preemptive mode without SSF-W, or a slotted instance run preemptively
    """
    if config.mode == Mode.PREEMPTIVE:
        if instance.time_model == TimeModel.SLOTTED:
            raise ConfigurationError("slotted requires nonpreemptive", "MODE_NOT_SUPPORTED")
        if config.policy.kind != PolicyKind.SSFW:
            raise ConfigurationError(
                f"preemptive mode requires ssfw (policy {config.policy.kind.value} has no preemption rule)",
                "MODE_NOT_SUPPORTED",
            )


class Simulator:
    """One simulation run; all state is confined to the instance of this class"""

    def __init__(
        self,
        instance: Instance,
        config: SimConfig,
        selector: Optional[Selector] = None,
        event_log: Optional[EventLog] = None,
    ):
        validate_sim_config(instance, config)
        check_policy_fits(instance, config.policy)
        self.instance = instance
        self.config = config
        self.speed = config.speed
        self.preemptive = config.mode == Mode.PREEMPTIVE
        self.unicast = instance.setting == Setting.UNICAST
        self.selector = selector or make_selector(config.policy)
        self.log = event_log
        self.lengths = {page.id: page.length for page in instance.pages}
        self.state = ServerState()
        for request in instance.requests:
            heapq.heappush(self.state.pending, (request.arrival, request.page, request.index, request))
        self.attempts: List[OpenAttempt] = []
        self.finish: Dict[RequestKey, Fraction] = {}
        self.stats = RunStats()
        self._idle = Fraction(0)
        self._events = 0

    # ---- bookkeeping ----

    def _emit(self, kind: str, t: Optional[Fraction] = None, **details) -> None:
        self._events += 1
        if self.log is not None:
            self.log.emit(self.state.now if t is None else t, kind, **details)

    def _release_until(self, t: Fraction) -> bool:
        """Release every pending arrival at or before t"""
        state = self.state
        released = False
        while state.pending and state.pending[0][0] <= t:
            arrival, _, _, request = heapq.heappop(state.pending)
            state.released[request.key] = request
            state.remaining[request.key] = request.multiplicity
            self._emit("arrive", t=arrival, request=request.label, page=request.page)
            released = True
        return released

    def _view(self) -> QueueView:
        return QueueView.build(self.state.now, list(self.state.released.values()))

    # ---- attempts ----

    def _start(self, selected: Request) -> None:
        state = self.state
        saved = state.suspended.pop(selected.key, None)
        if saved is not None:
            saved.segment_start = state.now
            state.current = saved
            self.stats.resumes += 1
            self._emit("resume", page=saved.page, forcing=selected.label, progress=saved.progress)
            return
        for key, stale in list(state.suspended.items()):
            if stale.page == selected.page:
                self._abandon(stale)
                del state.suspended[key]
                self.stats.restarts += 1
                self._emit("restart", page=selected.page, forcing=selected.label)
        attempt = OpenAttempt(
            page=selected.page,
            forcing=selected,
            start=state.now,
            length=self.lengths[selected.page],
            segment_start=state.now,
        )
        self.attempts.append(attempt)
        state.current = attempt
        self._emit("start", page=selected.page, forcing=selected.label)

    def _abandon(self, attempt: OpenAttempt) -> None:
        attempt.status = AttemptStatus.ABANDONED
        self.stats.abandoned_volume += attempt.progress
        self._emit("abandon", page=attempt.page, forcing=attempt.forcing.label, wasted=attempt.progress)

    def _complete(self, t: Fraction) -> None:
        state = self.state
        attempt = state.current
        attempt.close_segment(t, self.speed)
        attempt.status = AttemptStatus.COMPLETED
        attempt.end = t
        state.current = None
        state.now = t
        if self.unicast:
            key = attempt.forcing.key
            state.remaining[key] -= 1
            served = [key] if state.remaining[key] == 0 else []
        else:
            served = [
                key for key, request in state.released.items()
                if request.page == attempt.page and request.arrival <= attempt.start
            ]
        for key in served:
            self.finish[key] = t
            del state.released[key]
            del state.remaining[key]
        self._emit("complete", page=attempt.page, forcing=attempt.forcing.label, satisfied=len(served))

    def _dispatch(self) -> None:
        self._start(self.selector(self._view()))

    # ---- main loop ----

    def run(self) -> Transcript:
        state = self.state
        self._release_until(state.now)
        while True:
            if state.current is None:
                if state.released:
                    self._dispatch()
                    continue
                nxt = state.next_arrival()
                if nxt is None:
                    break
                self._emit("idle", until=nxt)
                self._idle += nxt - state.now
                state.now = nxt
                self._release_until(nxt)
                continue
            if self.preemptive:
                self._advance_preemptive()
            else:
                completion = state.current.completion_time(self.speed)
                self._release_until(completion)
                self._complete(completion)
                self._release_until(completion)
        return self._transcript()

    def _advance_preemptive(self) -> None:
        state = self.state
        current = state.current
        completion = current.completion_time(self.speed)
        arrival = state.next_arrival()
        horizon = completion if arrival is None else min(completion, arrival)
        forcing_slack = current.forcing.slack
        crossing = next_q_entry_crossing(
            state, self.config.policy.c, horizon=horizon, candidates=lambda r: r.slack < forcing_slack
        )
        if crossing is None and (arrival is None or completion <= arrival):
            self._complete(completion)
            self._release_until(completion)
            return
        if crossing is not None:
            state.now = crossing[0]
            self._emit("cross", request=crossing[1].label)
        else:
            state.now = arrival
            self._release_until(arrival)
        self._maybe_preempt()

    def _maybe_preempt(self) -> None:
        state = self.state
        current = state.current
        view = self._view()
        queue = waiting_queue(view, self.config.policy.c, lambda e: e.ratio)
        if not any(entry.slack < current.forcing.slack for entry in queue):
            return
        current.close_segment(state.now, self.speed)
        state.current = None
        self.stats.preemptions += 1
        self._emit("preempt", page=current.page, forcing=current.forcing.label, progress=current.progress)
        selected = self.selector(view)
        if selected.page == current.page:
            self._abandon(current)
            self.stats.restarts += 1
            self._emit("restart", page=selected.page, forcing=selected.label)
        else:
            state.suspended[current.forcing.key] = current
        self._start(selected)

    def _transcript(self) -> Transcript:
        attempts = [attempt.to_model() for attempt in self.attempts]
        volume = sum((attempt.busy_time for attempt in attempts), Fraction(0)) * self.speed
        self.stats.transmitted_volume = volume
        self.stats.idle_time = self._idle
        self.stats.events = self._events
        finishes = [
            FinishRecord(page=request.page, index=request.index, finish=self.finish[request.key])
            for request in self.instance.requests
        ]
        return Transcript(instance=self.instance, speed=self.speed, attempts=attempts, finishes=finishes)


def simulate(instance: Instance, config: SimConfig, event_log: Optional[EventLog] = None) -> Transcript:
    """
    Run the configured policy over the instance

    Raises:
        ConfigurationError: invalid mode for the policy or instance
        PolicyMismatchError: policy needs deadlines the instance lacks
    """
    transcript, _ = simulate_with_stats(instance, config, event_log)
    return transcript


def simulate_with_stats(
    instance: Instance, config: SimConfig, event_log: Optional[EventLog] = None
) -> Tuple[Transcript, RunStats]:
    simulator = Simulator(instance, config, event_log=event_log)
    transcript = simulator.run()
    logger.debug(
        f"Simulated {config.policy.label} at speed {format_rat(config.speed)}: "
        f"{len(transcript.attempts)} attempts, {simulator.stats.preemptions} preemptions"
    )
    return transcript, simulator.stats


__all__ = [
    "EventLog",
    "ServerState",
    "Simulator",
    "next_q_entry_crossing",
    "simulate",
    "simulate_with_stats",
    "validate_sim_config",
    "make_sim_config",
]
