"""
Oracle Service
Exact offline optimum on small instances by memoized exhaustive search

Two independent searches:

- `optimal_schedule`: the canonical class. Every schedule is a sequence of
  whole transmissions; each transmission of page p starts at
  max(previous end, arrival of the request it targets) and lasts l_p / speed.
  Any sequential-model schedule can be left-shifted into this form without
  delaying a finish time, and all objectives are max-type and monotone in the
  finish times, so the class contains an optimum.
- `optimal_slot_schedule`: slotted instances only, speed 1; decides slot by
  slot which page to broadcast (or to idle). Used to cross-check the first.
"""

import itertools
import logging
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from app.core.config import settings
from app.core.exceptions import OracleLimitError, PolicyMismatchError
from app.models.schemas import (
    AttemptStatus,
    FinishRecord,
    Instance,
    MetricKind,
    OracleResult,
    Page,
    Request,
    RequestKey,
    RequestRef,
    Segment,
    Setting,
    TimeModel,
    TransmissionAttempt,
    Transcript,
)
from app.services.instances import build_instance
from app.services.metrics import empty_value, request_value
from app.utils.helpers import format_rat

logger = logging.getLogger(__name__)

# (page, forcing request, start)
Broadcast = Tuple[str, Request, Fraction]


def _guard(instance: Instance, kind: MetricKind, cap: Optional[int]) -> None:
    limit = settings.ORACLE_CAP if cap is None else cap
    if instance.total_jobs > limit:
        raise OracleLimitError(
            f"instance has {instance.total_jobs} jobs, oracle cap is {limit} (raise with --cap or BSIM_ORACLE_CAP)"
        )
    if kind.needs_deadlines:
        for request in instance.requests:
            if request.deadline is None:
                raise PolicyMismatchError(f"metric {kind.value} needs deadlines; request {request.label} has none")


def _witness(instance: Instance, speed: Fraction, plan: Sequence[Broadcast]) -> Transcript:
    """Replay a broadcast sequence under the model's satisfaction rule"""
    lengths = {page.id: page.length for page in instance.pages}
    unicast = instance.setting == Setting.UNICAST
    remaining = {request.key: request.multiplicity for request in instance.requests}
    finish: Dict[RequestKey, Fraction] = {}
    attempts = []
    for page, forcing, start in plan:
        end = start + lengths[page] / speed
        attempts.append(TransmissionAttempt(
            page=page,
            start=start,
            segments=[Segment(start=start, end=end)],
            end=end,
            status=AttemptStatus.COMPLETED,
            forcing_request=RequestRef(page=forcing.page, index=forcing.index),
        ))
        if unicast:
            remaining[forcing.key] -= 1
            if remaining[forcing.key] == 0:
                finish[forcing.key] = end
            continue
        for request in instance.requests:
            if request.page == page and request.key not in finish and request.arrival <= start:
                finish[request.key] = end
    finishes = [
        FinishRecord(page=r.page, index=r.index, finish=finish[r.key]) for r in instance.requests
    ]
    return Transcript(instance=instance, speed=speed, attempts=attempts, finishes=finishes)


# (now, remaining copies per request in instance order)
State = Tuple[Fraction, Tuple[int, ...]]
# (broadcast or None for an idle slot, value of the requests it satisfies, next state)
Move = Tuple[Optional[Broadcast], Fraction, State]


class _Search:
    """
    Exact recursion over states. The optimum from a state does not depend on
    how it was reached, so results are memoized; within a state, moves whose
    own satisfied value already reaches the best found are cut, and the scan
    stops once the best meets the state's lower bound.
    """

    def __init__(self, instance: Instance, kind: MetricKind, speed: Fraction):
        self.instance = instance
        self.kind = kind
        self.speed = speed
        self.unicast = instance.setting == Setting.UNICAST
        self.lengths = {page.id: page.length for page in instance.pages}
        self.position = {request.key: i for i, request in enumerate(instance.requests)}
        self.empty = empty_value(kind)
        self.memo: Dict[State, Tuple[Fraction, Optional[Move]]] = {}
        self.nodes = 0

    def initial(self) -> State:
        return Fraction(0), tuple(request.multiplicity for request in self.instance.requests)

    def lower_bound(self, now: Fraction, pending: Sequence[Request]) -> Fraction:
        bound = self.empty
        for request in pending:
            earliest = max(now, request.arrival) + self.lengths[request.page] / self.speed
            bound = max(bound, request_value(request, earliest, self.kind))
        return bound

    def serve(
        self, page: str, target: Request, start: Fraction, end: Fraction,
        remaining: Tuple[int, ...], pending: Sequence[Request],
    ) -> Move:
        """Transmit `page` over [start, end] for `target` and report what it satisfies"""
        counts = list(remaining)
        value = self.empty
        if self.unicast:
            i = self.position[target.key]
            counts[i] -= 1
            if counts[i] == 0:
                value = max(value, request_value(target, end, self.kind))
        else:
            for request in pending:
                if request.page == page and request.arrival <= start:
                    counts[self.position[request.key]] = 0
                    value = max(value, request_value(request, end, self.kind))
        return (page, target, start), value, (end, tuple(counts))

    def moves(self, state: State, pending: List[Request]) -> Iterator[Move]:
        raise NotImplementedError

    def solve(self, state: State) -> Fraction:
        known = self.memo.get(state)
        if known is not None:
            return known[0]
        self.nodes += 1
        now, remaining = state
        pending = [r for r, n in zip(self.instance.requests, remaining) if n > 0]
        if not pending:
            self.memo[state] = (self.empty, None)
            return self.empty
        floor = self.lower_bound(now, pending)
        best: Optional[Fraction] = None
        best_move: Optional[Move] = None
        for move in self.moves(state, pending):
            _, served, following = move
            if best is not None and served >= best:
                continue
            value = max(served, self.solve(following))
            if best is None or value < best:
                best, best_move = value, move
                if best <= floor:
                    break
        self.memo[state] = (best, best_move)
        return best

    def plan(self) -> List[Broadcast]:
        broadcasts = []
        state = self.initial()
        while True:
            _, move = self.memo[state]
            if move is None:
                return broadcasts
            broadcast, _, state = move
            if broadcast is not None:
                broadcasts.append(broadcast)

    def run(self) -> OracleResult:
        objective = self.solve(self.initial())
        witness = _witness(self.instance, self.speed, self.plan())
        logger.debug(f"Oracle ({self.kind.value}): optimum {format_rat(objective)} after {self.nodes} states")
        return OracleResult(objective=objective, witness=witness, nodes_explored=self.nodes)


class _CanonicalSearch(_Search):
    """Each move transmits a page starting at max(now, arrival of the request it targets)"""

    def moves(self, state: State, pending: List[Request]) -> Iterator[Move]:
        now, remaining = state
        options: Dict[tuple, Request] = {}
        for request in pending:
            start = max(now, request.arrival)
            key = (start, request.page, request.index) if self.unicast else (start, request.page)
            options.setdefault(key, request)
        for key in sorted(options):
            target = options[key]
            start = key[0]
            end = start + self.lengths[target.page] / self.speed
            yield self.serve(target.page, target, start, end, remaining, pending)


class _SlotSearch(_Search):
    """Each move fills the unit slot [t, t+1] with one released page, or idles while arrivals remain"""

    def moves(self, state: State, pending: List[Request]) -> Iterator[Move]:
        t, remaining = state
        released = [r for r in pending if r.arrival <= t]
        for page in sorted({r.page for r in released}):
            target = min((r for r in released if r.page == page), key=lambda r: r.index)
            yield self.serve(page, target, t, t + 1, remaining, released)
        if len(released) < len(pending):
            yield None, self.empty, (t + 1, remaining)


def optimal_schedule(
    instance: Instance,
    kind: MetricKind,
    speed: Fraction = Fraction(1),
    cap: Optional[int] = None,
) -> OracleResult:
    """
    Exact optimum over the canonical schedule class

    Raises:
        OracleLimitError: more jobs than the cap
        PolicyMismatchError: delay-factor kind without deadlines
    """
    _guard(instance, kind, cap)
    return _CanonicalSearch(instance, kind, speed).run()


def optimal_slot_schedule(instance: Instance, kind: MetricKind, cap: Optional[int] = None) -> OracleResult:
    """
    Exact optimum for slotted instances at speed 1, deciding one unit slot at a time

    Raises:
        OracleLimitError: more jobs than the cap
        PolicyMismatchError: delay-factor kind without deadlines
        ValueError: instance is not slotted
    """
    if instance.time_model != TimeModel.SLOTTED:
        raise ValueError("slot search requires a slotted instance")
    _guard(instance, kind, cap)
    return _SlotSearch(instance, kind, Fraction(1)).run()


# ============= SMALL-INSTANCE ENUMERATION =============


def page_names(count: int) -> List[str]:
    """a, b, c, ... z, p26, p27, ..."""
    return [chr(ord("a") + i) if i < 26 else f"p{i}" for i in range(count)]


def enumerate_small_instances(
    max_pages: int = 3,
    horizon: int = 5,
    max_requests: int = 5,
    deadlines: bool = False,
) -> Iterator[Instance]:
    """
    Every slotted unit-page broadcast instance with arrivals in {0..horizon},
    each (page, arrival) pair used at most once, 1..max_requests requests.
    With deadlines on, every combination of deadlines in {arrival+1 .. horizon+2}.
    Deterministic order: by size, then lexicographic over (page, arrival) pairs.
    """
    names = page_names(max_pages)
    pages = [Page(id=name, length=Fraction(1)) for name in names]
    pairs = [(name, arrival) for name in names for arrival in range(horizon + 1)]
    for size in range(1, max_requests + 1):
        for combo in itertools.combinations(pairs, size):
            if not deadlines:
                requests = [Request(page=p, arrival=Fraction(a)) for p, a in combo]
                yield build_instance(pages, requests, TimeModel.SLOTTED)
                continue
            ranges = [range(a + 1, horizon + 3) for _, a in combo]
            for chosen in itertools.product(*ranges):
                requests = [
                    Request(page=p, arrival=Fraction(a), deadline=Fraction(d))
                    for (p, a), d in zip(combo, chosen)
                ]
                yield build_instance(pages, requests, TimeModel.SLOTTED)


__all__ = [
    "optimal_schedule",
    "optimal_slot_schedule",
    "enumerate_small_instances",
    "page_names",
]
