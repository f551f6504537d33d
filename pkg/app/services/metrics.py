"""
Metrics Service
Max-type objective values and per-request reports over transcripts
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional

from pydantic import BaseModel

from app.core.exceptions import PolicyMismatchError
from app.models.schemas import MetricKind, Rat, Request, Transcript
from app.services.transcripts import require_finishes
from app.utils.helpers import to_csv

logger = logging.getLogger(__name__)

REPORT_HEADER = (
    "page", "index", "arrival", "deadline", "weight", "finish",
    "response", "delay_factor", "weighted_response", "weighted_delay_factor",
)

_ONE = Fraction(1)


class ReportRow(BaseModel):
    page: str
    index: int
    arrival: Rat
    deadline: Optional[Rat] = None
    weight: Rat
    finish: Rat
    response: Rat
    ratio: Optional[Rat] = None
    delay_factor: Optional[Rat] = None
    weighted_response: Rat
    weighted_delay_factor: Optional[Rat] = None

    def cells(self) -> list:
        return [
            self.page, self.index, self.arrival, self.deadline, self.weight, self.finish,
            self.response, self.delay_factor, self.weighted_response, self.weighted_delay_factor,
        ]


def delay_factor(request: Request, finish: Fraction) -> Fraction:
    """max{1, (f - a)/S}"""
    return max(_ONE, (finish - request.arrival) / request.slack)


def request_value(request: Request, finish: Fraction, kind: MetricKind) -> Fraction:
    if kind == MetricKind.MAX_RESPONSE:
        return finish - request.arrival
    if kind == MetricKind.MAX_WEIGHTED_RESPONSE:
        return request.weight * (finish - request.arrival)
    if kind == MetricKind.MAX_DELAY_FACTOR:
        return delay_factor(request, finish)
    # weight applied to the clamped ratio
    return request.weight * delay_factor(request, finish)


def _require_deadlines(requests: List[Request], kind: MetricKind) -> None:
    if not kind.needs_deadlines:
        return
    for request in requests:
        if request.deadline is None:
            raise PolicyMismatchError(f"metric {kind.value} needs deadlines; request {request.label} has none")


def empty_value(kind: MetricKind) -> Fraction:
    """Objective of a schedule with no requests"""
    return _ONE if kind.needs_deadlines else Fraction(0)


def evaluate(transcript: Transcript, kind: MetricKind) -> Fraction:
    """
    Maximum over all requests of the chosen per-request value

    Raises:
        PolicyMismatchError: delay-factor kind on an instance without deadlines
        InstanceError: a request without a finish record
    """
    requests = transcript.instance.requests
    _require_deadlines(requests, kind)
    require_finishes(transcript)
    finish = transcript.finish
    best = empty_value(kind)
    for request in requests:
        best = max(best, request_value(request, finish[request.key], kind))
    return best


def applicable_metrics(transcript: Transcript) -> List[MetricKind]:
    if transcript.instance.has_deadlines:
        return list(MetricKind)
    return [kind for kind in MetricKind if not kind.needs_deadlines]


def summarize(transcript: Transcript) -> Dict[MetricKind, Fraction]:
    """Every metric the instance supports"""
    return {kind: evaluate(transcript, kind) for kind in applicable_metrics(transcript)}


def per_request_report(transcript: Transcript) -> List[ReportRow]:
    """One row per request, ordered by (page id, index); ratio columns blank without a deadline"""
    require_finishes(transcript)
    finish = transcript.finish
    rows = []
    for request in sorted(transcript.instance.requests, key=lambda r: (r.page, r.index)):
        f = finish[request.key]
        response = f - request.arrival
        ratio = None if request.slack is None else response / request.slack
        df = None if ratio is None else max(_ONE, ratio)
        rows.append(ReportRow(
            page=request.page,
            index=request.index,
            arrival=request.arrival,
            deadline=request.deadline,
            weight=request.weight,
            finish=f,
            response=response,
            ratio=ratio,
            delay_factor=df,
            weighted_response=request.weight * response,
            weighted_delay_factor=None if df is None else request.weight * df,
        ))
    return rows


def report_csv(rows: List[ReportRow]) -> str:
    return to_csv(REPORT_HEADER, (row.cells() for row in rows))


def group_wait_ratios(transcript: Transcript) -> Dict[str, Fraction]:
    """Wait ratio (f - a)/S of every request with a deadline, keyed by page (unicast groups)"""
    finish = transcript.finish
    return {
        request.page: (finish[request.key] - request.arrival) / request.slack
        for request in transcript.instance.requests
        if request.slack is not None
    }


__all__ = [
    "REPORT_HEADER",
    "ReportRow",
    "evaluate",
    "summarize",
    "per_request_report",
    "report_csv",
    "request_value",
    "group_wait_ratios",
    "applicable_metrics",
]
