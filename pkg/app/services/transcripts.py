"""
Transcript Service
Transcript checking against the sequential-transmission model, and
transcript JSON read/write
"""

import logging
from collections import defaultdict
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ValidationError

from app.core.exceptions import InstanceError
from app.models.schemas import AttemptStatus, Instance, Setting, TimeModel, Transcript, TransmissionAttempt
from app.services.instances import validate_instance
from app.utils.helpers import ceil_fraction, format_rat

logger = logging.getLogger(__name__)


def _kth_job_end(
    attempts: List[TransmissionAttempt], step: Fraction, arrival: Fraction, k: int
) -> Optional[Fraction]:
    """End of the k-th completed job of a page that starts at or after `arrival`"""
    seen = 0
    for attempt in attempts:
        if attempt.count == 1:
            if attempt.start >= arrival:
                seen += 1
                if seen == k:
                    return attempt.end
            continue
        first = 0
        if arrival > attempt.start:
            first = ceil_fraction((arrival - attempt.start) / step)
        usable = attempt.count - first
        if usable <= 0:
            continue
        if seen + usable >= k:
            j = first + (k - seen) - 1
            return attempt.start + (j + 1) * step
        seen += usable
    return None


def _start_of_job_ending_at(attempts: List[TransmissionAttempt], step: Fraction, t: Fraction) -> Optional[Fraction]:
    for attempt in attempts:
        if attempt.count == 1:
            if attempt.end == t:
                return attempt.start
            continue
        offset = t - attempt.start
        if offset <= 0 or offset % step != 0:
            continue
        if offset / step <= attempt.count:
            return t - step
    return None


def validate_transcript(instance: Instance, transcript: Transcript) -> List[str]:
    """
    Check a transcript against the instance

    Returns:
        violations, one human-readable line each; empty iff the transcript is valid
    """
    violations: List[str] = []
    pages = instance.page_map
    requests = instance.request_map
    speed = transcript.speed
    if speed < 1:
        violations.append(f"speed {format_rat(speed)} < 1")
        return violations

    by_page: Dict[str, List[TransmissionAttempt]] = defaultdict(list)
    segments = []
    for position, attempt in enumerate(transcript.attempts):
        where = f"attempt {position} (page {attempt.page})"
        page = pages.get(attempt.page)
        if page is None:
            violations.append(f"{where}: unknown page")
            continue
        if attempt.forcing_request.key not in requests:
            violations.append(f"{where}: unknown forcing request {attempt.forcing_request.page}#{attempt.forcing_request.index}")
        elif attempt.forcing_request.page != attempt.page:
            violations.append(f"{where}: forcing request is for another page")
        previous_end = None
        for segment in attempt.segments:
            if segment.end <= segment.start:
                violations.append(f"{where}: empty or reversed segment [{format_rat(segment.start)}, {format_rat(segment.end)}]")
            if previous_end is not None and segment.start < previous_end:
                violations.append(f"{where}: segments out of order")
            previous_end = segment.end
            segments.append((segment.start, segment.end, position))
        work = attempt.busy_time * speed
        if attempt.status == AttemptStatus.COMPLETED:
            if work != page.length * attempt.count:
                violations.append(
                    f"{where}: completed with work {format_rat(work)} != length {format_rat(page.length * attempt.count)}"
                )
            if attempt.end != attempt.segments[-1].end:
                violations.append(f"{where}: end differs from last segment end")
            by_page[attempt.page].append(attempt)
        else:
            if attempt.count != 1:
                violations.append(f"{where}: abandoned batched attempt")
            if work >= page.length:
                violations.append(f"{where}: abandoned after doing the full page of work")

    segments.sort()
    for (s1, e1, p1), (s2, e2, p2) in zip(segments, segments[1:]):
        if s2 < e1:
            violations.append(f"server conflict: attempts {p1} and {p2} overlap at {format_rat(s2)}")

    finish = {}
    for record in transcript.finishes:
        if record.key not in requests:
            violations.append(f"finish recorded for unknown request {record.page}#{record.index}")
            continue
        finish[record.key] = record.finish

    for request in instance.requests:
        label = request.label
        if request.key not in finish:
            violations.append(f"request {label}: no finish time")
            continue
        f = finish[request.key]
        page = pages[request.page]
        step = page.length / speed
        completed = sorted(by_page.get(request.page, []), key=lambda a: a.start)
        k = request.multiplicity if instance.setting == Setting.UNICAST else 1
        expected = _kth_job_end(completed, step, request.arrival, k)
        if expected == f:
            continue
        if expected is None or f < expected:
            job_start = _start_of_job_ending_at(completed, step, f)
            if job_start is None:
                violations.append(f"request {label}: no completed attempt of page {request.page} ends at {format_rat(f)}")
            elif job_start < request.arrival:
                violations.append(f"request {label}: satisfying attempt starts before arrival")
            else:
                violations.append(f"request {label}: finish {format_rat(f)} precedes its last required job")
        else:
            violations.append(
                f"request {label}: finish {format_rat(f)} is not the earliest satisfying completion {format_rat(expected)}"
            )

    if violations:
        logger.debug(f"Transcript check found {len(violations)} violations")
    return violations


# ============= JSON =============


def dump_transcript(transcript: Transcript) -> str:
    return transcript.model_dump_json(indent=2)


class _EmbeddedInstance(BaseModel):
    """Fields a saved transcript's instance must spell out"""
    time_model: TimeModel
    setting: Setting
    pages: List[Any]
    requests: List[Any]


class _TranscriptEnvelope(BaseModel):
    instance: _EmbeddedInstance


def _malformed(error: ValidationError) -> InstanceError:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ()))
    return InstanceError(f"malformed transcript: {location}: {first.get('msg')}", "MALFORMED")


def require_finishes(transcript: Transcript) -> None:
    """
    Raises:
        InstanceError: some request of the embedded instance has no finish record
    """
    finish = transcript.finish
    for request in transcript.instance.requests:
        if request.key not in finish:
            raise InstanceError(
                f"malformed transcript: request {request.label} has no finish record", "MALFORMED",
                entity=request.label,
            )


def parse_transcript(text: Union[str, bytes]) -> Transcript:
    """
    Raises:
        InstanceError: malformed transcript JSON, an embedded instance violating the model,
            or a request without a finish record
    """
    try:
        _TranscriptEnvelope.model_validate_json(text)
        transcript = Transcript.model_validate_json(text)
    except ValidationError as e:
        raise _malformed(e)
    validate_instance(transcript.instance)
    require_finishes(transcript)
    return transcript


def load_transcript(path: str) -> Transcript:
    try:
        with open(path, "rb") as f:
            return parse_transcript(f.read())
    except OSError as e:
        raise InstanceError(f"cannot read transcript file {path}: {e.strerror}", "MALFORMED", entity=path)


__all__ = ["validate_transcript", "require_finishes", "dump_transcript", "parse_transcript", "load_transcript"]
