"""
Data models for BroadcastBench
Instances, requests, transcripts, policy/simulation configuration and results
"""
from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_core import core_schema

from app.utils.helpers import format_rat
from app.utils.validators import parse_rat


# ============= EXACT RATIONALS =============


class _RatAnnotation:
    """Pydantic hook: rationals travel as "p" / "p/q" strings in JSON"""

    @classmethod
    def __get_pydantic_core_schema__(cls, source_type: Any, handler) -> core_schema.CoreSchema:
        return core_schema.no_info_plain_validator_function(
            parse_rat,
            serialization=core_schema.plain_serializer_function_ser_schema(
                format_rat, when_used="json"
            ),
        )

    @classmethod
    def __get_pydantic_json_schema__(cls, _core_schema, handler):
        return handler(core_schema.str_schema(pattern=r"^-?\d+(/\d+)?$"))


Rat = Annotated[Fraction, _RatAnnotation]

RequestKey = Tuple[str, int]

_frozen = ConfigDict(frozen=True)


# ============= ENUMS =============


class TimeModel(str, Enum):
    SLOTTED = "slotted"
    CONTINUOUS = "continuous"


class Setting(str, Enum):
    """Broadcast: one transmission serves every waiting request for the page"""
    BROADCAST = "broadcast"
    UNICAST = "unicast"


class AttemptStatus(str, Enum):
    COMPLETED = "completed"
    ABANDONED = "abandoned"


class Mode(str, Enum):
    NONPREEMPTIVE = "nonpreemptive"
    PREEMPTIVE = "preemptive"


class PolicyKind(str, Enum):
    """Selection rules"""
    FIFO = "fifo"
    SSF = "ssf"
    SSFW = "ssfw"
    BWF = "bwf"
    SRFW = "srfw"
    LF = "lf"


class MetricKind(str, Enum):
    MAX_RESPONSE = "max_response"
    MAX_DELAY_FACTOR = "max_delay_factor"
    MAX_WEIGHTED_RESPONSE = "max_weighted_response"
    MAX_WEIGHTED_DELAY_FACTOR = "max_weighted_delay_factor"

    @property
    def needs_deadlines(self) -> bool:
        return self in (MetricKind.MAX_DELAY_FACTOR, MetricKind.MAX_WEIGHTED_DELAY_FACTOR)


POLICIES_WITH_WAITING = (PolicyKind.SSFW, PolicyKind.BWF, PolicyKind.SRFW)
POLICIES_NEEDING_DEADLINES = (PolicyKind.SSF, PolicyKind.SSFW, PolicyKind.SRFW, PolicyKind.LF)


# ============= INSTANCE MODELS =============


class Page(BaseModel):
    """A page (or, in the unicast setting, a job) with its transmission length at unit speed"""
    model_config = _frozen

    id: str = Field(..., min_length=1, description="Page identifier")
    length: Rat = Field(..., description="Transmission length at speed 1")


class Request(BaseModel):
    """A timed request for a page"""
    model_config = _frozen

    page: str = Field(..., description="Requested page id")
    arrival: Rat = Field(..., description="Arrival time a")
    deadline: Optional[Rat] = Field(None, description="Deadline d (optional)")
    weight: Rat = Field(Fraction(1), description="Weight w (default 1)")
    multiplicity: int = Field(1, description="Number of identical copies this record stands for")
    index: int = Field(0, ge=0, description="Ordinal of this request among the requests for its page")

    @property
    def key(self) -> RequestKey:
        return (self.page, self.index)

    @property
    def slack(self) -> Optional[Fraction]:
        """S = d - a, or None without a deadline"""
        if self.deadline is None:
            return None
        return self.deadline - self.arrival

    @property
    def label(self) -> str:
        return f"{self.page}#{self.index}"


class Instance(BaseModel):
    """A finite, fully known request sequence"""
    model_config = _frozen

    time_model: TimeModel = Field(TimeModel.CONTINUOUS, description="slotted or continuous time")
    setting: Setting = Field(Setting.BROADCAST, description="broadcast or unicast")
    pages: List[Page] = Field(default_factory=list)
    requests: List[Request] = Field(default_factory=list)

    @property
    def page_map(self) -> Dict[str, Page]:
        return {page.id: page for page in self.pages}

    @property
    def request_map(self) -> Dict[RequestKey, Request]:
        return {request.key: request for request in self.requests}

    @property
    def has_deadlines(self) -> bool:
        return all(request.deadline is not None for request in self.requests)

    @property
    def total_jobs(self) -> int:
        return sum(request.multiplicity for request in self.requests)


# ============= TRANSCRIPT MODELS =============


class RequestRef(BaseModel):
    model_config = _frozen

    page: str
    index: int

    @property
    def key(self) -> RequestKey:
        return (self.page, self.index)


class Segment(BaseModel):
    """A work interval [start, end) of one transmission attempt"""
    model_config = _frozen

    start: Rat
    end: Rat


class TransmissionAttempt(BaseModel):
    """One transmission of a page, possibly preempted and resumed, or abandoned"""
    model_config = _frozen

    page: str = Field(..., description="Transmitted page id")
    start: Rat = Field(..., description="Moment the sequential transmission began at the page's beginning")
    segments: List[Segment] = Field(..., min_length=1, description="Work intervals, disjoint and ordered")
    end: Optional[Rat] = Field(None, description="Completion time; absent when abandoned")
    status: AttemptStatus = Field(AttemptStatus.COMPLETED)
    forcing_request: RequestRef = Field(..., description="Request whose selection caused this transmission")
    count: int = Field(1, ge=1, description="Consecutive identical unit jobs covered (batched unicast runs)")

    @model_validator(mode="after")
    def check_shape(self) -> "TransmissionAttempt":
        if self.segments[0].start != self.start:
            raise ValueError("attempt start must equal its first segment's start")
        if self.status == AttemptStatus.COMPLETED and self.end is None:
            raise ValueError("completed attempt needs an end")
        if self.status == AttemptStatus.ABANDONED and self.end is not None:
            raise ValueError("abandoned attempt has no end")
        return self

    @property
    def busy_time(self) -> Fraction:
        return sum((segment.end - segment.start for segment in self.segments), Fraction(0))


class FinishRecord(BaseModel):
    model_config = _frozen

    page: str
    index: int
    finish: Rat

    @property
    def key(self) -> RequestKey:
        return (self.page, self.index)


class Transcript(BaseModel):
    """Output of one simulation (or an externally supplied schedule)"""
    model_config = _frozen

    instance: Instance
    speed: Rat = Field(Fraction(1), description="Server speed s")
    attempts: List[TransmissionAttempt] = Field(default_factory=list)
    finishes: List[FinishRecord] = Field(default_factory=list)

    @property
    def finish(self) -> Dict[RequestKey, Fraction]:
        return {record.key: record.finish for record in self.finishes}


# ============= CONFIGURATION MODELS =============


class PolicyConfig(BaseModel):
    """Policy identifier plus its parameters"""
    model_config = _frozen

    kind: PolicyKind
    c: Optional[Rat] = Field(None, description="Waiting parameter c > 1 (SSF-W, BWF, SRF-W)")

    @model_validator(mode="after")
    def check_parameters(self) -> "PolicyConfig":
        if self.kind in POLICIES_WITH_WAITING:
            if self.c is None:
                raise ValueError(f"policy {self.kind.value} requires the waiting parameter c")
            if self.c <= 1:
                raise ValueError(f"policy {self.kind.value} requires c > 1, got {format_rat(self.c)}")
        elif self.c is not None:
            raise ValueError(f"policy {self.kind.value} takes no parameter c")
        return self

    @property
    def label(self) -> str:
        if self.c is None:
            return self.kind.value
        return f"{self.kind.value}(c={format_rat(self.c)})"


class SimConfig(BaseModel):
    model_config = _frozen

    speed: Rat = Field(Fraction(1), description="Server speed s >= 1")
    mode: Mode = Field(Mode.NONPREEMPTIVE)
    policy: PolicyConfig

    @field_validator("speed")
    @classmethod
    def validate_speed(cls, v: Fraction) -> Fraction:
        if v < 1:
            raise ValueError(f"speed must be >= 1, got {format_rat(v)}")
        return v


# ============= RESULT MODELS =============


class RunStats(BaseModel):
    """Observation report of one simulation"""
    transmitted_volume: Rat = Field(Fraction(0), description="Work done at unit speed, all attempts")
    abandoned_volume: Rat = Field(Fraction(0), description="Work thrown away by restarts")
    preemptions: int = 0
    restarts: int = 0
    resumes: int = 0
    idle_time: Rat = Field(Fraction(0), description="Idle time between 0 and the last completion")
    events: int = 0


class OracleResult(BaseModel):
    """Exact offline optimum with one witness schedule"""
    objective: Rat
    witness: Transcript
    nodes_explored: int = Field(..., ge=0)


class AdversaryPlan(BaseModel):
    """Group family against LF (pre-shift coordinates, plus the shift)"""
    s: int = Field(..., ge=1)
    c: int = Field(..., ge=2)
    k: int = Field(..., ge=0)
    A: List[Rat] = Field(..., description="Group arrival times (pre-shift)")
    S: List[Rat] = Field(..., description="Group slacks")
    m: List[int] = Field(..., description="Group job counts")
    F: List[Rat] = Field(..., description="Predicted LF finish times (pre-shift)")
    R: List[Rat] = Field(..., description="Predicted LF max wait ratio per group")
    shift: Rat = Field(..., description="Added to every time to make arrivals non-negative")

    @property
    def groups(self) -> int:
        return self.k + 1

    @staticmethod
    def page_id(group: int) -> str:
        return f"g{group}"
