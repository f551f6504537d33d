"""
API Routes for BroadcastBench
Simulation, metrics, oracle and adversary endpoints over the same services the CLI uses
"""
import logging
import time
from fractions import Fraction
from typing import Any, Dict, Optional

from fastapi import APIRouter, Query
from pydantic import BaseModel, Field

from app.core.config import settings
from app.models.schemas import (
    AdversaryPlan,
    Instance,
    MetricKind,
    Mode,
    OracleResult,
    Rat,
    RunStats,
    Transcript,
)
from app.services.engine import make_sim_config, simulate_with_stats
from app.services.generators import build_lf_adversary
from app.services.instances import instance_from_dict
from app.services.metrics import evaluate, summarize
from app.services.oracle import optimal_schedule
from app.services.policies import make_policy
from app.utils.helpers import format_rat

logger = logging.getLogger(__name__)

router = APIRouter(
    prefix=settings.API_PREFIX,
    tags=["Broadcast Scheduling"],
    responses={
        400: {"description": "Invalid instance or configuration"},
        413: {"description": "Instance too large for the oracle"},
        422: {"description": "Policy or metric needs deadlines"},
    },
)


# ═══════════════════════════════════════════════════════════════
# REQUEST / RESPONSE MODELS
# ═══════════════════════════════════════════════════════════════


class SimulateRequest(BaseModel):
    instance: Dict[str, Any] = Field(..., description="Instance in the file format")
    policy: str = Field(..., description="fifo | ssf | ssfw | bwf | srfw | lf")
    c: Optional[Rat] = None
    speed: Rat = Fraction(1)
    mode: Mode = Mode.NONPREEMPTIVE


class SimulateResponse(BaseModel):
    transcript: Transcript
    summary: Dict[str, Rat]
    stats: RunStats


class MetricsRequest(BaseModel):
    instance: Dict[str, Any]
    transcript: Transcript
    metric: MetricKind


class MetricsResponse(BaseModel):
    metric: MetricKind
    value: Rat


class OracleRequest(BaseModel):
    instance: Dict[str, Any]
    metric: MetricKind
    speed: Rat = Fraction(1)
    cap: Optional[int] = Field(None, ge=1)


class AdversaryResponse(BaseModel):
    plan: AdversaryPlan
    instance: Instance


def log_request_metrics(endpoint: str, started: float) -> None:
    duration_ms = int((time.time() - started) * 1000)
    logger.info(f"✅ {endpoint} | {duration_ms}ms")


# ═══════════════════════════════════════════════════════════════
# ENDPOINTS
# ═══════════════════════════════════════════════════════════════


@router.get("/health")
async def health() -> Dict[str, Any]:
    return {"status": "healthy", "version": settings.APP_VERSION}


@router.post("/simulate", response_model=SimulateResponse)
def simulate_endpoint(payload: SimulateRequest) -> SimulateResponse:
    started = time.time()
    instance = instance_from_dict(payload.instance)
    policy = make_policy(payload.policy, payload.c)
    config = make_sim_config(payload.speed, payload.mode.value, policy)
    transcript, stats = simulate_with_stats(instance, config)
    summary = {kind.value: value for kind, value in summarize(transcript).items()}
    log_request_metrics(f"simulate {policy.label}", started)
    return SimulateResponse(transcript=transcript, summary=summary, stats=stats)


@router.post("/metrics", response_model=MetricsResponse)
def metrics_endpoint(payload: MetricsRequest) -> MetricsResponse:
    instance = instance_from_dict(payload.instance)
    transcript = payload.transcript.model_copy(update={"instance": instance})
    return MetricsResponse(metric=payload.metric, value=evaluate(transcript, payload.metric))


@router.post("/oracle", response_model=OracleResult)
def oracle_endpoint(payload: OracleRequest) -> OracleResult:
    started = time.time()
    instance = instance_from_dict(payload.instance)
    result = optimal_schedule(instance, payload.metric, speed=payload.speed, cap=payload.cap)
    log_request_metrics(f"oracle {payload.metric.value} = {format_rat(result.objective)}", started)
    return result


@router.get("/adversary/lf", response_model=AdversaryResponse)
def adversary_endpoint(
    s: int = Query(..., ge=1),
    c: int = Query(..., ge=2),
    k: Optional[int] = Query(None, ge=0),
) -> AdversaryResponse:
    plan, instance = build_lf_adversary(s, c, k)
    return AdversaryResponse(plan=plan, instance=instance)
