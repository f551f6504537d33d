"""
Selection rules
Each rule maps (current time, released unsatisfied requests) to the request
that forces the next transmission. All rules are pure functions of the view.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.core.exceptions import ConfigurationError, PolicyMismatchError
from app.models.schemas import (
    POLICIES_NEEDING_DEADLINES,
    Instance,
    PolicyConfig,
    PolicyKind,
    Request,
)
from app.utils.validators import parse_rat

logger = logging.getLogger(__name__)

Selector = Callable[["QueueView"], Request]


@dataclass(frozen=True)
class QueueEntry:
    """A released, unsatisfied request with its current (weighted) ratios at view.now"""
    request: Request
    wait: Fraction
    ratio: Optional[Fraction]
    weighted_wait: Fraction
    weighted_ratio: Optional[Fraction]

    @property
    def slack(self) -> Optional[Fraction]:
        return self.request.slack

    @property
    def tie_key(self) -> Tuple[Fraction, str, int]:
        return (self.request.arrival, self.request.page, self.request.index)


@dataclass(frozen=True)
class QueueView:
    now: Fraction
    entries: Tuple[QueueEntry, ...]

    @classmethod
    def build(cls, now: Fraction, requests: Sequence[Request]) -> "QueueView":
        entries = []
        for request in requests:
            wait = now - request.arrival
            slack = request.slack
            ratio = None if slack is None else wait / slack
            entries.append(QueueEntry(
                request=request,
                wait=wait,
                ratio=ratio,
                weighted_wait=request.weight * wait,
                weighted_ratio=None if ratio is None else request.weight * ratio,
            ))
        return cls(now=now, entries=tuple(entries))


def _require_entries(view: QueueView) -> None:
    if not view.entries:
        raise ValueError("selection over an empty queue")


def _require_slacks(view: QueueView, policy: str) -> None:
    for entry in view.entries:
        if entry.ratio is None:
            raise PolicyMismatchError(f"{policy} needs deadlines; request {entry.request.label} has none")


def waiting_queue(view: QueueView, c: Fraction, value: Callable[[QueueEntry], Fraction]) -> List[QueueEntry]:
    """Q(t): entries whose value is at least 1/c of the current maximum (raw values, no clamp)"""
    top = max(value(entry) for entry in view.entries)
    return [entry for entry in view.entries if c * value(entry) >= top]


# ============= SELECTORS =============


def fifo_select(view: QueueView) -> Request:
    """Earliest arrival; ties by (page id, index)"""
    _require_entries(view)
    return min(view.entries, key=lambda e: e.tie_key).request


def ssf_select(view: QueueView) -> Request:
    """Smallest slack; ties by (arrival, page id, index)"""
    _require_entries(view)
    _require_slacks(view, "ssf")
    return min(view.entries, key=lambda e: (e.slack, e.tie_key)).request


def ssfw_select(view: QueueView, c: Fraction) -> Request:
    """Smallest slack within Q(t) = {ratio >= alpha_t / c}"""
    _require_entries(view)
    _require_slacks(view, "ssfw")
    queue = waiting_queue(view, c, lambda e: e.ratio)
    return min(queue, key=lambda e: (e.slack, e.tie_key)).request


def bwf_select(view: QueueView, c: Fraction) -> Request:
    """Largest weight within Q(t) = {w(t-a) >= rho_t / c}"""
    _require_entries(view)
    queue = waiting_queue(view, c, lambda e: e.weighted_wait)
    return min(queue, key=lambda e: (-e.request.weight, e.tie_key)).request


def srfw_select(view: QueueView, c: Fraction) -> Request:
    """Smallest slack over weight within Q(t) = {w(t-a)/S >= alpha^w_t / c}"""
    _require_entries(view)
    _require_slacks(view, "srfw")
    queue = waiting_queue(view, c, lambda e: e.weighted_ratio)
    return min(queue, key=lambda e: (e.slack / e.request.weight, e.tie_key)).request


def lf_select(view: QueueView) -> Request:
    """Largest wait ratio; ties by slack, then (arrival, page id, index).

    Slack is compared before (arrival, page id, index), not after: with the
    plain (arrival, page id, index) order LF and SSF-W at c = 1 can pick
    different requests on equal ratios, while this order makes them coincide
    on every view.
    """
    _require_entries(view)
    _require_slacks(view, "lf")
    return min(view.entries, key=lambda e: (-e.ratio, e.slack, e.tie_key)).request


# ============= CONFIG =============


def make_policy(kind: str, c=None) -> PolicyConfig:
    """
    Build a PolicyConfig from CLI/API values

    Raises:
        ConfigurationError: unknown policy, missing or invalid c
    """
    try:
        policy_kind = PolicyKind(kind.lower())
    except ValueError:
        names = ", ".join(p.value for p in PolicyKind)
        raise ConfigurationError(f"unknown policy '{kind}' (expected one of: {names})", "BAD_PARAMETER")
    try:
        c_value = None if c is None else parse_rat(c)
    except ValueError as e:
        raise ConfigurationError(f"--c: {e}", "BAD_PARAMETER")
    try:
        return PolicyConfig(kind=policy_kind, c=c_value)
    except ValidationError as e:
        message = e.errors()[0].get("msg", str(e)).removeprefix("Value error, ")
        code = "MISSING_PARAMETER" if c_value is None else "BAD_PARAMETER"
        raise ConfigurationError(message, code)


def check_policy_fits(instance: Instance, policy: PolicyConfig) -> None:
    """Raise PolicyMismatchError when the policy needs deadlines the instance lacks"""
    if policy.kind in POLICIES_NEEDING_DEADLINES:
        for request in instance.requests:
            if request.deadline is None:
                raise PolicyMismatchError(
                    f"policy {policy.kind.value} needs deadlines; request {request.label} has none"
                )


def make_selector(policy: PolicyConfig) -> Selector:
    if policy.kind == PolicyKind.FIFO:
        return fifo_select
    if policy.kind == PolicyKind.SSF:
        return ssf_select
    if policy.kind == PolicyKind.LF:
        return lf_select
    c = policy.c
    if policy.kind == PolicyKind.SSFW:
        return lambda view: ssfw_select(view, c)
    if policy.kind == PolicyKind.BWF:
        return lambda view: bwf_select(view, c)
    if policy.kind == PolicyKind.SRFW:
        return lambda view: srfw_select(view, c)
    raise ConfigurationError(f"no selector for policy {policy.kind.value}")


__all__ = [
    "QueueEntry",
    "QueueView",
    "fifo_select",
    "ssf_select",
    "ssfw_select",
    "bwf_select",
    "srfw_select",
    "lf_select",
    "make_policy",
    "make_selector",
    "check_policy_fits",
    "waiting_queue",
]
