from fractions import Fraction

import pytest

from app.core.exceptions import InstanceError, PolicyMismatchError
from app.models.schemas import MetricKind, Mode, Page, PolicyConfig, PolicyKind, Request, SimConfig
from app.services.engine import simulate
from app.services.generators import build_lf_adversary
from app.services.grouped import simulate_grouped_unicast
from app.services.instances import build_instance
from app.services.metrics import (
    REPORT_HEADER,
    evaluate,
    group_wait_ratios,
    per_request_report,
    report_csv,
    summarize,
)

F = Fraction


@pytest.fixture
def fifo_transcript():
    instance = build_instance(
        [Page(id="a", length=F(2)), Page(id="b", length=F(1))],
        [Request(page="a", arrival=F(0)), Request(page="b", arrival=F(0)), Request(page="b", arrival=F(1))],
    )
    return simulate(instance, SimConfig(policy=PolicyConfig(kind=PolicyKind.FIFO)))


@pytest.fixture
def preempt_transcript():
    instance = build_instance(
        [Page(id="a", length=F(3)), Page(id="b", length=F(1))],
        [
            Request(page="a", arrival=F(0), deadline=F(10), weight=F(2)),
            Request(page="b", arrival=F(1), deadline=F(2)),
        ],
    )
    config = SimConfig(mode=Mode.PREEMPTIVE, policy=PolicyConfig(kind=PolicyKind.SSFW, c=F(2)))
    return simulate(instance, config)


def test_max_response_fifo(fifo_transcript):
    """Finishes 2, 3, 3 against arrivals 0, 0, 1"""
    assert evaluate(fifo_transcript, MetricKind.MAX_RESPONSE) == 3
    assert evaluate(fifo_transcript, MetricKind.MAX_WEIGHTED_RESPONSE) == 3


def test_delay_factor_needs_deadlines(fifo_transcript):
    with pytest.raises(PolicyMismatchError):
        evaluate(fifo_transcript, MetricKind.MAX_DELAY_FACTOR)

    assert set(summarize(fifo_transcript)) == {MetricKind.MAX_RESPONSE, MetricKind.MAX_WEIGHTED_RESPONSE}


def test_missing_finish_record_is_malformed(fifo_transcript):
    partial = fifo_transcript.model_copy(update={"finishes": fifo_transcript.finishes[:2]})

    with pytest.raises(InstanceError) as exc:
        evaluate(partial, MetricKind.MAX_RESPONSE)
    assert exc.value.error_code == "MALFORMED"
    with pytest.raises(InstanceError):
        per_request_report(partial)


def test_single_request_meeting_deadline_has_delay_factor_one():
    instance = build_instance([Page(id="a", length=F(1))], [Request(page="a", arrival=F(0), deadline=F(5))])
    transcript = simulate(instance, SimConfig(policy=PolicyConfig(kind=PolicyKind.SSFW, c=F(2))))

    assert transcript.finish == {("a", 0): 1}
    assert evaluate(transcript, MetricKind.MAX_DELAY_FACTOR) == 1


def test_weighted_metrics(preempt_transcript):
    summary = summarize(preempt_transcript)

    assert summary[MetricKind.MAX_RESPONSE] == 4
    assert summary[MetricKind.MAX_WEIGHTED_RESPONSE] == 8
    assert summary[MetricKind.MAX_DELAY_FACTOR] == F(20, 19)
    # weight 2 times the clamped ratio max{1, 4/10}
    assert summary[MetricKind.MAX_WEIGHTED_DELAY_FACTOR] == 2


def test_per_request_report(preempt_transcript):
    first, second = per_request_report(preempt_transcript)

    assert (first.page, first.finish, first.ratio, first.delay_factor) == ("a", 4, F(2, 5), 1)
    assert (second.page, second.finish, second.response, second.delay_factor) == ("b", F(39, 19), F(20, 19), F(20, 19))

    lines = report_csv([first, second]).splitlines()
    assert lines[0] == ",".join(REPORT_HEADER)
    assert lines[1] == "a,0,0,10,2,4,4,1,8,2"
    assert lines[2] == "b,0,1,2,1,39/19,20/19,20/19,20/19,20/19"


def test_report_leaves_ratio_columns_blank_without_deadline(fifo_transcript):
    rows = per_request_report(fifo_transcript)

    assert [(r.page, r.index) for r in rows] == [("a", 0), ("b", 0), ("b", 1)]
    assert report_csv(rows).splitlines()[1] == "a,0,0,,1,2,2,,2,"


def test_empty_instance_values():
    instance = build_instance([Page(id="a", length=F(1))], [])
    transcript = simulate(instance, SimConfig(policy=PolicyConfig(kind=PolicyKind.FIFO)))

    assert transcript.attempts == []
    assert evaluate(transcript, MetricKind.MAX_RESPONSE) == 0
    assert evaluate(transcript, MetricKind.MAX_DELAY_FACTOR) == 1
    assert report_csv(per_request_report(transcript)) == ",".join(REPORT_HEADER) + "\n"


def test_group_wait_ratios_match_grouped_engine():
    _, instance = build_lf_adversary(1, 2)
    transcript, ratios = simulate_grouped_unicast(instance, SimConfig(policy=PolicyConfig(kind=PolicyKind.LF)))

    assert group_wait_ratios(transcript) == ratios
    assert evaluate(transcript, MetricKind.MAX_DELAY_FACTOR) == 2
