from fractions import Fraction

import pytest

from app.core.exceptions import OracleLimitError, PolicyMismatchError
from app.models.schemas import MetricKind, Page, PolicyConfig, PolicyKind, Request, SimConfig, TimeModel
from app.services.engine import simulate
from app.services.generators import build_lf_adversary, make_random_params, random_instance
from app.services.instances import build_instance
from app.services.metrics import evaluate
from app.services.oracle import enumerate_small_instances, optimal_schedule, optimal_slot_schedule, page_names
from app.services.transcripts import validate_transcript

F = Fraction


@pytest.fixture
def small_instance():
    return build_instance(
        [Page(id="a", length=F(1)), Page(id="b", length=F(1))],
        [Request(page="a", arrival=F(0)), Request(page="b", arrival=F(0)), Request(page="a", arrival=F(1))],
        time_model=TimeModel.SLOTTED,
    )


def test_optimum_of_small_instance(small_instance):
    """Either order leaves some request waiting two units"""
    result = optimal_schedule(small_instance, MetricKind.MAX_RESPONSE)

    assert result.objective == 2
    assert result.nodes_explored > 0
    assert validate_transcript(small_instance, result.witness) == []
    assert evaluate(result.witness, MetricKind.MAX_RESPONSE) == 2


def test_slot_search_agrees(small_instance):
    assert optimal_slot_schedule(small_instance, MetricKind.MAX_RESPONSE).objective == 2


def test_single_request():
    instance = build_instance([Page(id="a", length=F(3))], [Request(page="a", arrival=F(2), deadline=F(8))])

    assert optimal_schedule(instance, MetricKind.MAX_RESPONSE).objective == 3
    assert optimal_schedule(instance, MetricKind.MAX_RESPONSE, speed=F(3)).objective == 1
    assert optimal_schedule(instance, MetricKind.MAX_DELAY_FACTOR).objective == 1


def test_oracle_cap(small_instance):
    with pytest.raises(OracleLimitError) as exc:
        optimal_schedule(small_instance, MetricKind.MAX_RESPONSE, cap=2)
    assert "instance has 3 jobs, oracle cap is 2" in exc.value.message


def test_oracle_needs_deadlines_for_delay_factor(small_instance):
    with pytest.raises(PolicyMismatchError):
        optimal_schedule(small_instance, MetricKind.MAX_DELAY_FACTOR)


def test_slot_search_rejects_continuous_instances():
    instance = build_instance([Page(id="a", length=F(2))], [Request(page="a", arrival=F(0))])
    with pytest.raises(ValueError):
        optimal_slot_schedule(instance, MetricKind.MAX_RESPONSE)


def test_enumeration_counts():
    # 4 (page, arrival) pairs: 4 singletons and 6 pairs
    assert sum(1 for _ in enumerate_small_instances(max_pages=2, horizon=1, max_requests=2)) == 10
    assert sum(1 for _ in enumerate_small_instances(max_pages=1, horizon=0, max_requests=1)) == 1
    # deadline 1 or 2
    assert sum(1 for _ in enumerate_small_instances(max_pages=1, horizon=0, max_requests=1, deadlines=True)) == 2


def test_enumeration_is_deterministic():
    first = list(enumerate_small_instances(max_pages=2, horizon=2, max_requests=2))
    assert first == list(enumerate_small_instances(max_pages=2, horizon=2, max_requests=2))
    assert all(i.time_model == TimeModel.SLOTTED for i in first)


def test_page_names():
    assert page_names(3) == ["a", "b", "c"]
    assert page_names(28)[26:] == ["p26", "p27"]


@pytest.mark.parametrize("kind", [MetricKind.MAX_RESPONSE, MetricKind.MAX_WEIGHTED_RESPONSE])
def test_canonical_and_slot_search_agree(kind):
    for instance in enumerate_small_instances(max_pages=2, horizon=3, max_requests=3):
        canonical = optimal_schedule(instance, kind)
        slots = optimal_slot_schedule(instance, kind)
        assert canonical.objective == slots.objective
        assert validate_transcript(instance, slots.witness) == []


def test_canonical_and_slot_search_agree_with_deadlines():
    for instance in enumerate_small_instances(max_pages=2, horizon=2, max_requests=3, deadlines=True):
        canonical = optimal_schedule(instance, MetricKind.MAX_DELAY_FACTOR)
        assert canonical.objective == optimal_slot_schedule(instance, MetricKind.MAX_DELAY_FACTOR).objective
        assert evaluate(canonical.witness, MetricKind.MAX_DELAY_FACTOR) == canonical.objective


@pytest.mark.slow
def test_canonical_and_slot_search_agree_full_family():
    for instance in enumerate_small_instances(max_pages=3, horizon=5, max_requests=5):
        assert (
            optimal_schedule(instance, MetricKind.MAX_RESPONSE).objective
            == optimal_slot_schedule(instance, MetricKind.MAX_RESPONSE).objective
        )


@pytest.mark.slow
def test_canonical_and_slot_search_agree_with_deadlines_full_family():
    for instance in enumerate_small_instances(max_pages=3, horizon=3, max_requests=4, deadlines=True):
        assert (
            optimal_schedule(instance, MetricKind.MAX_DELAY_FACTOR).objective
            == optimal_slot_schedule(instance, MetricKind.MAX_DELAY_FACTOR).objective
        )


def test_adding_a_request_never_lowers_the_optimum():
    params = make_random_params(pages=3, requests=5, horizon=4, max_length=2, granularity=2, deadline_style="random")
    for seed in range(30):
        instance = random_instance(seed, params)
        smaller = build_instance(instance.pages, instance.requests[:-1], instance.time_model, instance.setting)
        for kind in (MetricKind.MAX_RESPONSE, MetricKind.MAX_DELAY_FACTOR):
            assert optimal_schedule(smaller, kind).objective <= optimal_schedule(instance, kind).objective


def test_optimum_never_exceeds_an_online_schedule():
    params = make_random_params(pages=3, requests=5, horizon=4, max_length=2, granularity=2, deadline_style="random")
    for seed in range(40):
        instance = random_instance(seed, params)
        optimum = optimal_schedule(instance, MetricKind.MAX_DELAY_FACTOR).objective
        for kind in (PolicyKind.FIFO, PolicyKind.LF):
            online = simulate(instance, SimConfig(policy=PolicyConfig(kind=kind)))
            assert optimum <= evaluate(online, MetricKind.MAX_DELAY_FACTOR)
        assert optimal_schedule(instance, MetricKind.MAX_DELAY_FACTOR, speed=F(2)).objective <= optimum


def test_unicast_adversary_optimum_is_one():
    _, instance = build_lf_adversary(1, 2)
    result = optimal_schedule(instance, MetricKind.MAX_DELAY_FACTOR, cap=23)

    assert result.objective == 1
    assert validate_transcript(instance, result.witness) == []
