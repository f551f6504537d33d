import json
from fractions import Fraction

import pytest

from app.core.exceptions import AdversaryError, ConfigurationError
from app.models.schemas import MetricKind, Setting, TimeModel
from app.services.generators import (
    build_lf_adversary,
    expanded_adversary,
    make_random_params,
    minimal_k,
    plan_sidecar,
    random_instance,
    reference_opt_schedule,
)
from app.services.instances import instance_from_dict, serialize_instance
from app.services.metrics import evaluate, group_wait_ratios
from app.services.transcripts import validate_transcript

F = Fraction


def test_minimal_k():
    assert minimal_k(1, 2) == 3
    assert minimal_k(1, 3) == 6
    assert minimal_k(2, 3) == 16


def test_adversary_plan_values():
    plan, instance = build_lf_adversary(1, 2)

    assert plan.k == 3
    assert plan.A == [-23, -11, -5, -2]
    assert plan.F == [-7, -3, -1, 0]
    assert plan.S == [64, 16, 4, 1]
    assert plan.m == [16, 4, 2, 1]
    assert plan.R == [F(1, 4), F(1, 2), 1, 2]
    assert plan.shift == 23
    assert instance.setting == Setting.UNICAST
    assert instance.total_jobs == 23
    assert [r.arrival for r in instance.requests] == [0, 12, 18, 21]
    assert [r.slack for r in instance.requests] == plan.S


def test_adversary_group_zero_size():
    plan, instance = build_lf_adversary(1, 3)

    assert plan.m[0] == 2187
    assert instance.total_jobs == sum(plan.m)


def test_adversary_boundaries_chain():
    """Group i runs during [F_(i-1), F_i] and ties with group i-1 when it starts"""
    plan, _ = build_lf_adversary(2, 3)
    assert plan.F[0] - plan.A[0] == F(plan.m[0], plan.s)
    for i in range(plan.groups):
        assert (plan.F[i] - plan.A[i]) / plan.S[i] == plan.R[i]
    for i in range(1, plan.groups):
        assert plan.F[i] - plan.F[i - 1] == F(plan.m[i], plan.s)
        assert (plan.F[i - 1] - plan.A[i]) / plan.S[i] == plan.R[i - 1]


def test_adversary_parameter_errors():
    with pytest.raises(AdversaryError) as exc:
        build_lf_adversary(1, 2, k_override=2)
    assert exc.value.error_code == "K_TOO_SMALL"
    assert "R_0 = 1/2 > 1/3" in exc.value.message

    for s, c in ((0, 2), (1, 1), (F(3, 2), 2), (1, 2.0)):
        with pytest.raises(AdversaryError) as exc:
            build_lf_adversary(s, c)
        assert exc.value.error_code == "BAD_PARAMETER"


def test_adversary_accepts_larger_k():
    plan, instance = build_lf_adversary(1, 2, k_override=4)
    assert plan.k == 4
    assert len(instance.requests) == 5


def test_reference_schedule():
    plan, instance = build_lf_adversary(1, 2)
    reference = reference_opt_schedule(plan)

    assert [(a.page, a.start, a.end, a.count) for a in reference.attempts] == [
        ("g1", 12, 16, 4),
        ("g2", 18, 20, 2),
        ("g3", 21, 22, 1),
        ("g0", 23, 39, 16),
    ]
    assert reference.instance == instance
    assert validate_transcript(instance, reference) == []
    assert evaluate(reference, MetricKind.MAX_DELAY_FACTOR) == 1
    assert group_wait_ratios(reference)["g0"] == F(39, 64)


def test_plan_sidecar_uses_rational_strings():
    plan, _ = build_lf_adversary(1, 2)
    data = json.loads(plan_sidecar(plan))

    assert data["A"] == ["-23", "-11", "-5", "-2"]
    assert data["R"] == ["1/4", "1/2", "1", "2"]
    assert data["m"] == [16, 4, 2, 1]
    assert data["shift"] == "23"


def test_expanded_adversary_has_one_request_per_job():
    plan, instance = expanded_adversary(1, 2)

    assert len(instance.requests) == 23
    assert len(instance.pages) == 23
    assert all(r.multiplicity == 1 for r in instance.requests)
    assert sum(1 for r in instance.requests if r.page.startswith("g0/")) == plan.m[0]


def test_random_instances_are_deterministic():
    params = make_random_params(pages=4, requests=8, horizon=6, max_length=3, granularity=3, deadline_style="random")
    first = random_instance(11, params)

    assert random_instance(11, params) == first
    assert random_instance(12, params) != first
    assert len(first.requests) == 8
    assert all(r.slack >= first.page_map[r.page].length for r in first.requests)
    assert instance_from_dict(json.loads(serialize_instance(first))) == first


def test_random_slotted_and_tight_deadlines():
    params = make_random_params(slotted=True, deadline_style="tight", requests=6)
    instance = random_instance(3, params)

    assert instance.time_model == TimeModel.SLOTTED
    assert all(r.slack == 1 for r in instance.requests)


def test_random_unicast_uses_one_page_per_request():
    instance = random_instance(5, make_random_params(requests=4, setting=Setting.UNICAST))

    assert len(instance.pages) == 4
    assert len({r.page for r in instance.requests}) == 4


def test_random_empty_instance():
    instance = random_instance(0, make_random_params(requests=0))
    assert instance.requests == []


@pytest.mark.parametrize("values", [
    {"slotted": True, "max_length": 2},
    {"slotted": True, "granularity": 2},
    {"weight_style": "inverse_slack"},
    {"pages": 0},
    {"deadline_style": "loose"},
])
def test_random_params_rejected(values):
    with pytest.raises(ConfigurationError) as exc:
        make_random_params(**values)
    assert exc.value.error_code == "BAD_PARAMETER"
