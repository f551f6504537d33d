"""
Instance Service
Parsing, validation and serialization of instance files
"""

import json
import logging
from typing import List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.core.exceptions import InstanceError
from app.models.schemas import Instance, Page, Rat, Request, Setting, TimeModel
from app.utils.helpers import format_rat
from app.utils.validators import is_integral

logger = logging.getLogger(__name__)


# ============= FILE FORMAT =============


class _PageEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    length: Rat


class _RequestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    page: str
    arrival: Rat
    deadline: Optional[Rat] = None
    weight: Optional[Rat] = None
    multiplicity: Optional[int] = None


class _InstanceFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    time_model: TimeModel
    setting: Setting
    pages: List[_PageEntry]
    requests: List[_RequestEntry]


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ()))
    return f"{location}: {first.get('msg')}"


# ============= BUILD / VALIDATE =============


def build_instance(
    pages: Sequence[Page],
    requests: Sequence[Request],
    time_model: TimeModel = TimeModel.CONTINUOUS,
    setting: Setting = Setting.BROADCAST,
) -> Instance:
    """Assemble an instance, assigning per-page request indices in list order, and validate it"""
    counters = {}
    indexed = []
    for request in requests:
        position = counters.get(request.page, 0)
        counters[request.page] = position + 1
        indexed.append(request.model_copy(update={"index": position}))
    instance = Instance(time_model=time_model, setting=setting, pages=list(pages), requests=indexed)
    validate_instance(instance)
    return instance


def validate_instance(instance: Instance) -> Instance:
    """
    Check every model invariant; raise InstanceError naming the offending entity

    Raises:
        InstanceError: on the first violated invariant
    """
    pages = {}
    for page in instance.pages:
        if page.id in pages:
            raise InstanceError(f"duplicate page id '{page.id}'", "DUPLICATE_PAGE", entity=page.id)
        if page.length <= 0:
            raise InstanceError(
                f"page '{page.id}' has non-positive length {format_rat(page.length)}", "BAD_LENGTH", entity=page.id
            )
        if instance.time_model == TimeModel.SLOTTED and page.length != 1:
            raise InstanceError(
                f"slotted instance requires unit pages; page '{page.id}' has length {format_rat(page.length)}",
                "SLOTTED_VIOLATION", entity=page.id,
            )
        pages[page.id] = page

    seen_keys = set()
    requested_pages = set()
    for request in instance.requests:
        label = request.label
        if request.key in seen_keys:
            raise InstanceError(f"duplicate request {label}", "MALFORMED", entity=label)
        seen_keys.add(request.key)
        page = pages.get(request.page)
        if page is None:
            raise InstanceError(f"request {label} references unknown page '{request.page}'", "UNKNOWN_PAGE", entity=label)
        if request.arrival < 0:
            raise InstanceError(
                f"request {label} has negative arrival {format_rat(request.arrival)}", "NEGATIVE_ARRIVAL", entity=label
            )
        if request.weight <= 0:
            raise InstanceError(f"request {label} has non-positive weight", "BAD_WEIGHT", entity=label)
        if request.multiplicity < 1:
            raise InstanceError(f"request {label} has multiplicity < 1", "BAD_MULTIPLICITY", entity=label)
        if request.deadline is not None:
            if request.deadline <= request.arrival:
                raise InstanceError(
                    f"request {label}: deadline before arrival "
                    f"({format_rat(request.deadline)} <= {format_rat(request.arrival)})",
                    "DEADLINE_BEFORE_ARRIVAL", entity=label,
                )
            if request.slack < page.length:
                raise InstanceError(
                    f"request {label}: slack {format_rat(request.slack)} < length {format_rat(page.length)}",
                    "SLACK_TOO_SMALL", entity=label,
                )
        if instance.time_model == TimeModel.SLOTTED:
            if not is_integral(request.arrival) or (request.deadline is not None and not is_integral(request.deadline)):
                raise InstanceError(
                    f"request {label}: slotted instance requires integer times", "SLOTTED_VIOLATION", entity=label
                )
        if instance.setting == Setting.UNICAST:
            if request.page in requested_pages:
                raise InstanceError(
                    f"request {label}: page '{request.page}' already requested (unicast)",
                    "UNICAST_SHARED_PAGE", entity=label,
                )
            requested_pages.add(request.page)
    return instance


# ============= PARSE / SERIALIZE =============


def parse_instance(text: Union[str, bytes]) -> Instance:
    """
    Parse and validate the JSON instance format

    Raises:
        InstanceError: malformed syntax or any violated invariant
    """
    try:
        raw = _InstanceFile.model_validate_json(text)
    except ValidationError as e:
        raise InstanceError(f"malformed instance: {_describe(e)}", "MALFORMED")
    return _from_file(raw)


def instance_from_dict(data: dict) -> Instance:
    """Same as parse_instance, for an already decoded JSON object"""
    try:
        raw = _InstanceFile.model_validate(data)
    except ValidationError as e:
        raise InstanceError(f"malformed instance: {_describe(e)}", "MALFORMED")
    return _from_file(raw)


def _from_file(raw: _InstanceFile) -> Instance:
    pages = [Page(id=entry.id, length=entry.length) for entry in raw.pages]
    requests = []
    for entry in raw.requests:
        fields = {"page": entry.page, "arrival": entry.arrival, "deadline": entry.deadline}
        if entry.weight is not None:
            fields["weight"] = entry.weight
        if entry.multiplicity is not None:
            fields["multiplicity"] = entry.multiplicity
        requests.append(Request(**fields))
    instance = build_instance(pages, requests, raw.time_model, raw.setting)
    logger.debug(f"Parsed instance: {len(instance.pages)} pages, {len(instance.requests)} requests")
    return instance


def instance_to_dict(instance: Instance) -> dict:
    """File-format dictionary; optional fields omitted when at their defaults"""
    requests = []
    for request in instance.requests:
        entry = {"page": request.page, "arrival": format_rat(request.arrival)}
        if request.deadline is not None:
            entry["deadline"] = format_rat(request.deadline)
        if request.weight != 1:
            entry["weight"] = format_rat(request.weight)
        if request.multiplicity != 1:
            entry["multiplicity"] = str(request.multiplicity)
        requests.append(entry)
    return {
        "time_model": instance.time_model.value,
        "setting": instance.setting.value,
        "pages": [{"id": page.id, "length": format_rat(page.length)} for page in instance.pages],
        "requests": requests,
    }


def serialize_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2)


def load_instance(path: str) -> Instance:
    try:
        with open(path, "rb") as f:
            return parse_instance(f.read())
    except OSError as e:
        raise InstanceError(f"cannot read instance file {path}: {e.strerror}", "MALFORMED", entity=path)


# ============= DERIVED INSTANCES =============


def expand_multiplicities(instance: Instance) -> Instance:
    """
    One request per job. In the unicast setting each copy gets its own page
    "<page>/<copy>" so that every page keeps a single requester.
    """
    if all(request.multiplicity == 1 for request in instance.requests):
        return instance
    page_map = instance.page_map
    if instance.setting == Setting.UNICAST:
        pages = []
        requests = []
        expanded = set()
        for request in instance.requests:
            page = page_map[request.page]
            width = len(str(request.multiplicity - 1))
            for copy in range(request.multiplicity):
                copy_id = f"{page.id}/{copy:0{width}d}" if request.multiplicity > 1 else page.id
                pages.append(Page(id=copy_id, length=page.length))
                requests.append(request.model_copy(update={"page": copy_id, "multiplicity": 1}))
            expanded.add(page.id)
        pages.extend(page for page in instance.pages if page.id not in expanded)
        return build_instance(pages, requests, instance.time_model, instance.setting)
    requests = [
        request.model_copy(update={"multiplicity": 1})
        for request in instance.requests
        for _ in range(request.multiplicity)
    ]
    return build_instance(instance.pages, requests, instance.time_model, instance.setting)
