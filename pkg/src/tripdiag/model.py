"""Core data model: queries, POI records, itineraries, contexts, and findings.

Conventions used throughout the package:

* money is stored as integer minor currency units (cents),
* ratings are fixed-point integers scaled by 10 (``45`` means 4.5),
* times of day are integer minutes since midnight attached to an ISO date,
  with no timezone handling anywhere,
* every type is immutable after construction,
* hallucinated ``poi_id`` values are representable on purpose; they are
  flagged by the verifier, never rejected by constructors.
"""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Sequence, Union

PLAN_FORMAT = 1
CATALOG_FORMAT = 1
CONTEXT_FORMAT = 1

MINUTES_PER_DAY = 24 * 60


class Kind(str, Enum):
    """Closed vocabulary of POI record kinds."""

    FLIGHT = "flight"
    ACCOMMODATION = "accommodation"
    RESTAURANT = "restaurant"
    ATTRACTION = "attraction"
    EVENT = "event"
    INTERCITY_TRANSIT = "intercity_transit"
    INNERCITY_TRANSIT = "innercity_transit"


#: kinds whose records describe movement rather than a venue
TRANSIT_KINDS = frozenset({Kind.FLIGHT, Kind.INTERCITY_TRANSIT, Kind.INNERCITY_TRANSIT})

#: kinds that move the traveller between cities
INTERCITY_KINDS = frozenset({Kind.FLIGHT, Kind.INTERCITY_TRANSIT})


class Profile(str, Enum):
    """Benchmark-shaped sandbox profiles."""

    TP_LIKE = "tp-like"
    TC_LIKE = "tc-like"
    CT_LIKE = "ct-like"


class ContextLevel(str, Enum):
    MINIMAL = "minimal"
    MODERATE = "moderate"
    RICH = "rich"
    CORRECTION = "correction"


class MealSlot(str, Enum):
    BREAKFAST = "breakfast"
    LUNCH = "lunch"
    DINNER = "dinner"


class ErrorCategory(str, Enum):
    """Violation taxonomy: one variant per constraint head plus structural ones."""

    DAYS = "days"
    PEOPLE_NUMBER = "people_number"
    TOTAL_BUDGET = "total_budget"
    COST_OF = "cost_of"
    ROOM_TYPE = "room_type"
    HOUSE_RULE = "house_rule"
    TRANSPORT_MODE = "transport_mode"
    CUISINE = "cuisine"
    VISITED_CITY = "visited_city"
    RATING = "rating"
    POI_VISITED = "poi_visited"
    REPEATED_ACTIVITY = "repeated_activity"
    HALLUCINATED_POI = "hallucinated_poi"
    TRANSIT_CONTINUITY = "transit_continuity"
    SCHEMA_ERROR = "schema_error"


_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")

#: attribute values allowed in a PoiRecord: scalars plus string sets
AttrValue = Union[int, str, bool, frozenset]


def parse_iso_date(text: str) -> dt.date:
    """Parse a strict ``YYYY-MM-DD`` date string."""
    if not isinstance(text, str) or not _DATE_RE.match(text):
        raise ValueError(f"not an ISO date: {text!r}")
    return dt.date.fromisoformat(text)


def canonical_json(obj: Any) -> str:
    """Deterministic compact JSON used for files, hashing, and size estimates."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


# ---------------------------------------------------------------------------
# queries and catalog records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Query:
    """A travel request: where from, where to, when, and for how many people."""

    id: str
    text: str
    origin: str
    destinations: tuple[str, ...]
    dates: tuple[dt.date, ...]
    people: int
    profile: Profile

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("query id must be non-empty")
        if not self.destinations:
            raise ValueError("at least one destination city is required")
        if not self.dates:
            raise ValueError("at least one trip date is required")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("trip dates must be strictly ascending")
        if self.people < 1:
            raise ValueError("people must be >= 1")

    @property
    def days(self) -> int:
        return len(self.dates)

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "origin": self.origin,
            "destinations": list(self.destinations),
            "dates": [d.isoformat() for d in self.dates],
            "people": self.people,
            "profile": self.profile.value,
        }

    @staticmethod
    def from_doc(doc: Mapping[str, Any]) -> "Query":
        return Query(
            id=str(doc["id"]),
            text=str(doc.get("text", "")),
            origin=str(doc["origin"]),
            destinations=tuple(str(c) for c in doc["destinations"]),
            dates=tuple(parse_iso_date(d) for d in doc["dates"]),
            people=int(doc["people"]),
            profile=Profile(doc["profile"]),
        )


@dataclass(frozen=True)
class PoiRecord:
    """One catalog entity: a flight, a hotel, a restaurant, and so on.

    ``attributes`` is a typed open map; the keys in use are:

    =================  =============================================
    price              int, minor units (per night / seat / ticket)
    rating             int, tenths (45 means 4.5)
    room_type          str tag, accommodations
    house_rules        frozenset of str tags, accommodations
    max_occupancy      int, accommodations
    cuisines           frozenset of str tags, restaurants
    mode               str, transit records (flight, train, taxi, ...)
    origin             str, transit: departure city or place
    destination        str, transit: arrival city or place
    date               ISO str, dated transit and events
    depart / arrive    int minutes since midnight, dated transit
    duration           int minutes, transit
    distance_m         int metres, innercity legs
    =================  =============================================
    """

    id: str
    kind: Kind
    city: str
    name: str
    attributes: Mapping[str, AttrValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be non-empty")
        attrs = self.attributes
        price = attrs.get("price")
        if price is not None and (not isinstance(price, int) or price < 0):
            raise ValueError(f"{self.id}: price must be a non-negative int of minor units")
        rating = attrs.get("rating")
        if rating is not None and (not isinstance(rating, int) or not 0 <= rating <= 50):
            raise ValueError(f"{self.id}: rating must be an int in [0, 50] tenths")
        for key in ("depart", "arrive"):
            val = attrs.get(key)
            if val is not None and (not isinstance(val, int) or not 0 <= val < MINUTES_PER_DAY):
                raise ValueError(f"{self.id}: {key} must be minutes within one day")
        if self.kind in INTERCITY_KINDS:
            o, d = attrs.get("origin"), attrs.get("destination")
            if not o or not d:
                raise ValueError(f"{self.id}: intercity transit needs origin and destination")
            if o == d:
                raise ValueError(f"{self.id}: intercity transit origin must differ from destination")
        if self.kind is Kind.INNERCITY_TRANSIT:
            # both endpoints are places inside the record's single city
            if not attrs.get("origin") or not attrs.get("destination"):
                raise ValueError(f"{self.id}: innercity transit needs origin and destination places")

    @property
    def price(self) -> int:
        val = self.attributes.get("price", 0)
        return val if isinstance(val, int) else 0

    def to_doc(self) -> dict:
        attrs: dict[str, Any] = {}
        for key in sorted(self.attributes):
            val = self.attributes[key]
            attrs[key] = sorted(val) if isinstance(val, frozenset) else val
        return {
            "id": self.id,
            "kind": self.kind.value,
            "city": self.city,
            "name": self.name,
            "attributes": attrs,
        }

    @staticmethod
    def from_doc(doc: Mapping[str, Any]) -> "PoiRecord":
        attrs: dict[str, AttrValue] = {}
        for key, val in doc.get("attributes", {}).items():
            if isinstance(val, (list, tuple, set)):
                attrs[key] = frozenset(str(v) for v in val)
            else:
                attrs[key] = val
        return PoiRecord(
            id=str(doc["id"]),
            kind=Kind(doc["kind"]),
            city=str(doc["city"]),
            name=str(doc["name"]),
            attributes=attrs,
        )


# ---------------------------------------------------------------------------
# itineraries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActivityItem:
    """One scheduled entry of a day plan.

    ``poi_id`` is a free string: ids that do not resolve in the catalog are
    legal here and get flagged by the verifier.
    """

    kind: Kind
    poi_id: str
    start: Optional[int] = None
    end: Optional[int] = None
    unit_cost: int = 0
    quantity: int = 1
    meal_slot: Optional[MealSlot] = None

    def __post_init__(self) -> None:
        if not self.poi_id:
            raise ValueError("poi_id must be non-empty")
        if self.quantity < 1:
            raise ValueError("quantity must be >= 1")
        if self.unit_cost < 0:
            raise ValueError("unit_cost must be >= 0")
        for label, val in (("start", self.start), ("end", self.end)):
            if val is not None and not 0 <= val < MINUTES_PER_DAY:
                raise ValueError(f"{label} must be minutes within one day")
        if self.start is not None and self.end is not None and self.end < self.start:
            raise ValueError("end must not precede start")

    @property
    def cost(self) -> int:
        return self.unit_cost * self.quantity

    def to_doc(self) -> dict:
        doc: dict[str, Any] = {
            "kind": self.kind.value,
            "poi_id": self.poi_id,
            "unit_cost": self.unit_cost,
            "quantity": self.quantity,
        }
        if self.start is not None:
            doc["start"] = self.start
        if self.end is not None:
            doc["end"] = self.end
        if self.meal_slot is not None:
            doc["meal_slot"] = self.meal_slot.value
        return doc


@dataclass(frozen=True)
class DayPlan:
    """All items scheduled on one date."""

    date: dt.date
    items: tuple[ActivityItem, ...] = ()

    def __post_init__(self) -> None:
        lodgings = [it for it in self.items if it.kind is Kind.ACCOMMODATION]
        if len(lodgings) > 1:
            raise ValueError(f"{self.date}: at most one lodging item per day")
        timed = [it for it in self.items if it.start is not None and it.end is not None]
        for i, a in enumerate(timed):
            for b in timed[i + 1 :]:
                if a.start < b.end and b.start < a.end:
                    raise ValueError(f"{self.date}: items overlap in time")

    def to_doc(self) -> dict:
        return {"date": self.date.isoformat(), "items": [it.to_doc() for it in self.items]}


@dataclass(frozen=True)
class Itinerary:
    """A full plan for a query. ``total_cost`` is always recomputed from items."""

    query_id: str
    days: tuple[DayPlan, ...]
    total_cost: int = field(init=False)

    def __post_init__(self) -> None:
        total = sum(it.cost for day in self.days for it in day.items)
        object.__setattr__(self, "total_cost", total)

    def all_items(self) -> list[tuple[int, int, ActivityItem]]:
        """Items in plan order as (day index, item index, item) triples."""
        return [
            (di, ii, item)
            for di, day in enumerate(self.days)
            for ii, item in enumerate(day.items)
        ]

    def poi_ids(self) -> list[str]:
        """Every referenced poi id in plan order (with repeats)."""
        return [item.poi_id for _, _, item in self.all_items()]

    def to_doc(self) -> dict:
        return {
            "format": PLAN_FORMAT,
            "query_id": self.query_id,
            "days": [day.to_doc() for day in self.days],
        }


@dataclass(frozen=True)
class InformationContext:
    """A named set of catalog record ids handed to an agent as its input."""

    case_id: str
    level: ContextLevel
    record_ids: frozenset[str]

    def to_doc(self) -> dict:
        return {
            "format": CONTEXT_FORMAT,
            "case_id": self.case_id,
            "level": self.level.value,
            "record_ids": sorted(self.record_ids),
        }

    @staticmethod
    def from_doc(doc: Mapping[str, Any]) -> "InformationContext":
        return InformationContext(
            case_id=str(doc["case_id"]),
            level=ContextLevel(doc["level"]),
            record_ids=frozenset(str(r) for r in doc["record_ids"]),
        )


@dataclass(frozen=True)
class ToolCall:
    """A named tool invocation with ordered, uniquely named arguments."""

    tool_name: str
    arguments: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self) -> None:
        names = [name for name, _ in self.arguments]
        if len(names) != len(set(names)):
            raise ValueError("argument names must be unique")

    def argument(self, name: str, default: Any = None) -> Any:
        for key, val in self.arguments:
            if key == name:
                return val
        return default

    def to_doc(self) -> dict:
        return {
            "tool": self.tool_name,
            "arguments": [{"name": n, "value": v} for n, v in self.arguments],
        }

    @staticmethod
    def from_doc(doc: Mapping[str, Any]) -> "ToolCall":
        raw = doc.get("arguments", [])
        if isinstance(raw, Mapping):
            args = tuple((str(k), raw[k]) for k in raw)
        else:
            args = tuple((str(a["name"]), a.get("value")) for a in raw)
        return ToolCall(tool_name=str(doc["tool"]), arguments=args)


@dataclass(frozen=True)
class ErrorFinding:
    """One verification finding: what rule broke, and where when known.

    ``constraint`` holds the violated constraint expression for head-derived
    categories and ``None`` for structural ones; ``locus`` is a
    (day index, item index) pair when the finding points at a single item.
    """

    category: ErrorCategory
    constraint: Any = None
    locus: Optional[tuple[int, int]] = None

    def to_doc(self) -> dict:
        from .dsl import render  # local import to avoid a cycle

        doc: dict[str, Any] = {"category": self.category.value}
        if self.constraint is not None:
            doc["constraint"] = render(self.constraint)
        if self.locus is not None:
            doc["locus"] = list(self.locus)
        return doc


# ---------------------------------------------------------------------------
# schema validation and plan (de)serialization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchemaError:
    kind: str  # missing_field | wrong_type | bad_value | day_count_mismatch | invariant
    path: str
    message: str

    def to_doc(self) -> dict:
        return {"kind": self.kind, "path": self.path, "message": self.message}


@dataclass(frozen=True)
class SchemaErrorList:
    errors: tuple[SchemaError, ...]

    def to_doc(self) -> dict:
        return {"schema_errors": [e.to_doc() for e in self.errors]}


def _check_int(val: Any) -> bool:
    return isinstance(val, int) and not isinstance(val, bool)


def validate_schema(raw: Any, query: Optional[Query] = None) -> Union[Itinerary, SchemaErrorList]:
    """Turn an untrusted plan document into an Itinerary, or list every defect.

    Collects as many independent errors as it can instead of stopping at the
    first one; never raises on malformed input. When ``query`` is given the
    day count and the dates themselves must match the query's dates.
    """
    errors: list[SchemaError] = []
    if not isinstance(raw, Mapping):
        return SchemaErrorList((SchemaError("wrong_type", "$", "plan document must be an object"),))

    query_id = raw.get("query_id")
    if query_id is None:
        errors.append(SchemaError("missing_field", "$.query_id", "query_id is required"))
        query_id = ""
    elif not isinstance(query_id, str):
        errors.append(SchemaError("wrong_type", "$.query_id", "query_id must be a string"))
        query_id = str(query_id)

    raw_days = raw.get("days")
    if raw_days is None:
        errors.append(SchemaError("missing_field", "$.days", "days is required"))
        raw_days = []
    elif not isinstance(raw_days, Sequence) or isinstance(raw_days, (str, bytes)):
        errors.append(SchemaError("wrong_type", "$.days", "days must be an array"))
        raw_days = []

    if query is not None and len(raw_days) != query.days:
        errors.append(
            SchemaError(
                "day_count_mismatch",
                "$.days",
                f"plan has {len(raw_days)} days but the query spans {query.days}",
            )
        )

    days: list[DayPlan] = []
    for di, raw_day in enumerate(raw_days):
        path = f"$.days[{di}]"
        if not isinstance(raw_day, Mapping):
            errors.append(SchemaError("wrong_type", path, "day must be an object"))
            continue
        try:
            date = parse_iso_date(raw_day.get("date"))
        except (ValueError, TypeError):
            errors.append(SchemaError("bad_value", f"{path}.date", "date must be YYYY-MM-DD"))
            date = None
        if date is not None and query is not None and di < query.days and date != query.dates[di]:
            errors.append(
                SchemaError(
                    "bad_value",
                    f"{path}.date",
                    f"expected {query.dates[di].isoformat()}, got {date.isoformat()}",
                )
            )
        raw_items = raw_day.get("items")
        if raw_items is None:
            errors.append(SchemaError("missing_field", f"{path}.items", "items is required"))
            raw_items = []
        elif not isinstance(raw_items, Sequence) or isinstance(raw_items, (str, bytes)):
            errors.append(SchemaError("wrong_type", f"{path}.items", "items must be an array"))
            raw_items = []
        items: list[ActivityItem] = []
        for ii, raw_item in enumerate(raw_items):
            ipath = f"{path}.items[{ii}]"
            item = _validate_item(raw_item, ipath, errors)
            if item is not None:
                items.append(item)
        if date is None:
            continue
        try:
            days.append(DayPlan(date=date, items=tuple(items)))
        except ValueError as exc:
            errors.append(SchemaError("invariant", path, str(exc)))

    if errors:
        return SchemaErrorList(tuple(errors))
    return Itinerary(query_id=query_id, days=tuple(days))


def _validate_item(raw: Any, path: str, errors: list[SchemaError]) -> Optional[ActivityItem]:
    if not isinstance(raw, Mapping):
        errors.append(SchemaError("wrong_type", path, "item must be an object"))
        return None
    ok = True
    kind_raw = raw.get("kind")
    if kind_raw is None:
        errors.append(SchemaError("missing_field", f"{path}.kind", "kind is required"))
        ok = False
    else:
        try:
            kind = Kind(kind_raw)
        except ValueError:
            errors.append(SchemaError("bad_value", f"{path}.kind", f"unknown kind {kind_raw!r}"))
            ok = False
    poi_id = raw.get("poi_id")
    if poi_id is None or (isinstance(poi_id, str) and not poi_id):
        errors.append(SchemaError("missing_field", f"{path}.poi_id", "poi_id is required"))
        ok = False
    elif not isinstance(poi_id, str):
        errors.append(SchemaError("wrong_type", f"{path}.poi_id", "poi_id must be a string"))
        ok = False
    for name in ("unit_cost", "quantity"):
        val = raw.get(name)
        if val is None:
            errors.append(SchemaError("missing_field", f"{path}.{name}", f"{name} is required"))
            ok = False
        elif not _check_int(val):
            errors.append(SchemaError("wrong_type", f"{path}.{name}", f"{name} must be an integer"))
            ok = False
    for name in ("start", "end"):
        val = raw.get(name)
        if val is not None and not _check_int(val):
            errors.append(SchemaError("wrong_type", f"{path}.{name}", f"{name} must be an integer"))
            ok = False
    slot_raw = raw.get("meal_slot")
    slot: Optional[MealSlot] = None
    if slot_raw is not None:
        try:
            slot = MealSlot(slot_raw)
        except ValueError:
            errors.append(SchemaError("bad_value", f"{path}.meal_slot", f"unknown meal slot {slot_raw!r}"))
            ok = False
    if not ok:
        return None
    try:
        return ActivityItem(
            kind=kind,
            poi_id=poi_id,
            start=raw.get("start"),
            end=raw.get("end"),
            unit_cost=raw["unit_cost"],
            quantity=raw["quantity"],
            meal_slot=slot,
        )
    except ValueError as exc:
        errors.append(SchemaError("invariant", path, str(exc)))
        return None


def plan_from_doc(doc: Mapping[str, Any], query: Optional[Query] = None) -> Itinerary:
    """Strict decode for trusted plan documents; raises on any schema error."""
    result = validate_schema(doc, query)
    if isinstance(result, SchemaErrorList):
        first = result.errors[0]
        raise ValueError(f"invalid plan document: {first.path}: {first.message}")
    return result


def recompute_costs(itinerary: Itinerary, catalog: "PoiCatalog") -> tuple[Itinerary, tuple[str, ...]]:
    """Reset every unit cost to the catalog price and rebuild the total.

    Unresolvable poi ids get unit_cost 0 and are returned (deduplicated, in
    plan order) so the caller can report them. Idempotent.
    """
    unresolved: list[str] = []
    seen: set[str] = set()
    new_days: list[DayPlan] = []
    for day in itinerary.days:
        new_items = []
        for item in day.items:
            record = catalog.get(item.poi_id)
            if record is None:
                if item.poi_id not in seen:
                    seen.add(item.poi_id)
                    unresolved.append(item.poi_id)
                price = 0
            else:
                price = record.price
            new_items.append(
                ActivityItem(
                    kind=item.kind,
                    poi_id=item.poi_id,
                    start=item.start,
                    end=item.end,
                    unit_cost=price,
                    quantity=item.quantity,
                    meal_slot=item.meal_slot,
                )
            )
        new_days.append(DayPlan(date=day.date, items=tuple(new_items)))
    return Itinerary(query_id=itinerary.query_id, days=tuple(new_days)), tuple(unresolved)


__all__ = [
    "ActivityItem",
    "AttrValue",
    "CATALOG_FORMAT",
    "CONTEXT_FORMAT",
    "ContextLevel",
    "DayPlan",
    "ErrorCategory",
    "ErrorFinding",
    "InformationContext",
    "INTERCITY_KINDS",
    "Itinerary",
    "Kind",
    "MealSlot",
    "MINUTES_PER_DAY",
    "PLAN_FORMAT",
    "PoiRecord",
    "Profile",
    "Query",
    "SchemaError",
    "SchemaErrorList",
    "ToolCall",
    "TRANSIT_KINDS",
    "canonical_json",
    "parse_iso_date",
    "plan_from_doc",
    "recompute_costs",
    "validate_schema",
]
