"""Deterministic synthetic catalogs, queries, and gold constraint sets.

Everything is a pure function of the GenSpec. Records get readable names
from fixed word lists and sequential per-kind ids, so sort order is stable
and fixtures stay diffable. Every emitted query is solver-checked: its gold
constraint set is feasible against the generated catalog, and the budget
constraint (when drawn) is set at 1.4x the cheapest satisfying plan found
for the base constraints, which leaves distractor room both below and above.

Queries are emitted together with their gold constraints (as canonical DSL
strings) in one JSON document, the shape the harness ingests. A mapped CSV
ingestion path covers users who hold benchmark-shaped data files.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .catalog import PoiCatalog
from .dsl import parse, render
from .model import Kind, PoiRecord, Profile, Query, canonical_json
from .sandbox import parse_clock
from .solver import SolveRequest, solve

QUERIES_FORMAT = 1

_CITY_NAMES = (
    "Arden", "Brookfield", "Caldera", "Dunmore", "Eastvale",
    "Foxglove", "Glenhaven", "Harborview", "Ironwood", "Juniper",
    "Kestrel", "Larkspur", "Midvale", "Northgate", "Oakhollow",
)
_PLACE_ADJECTIVES = (
    "Old", "Granite", "Willow", "Copper", "Silver", "Harbor", "Garden",
    "Sunset", "Cedar", "Royal", "Hidden", "Golden", "Misty", "Stone",
)
_ATTRACTION_NOUNS = ("Fort", "Museum", "Gardens", "Tower", "Falls", "Market", "Pier", "Abbey")
_LODGING_NOUNS = ("Inn", "Hotel", "Lodge", "Suites", "Hostel", "House")
_RESTAURANT_NOUNS = ("Kitchen", "Bistro", "Diner", "Table", "Grill", "Cafe", "Cantina")
_EVENT_NOUNS = ("Festival", "Fair", "Concert", "Parade", "Regatta")

ROOM_TYPES = ("single", "double", "shared", "entire home")
HOUSE_RULES = ("no smoking", "no pets", "no parties", "quiet hours")
CUISINES = ("seafood", "italian", "chinese", "mexican", "indian", "bbq", "vegan", "bakery")
INNERCITY_MODES = ("walk", "taxi", "metro")

DEFAULT_PRICE_RANGES: Mapping[str, tuple[int, int]] = {
    "accommodation": (4000, 20000),
    "restaurant": (800, 6000),
    "attraction": (0, 4000),
    "event": (1000, 5000),
    "flight": (6000, 40000),
    "train": (3000, 15000),
    "innercity": (200, 2000),
}

BUDGET_HEADROOM = 1.4  # gold budget = headroom x cheapest base-plan cost


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    cities: int = 3
    accommodations_per_city: int = 6
    restaurants_per_city: int = 8
    attractions_per_city: int = 8
    events_per_city: int = 2
    flights_per_pair_per_day: int = 2
    trains_per_pair: int = 1
    innercity_legs: bool = True
    price_ranges: Mapping[str, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_PRICE_RANGES)
    )
    rating_range: tuple[int, int] = (30, 50)
    date_start: dt.date = dt.date(2026, 5, 1)
    date_days: int = 6
    queries: int = 8

    def __post_init__(self) -> None:
        if self.cities < 2:
            raise ValueError("need at least 2 cities (an origin and a destination)")
        for name in (
            "accommodations_per_city", "restaurants_per_city", "attractions_per_city",
            "flights_per_pair_per_day",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.events_per_city < 0 or self.trains_per_pair < 0:
            raise ValueError("per-kind counts must be non-negative")
        for key, (lo, hi) in self.price_ranges.items():
            if lo < 0 or hi < lo:
                raise ValueError(f"bad price range for {key}: ({lo}, {hi})")
        lo, hi = self.rating_range
        if not (0 <= lo <= hi <= 50):
            raise ValueError("rating range must sit inside [0, 50] tenths")
        if self.date_days < 2:
            raise ValueError("date window must span at least 2 days")
        if self.queries < 1:
            raise ValueError("queries must be >= 1")


@dataclass(frozen=True)
class AnnotatedQuery:
    """A query plus its gold constraint set, as canonical DSL strings."""

    query: Query
    constraints: tuple[str, ...]

    def parsed(self) -> tuple:
        return tuple(parse(text) for text in self.constraints)

    def to_doc(self) -> dict:
        return {"query": self.query.to_doc(), "constraints": list(self.constraints)}

    @staticmethod
    def from_doc(doc: Mapping) -> "AnnotatedQuery":
        return AnnotatedQuery(
            query=Query.from_doc(doc["query"]),
            constraints=tuple(str(c) for c in doc.get("constraints", ())),
        )


class _Namer:
    """Unique readable names off fixed word lists, deterministic per kind."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set()

    def pick(self, nouns: Sequence[str]) -> str:
        for _ in range(64):
            name = f"{self.rng.choice(_PLACE_ADJECTIVES)} {self.rng.choice(nouns)}"
            if name not in self.used:
                self.used.add(name)
                return name
        # word lists exhausted: disambiguate with a counter
        base = f"{self.rng.choice(_PLACE_ADJECTIVES)} {self.rng.choice(nouns)}"
        k = 2
        while f"{base} {k}" in self.used:
            k += 1
        name = f"{base} {k}"
        self.used.add(name)
        return name


def _price(rng: random.Random, spec: GenSpec, key: str) -> int:
    lo, hi = spec.price_ranges.get(key, DEFAULT_PRICE_RANGES[key])
    return rng.randint(lo, hi)


def _rating(rng: random.Random, spec: GenSpec) -> int:
    lo, hi = spec.rating_range
    return rng.randint(lo, hi)


def build_catalog(spec: GenSpec) -> PoiCatalog:
    """The synthetic catalog for a spec; a pure function of the spec."""
    rng = random.Random(f"catalog:{spec.seed}")
    namer = _Namer(rng)
    cities = [
        _CITY_NAMES[i] if i < len(_CITY_NAMES) else f"{_CITY_NAMES[i % len(_CITY_NAMES)]} {i}"
        for i in range(spec.cities)
    ]
    records: list[PoiRecord] = []
    counters = {kind: 0 for kind in Kind}

    def next_id(kind: Kind, prefix: str) -> str:
        counters[kind] += 1
        return f"{prefix}-{counters[kind]:04d}"

    dates = [
        (spec.date_start + dt.timedelta(days=i)).isoformat()
        for i in range(spec.date_days)
    ]

    for city in cities:
        for _ in range(spec.accommodations_per_city):
            rules = frozenset(rng.sample(HOUSE_RULES, rng.randint(0, 2)))
            attrs = {
                "price": _price(rng, spec, "accommodation"),
                "rating": _rating(rng, spec),
                "room_type": rng.choice(ROOM_TYPES),
                "max_occupancy": rng.randint(1, 4),
            }
            if rules:
                attrs["house_rules"] = rules
            records.append(PoiRecord(
                id=next_id(Kind.ACCOMMODATION, "acc"), kind=Kind.ACCOMMODATION,
                city=city, name=namer.pick(_LODGING_NOUNS), attributes=attrs,
            ))
        for _ in range(spec.restaurants_per_city):
            records.append(PoiRecord(
                id=next_id(Kind.RESTAURANT, "res"), kind=Kind.RESTAURANT,
                city=city, name=namer.pick(_RESTAURANT_NOUNS),
                attributes={
                    "price": _price(rng, spec, "restaurant"),
                    "rating": _rating(rng, spec),
                    "cuisines": frozenset(rng.sample(CUISINES, rng.randint(1, 2))),
                },
            ))
        for _ in range(spec.attractions_per_city):
            records.append(PoiRecord(
                id=next_id(Kind.ATTRACTION, "att"), kind=Kind.ATTRACTION,
                city=city, name=namer.pick(_ATTRACTION_NOUNS),
                attributes={
                    "price": _price(rng, spec, "attraction"),
                    "rating": _rating(rng, spec),
                },
            ))
        for _ in range(spec.events_per_city):
            records.append(PoiRecord(
                id=next_id(Kind.EVENT, "evt"), kind=Kind.EVENT,
                city=city, name=namer.pick(_EVENT_NOUNS),
                attributes={
                    "price": _price(rng, spec, "event"),
                    "rating": _rating(rng, spec),
                    "date": rng.choice(dates),
                },
            ))

    for origin in cities:
        for destination in cities:
            if origin == destination:
                continue
            for date in dates:
                for _ in range(spec.flights_per_pair_per_day):
                    depart = rng.randint(6 * 60, 20 * 60)
                    duration = rng.randint(60, 240)
                    arrive = min(depart + duration, 23 * 60 + 59)
                    records.append(PoiRecord(
                        id=next_id(Kind.FLIGHT, "fl"), kind=Kind.FLIGHT,
                        city=origin,
                        name=f"{origin[:2].upper()}{destination[:2].upper()} {counters[Kind.FLIGHT]:03d}",
                        attributes={
                            "price": _price(rng, spec, "flight"),
                            "origin": origin,
                            "destination": destination,
                            "date": date,
                            "depart": depart,
                            "arrive": arrive,
                            "duration": arrive - depart,
                            "mode": "flight",
                        },
                    ))
            for _ in range(spec.trains_per_pair):
                depart = rng.randint(7 * 60, 18 * 60)
                duration = rng.randint(90, 300)
                arrive = min(depart + duration, 23 * 60 + 59)
                records.append(PoiRecord(
                    id=next_id(Kind.INTERCITY_TRANSIT, "ict"), kind=Kind.INTERCITY_TRANSIT,
                    city=origin,
                    name=f"{origin[:2].upper()}{destination[:2].upper()} rail {counters[Kind.INTERCITY_TRANSIT]:03d}",
                    attributes={
                        "price": _price(rng, spec, "train"),
                        "origin": origin,
                        "destination": destination,
                        "depart": depart,
                        "arrive": arrive,
                        "duration": arrive - depart,
                        "mode": "train",
                    },
                ))

    if spec.innercity_legs:
        by_city_attractions = {
            city: [r for r in records if r.kind is Kind.ATTRACTION and r.city == city]
            for city in cities
        }
        by_city_restaurants = {
            city: [r for r in records if r.kind is Kind.RESTAURANT and r.city == city]
            for city in cities
        }
        for city in cities:
            for restaurant in by_city_restaurants[city]:
                for _ in range(rng.randint(1, 2)):
                    anchor = rng.choice(by_city_attractions[city])
                    distance = rng.randint(200, 8000)
                    records.append(PoiRecord(
                        id=next_id(Kind.INNERCITY_TRANSIT, "leg"), kind=Kind.INNERCITY_TRANSIT,
                        city=city,
                        name=f"{anchor.name} to {restaurant.name}",
                        attributes={
                            "price": _price(rng, spec, "innercity"),
                            "origin": anchor.name,
                            "destination": restaurant.name,
                            "mode": rng.choice(INNERCITY_MODES),
                            "distance_m": distance,
                            "duration": max(5, distance // 80),
                        },
                    ))

    return PoiCatalog.from_records(records)


# ---------------------------------------------------------------------------
# queries and gold constraints
# ---------------------------------------------------------------------------

_PROFILE_CYCLE = (Profile.TP_LIKE, Profile.TC_LIKE, Profile.CT_LIKE)


def _money_major(minor: int) -> str:
    if minor % 100 == 0:
        return str(minor // 100)
    return f"{minor // 100}.{minor % 100:02d}"


def _tenths(value: int) -> str:
    return f"{value // 10}.{value % 10}"


@dataclass
class _ExtraDraw:
    text: str          # canonical constraint string
    clause: str        # natural-language sentence for the query text
    head: str          # accessor head, for distinctness bookkeeping


def _draw_extras(
    rng: random.Random,
    catalog: PoiCatalog,
    query: Query,
    base_cost: int,
    count: int,
) -> list[_ExtraDraw]:
    """Up to ``count`` extra constraints with pairwise distinct heads, each
    individually satisfiable by construction (drawn from in-city records)."""
    dest_accommodations = [
        r for city in query.destinations for r in catalog.by_kind(Kind.ACCOMMODATION, city)
    ]
    dest_restaurants = [
        r for city in query.destinations for r in catalog.by_kind(Kind.RESTAURANT, city)
    ]
    dest_attractions = [
        r for city in query.destinations for r in catalog.by_kind(Kind.ATTRACTION, city)
    ]

    draws: list[_ExtraDraw] = []

    budget_minor = int(math.ceil(base_cost * BUDGET_HEADROOM / 100.0)) * 100
    budget_major = _money_major(budget_minor)
    draws.append(_ExtraDraw(
        text=f"total_budget(plan) <= {budget_major}",
        clause=f"Keep the total cost under ${budget_major}.",
        head="total_budget",
    ))

    cuisines = sorted({c for r in dest_restaurants for c in r.attributes.get("cuisines", ())})
    if cuisines:
        cuisine = rng.choice(cuisines)
        draws.append(_ExtraDraw(
            text=f"'{cuisine}' in cuisines(plan)",
            clause=f"At least one dinner should be {cuisine}.",
            head="cuisines",
        ))

    room_types = sorted({
        r.attributes.get("room_type") for r in dest_accommodations
        if isinstance(r.attributes.get("room_type"), str)
    })
    if room_types:
        room = rng.choice(room_types)
        draws.append(_ExtraDraw(
            text=f"'{room}' in room_types(plan)",
            clause=f"We want a {room} room somewhere along the way.",
            head="room_types",
        ))

    rules = sorted({
        rule for r in dest_accommodations
        for rule in r.attributes.get("house_rules", frozenset())
    })
    if rules:
        rule = rng.choice(rules)
        draws.append(_ExtraDraw(
            text=f"'{rule}' in house_rules(plan)",
            clause=f"A place with a {rule} rule would suit us.",
            head="house_rules",
        ))

    draws.append(_ExtraDraw(
        text="'train' not in transport_modes(plan)",
        clause="Please avoid trains.",
        head="transport_modes",
    ))

    if dest_attractions:
        target = rng.choice(dest_attractions)
        rating = target.attributes.get("rating")
        if isinstance(rating, int) and rating >= 2:
            threshold = _tenths(max(0, rating - 2))
            draws.append(_ExtraDraw(
                text=f"rating_of(plan, '{target.name}') >= {threshold}",
                clause=f"Visit {target.name}; it should be rated at least {threshold}.",
                head="rating_of",
            ))
        else:
            draws.append(_ExtraDraw(
                text=f"poi_visited(plan, '{target.name}')",
                clause=f"Make sure {target.name} is on the itinerary.",
                head="poi_visited",
            ))

    rng.shuffle(draws)
    picked: list[_ExtraDraw] = []
    seen_heads: set[str] = set()
    for draw in draws:
        if draw.head in seen_heads:
            continue
        picked.append(draw)
        seen_heads.add(draw.head)
        if len(picked) == count:
            break
    return picked


def _query_text(query: Query, clauses: Sequence[str]) -> str:
    cities = " and ".join(query.destinations)
    people = "1 person" if query.people == 1 else f"{query.people} people"
    head = (
        f"Plan a {query.days}-day trip from {query.origin} to {cities} "
        f"for {people}, {query.dates[0].isoformat()} to {query.dates[-1].isoformat()}."
    )
    return " ".join([head, *clauses])


def generate(spec: GenSpec) -> tuple[PoiCatalog, list[AnnotatedQuery]]:
    """Catalog plus solver-checked annotated queries, all from one seed."""
    catalog = build_catalog(spec)
    rng = random.Random(f"queries:{spec.seed}")
    cities = sorted(catalog.cities())
    out: list[AnnotatedQuery] = []
    attempts = 0
    while len(out) < spec.queries and attempts < spec.queries * 20:
        attempts += 1
        idx = len(out)
        days = rng.randint(2, min(4, spec.date_days))
        two_dest_possible = days >= 3 and len(cities) >= 3
        n_dest = 2 if two_dest_possible and rng.random() < 0.5 else 1
        picked = rng.sample(cities, n_dest + 1)
        origin, destinations = picked[0], tuple(picked[1:])
        offset = rng.randint(0, spec.date_days - days)
        start = spec.date_start + dt.timedelta(days=offset)
        dates = tuple(start + dt.timedelta(days=i) for i in range(days))
        people = rng.randint(1, 4)
        query = Query(
            id=f"q{idx + 1:04d}",
            text="",
            origin=origin,
            destinations=destinations,
            dates=dates,
            people=people,
            profile=_PROFILE_CYCLE[idx % len(_PROFILE_CYCLE)],
        )
        base_texts = [
            f"days(plan) == {days}",
            f"people_number(plan) == {people}",
        ]
        base = tuple(parse(t) for t in base_texts)
        outcome = solve(
            SolveRequest(query=query, constraints=base, search_budget=100_000),
            catalog,
        )
        if outcome.status != "feasible":
            continue
        extra_count = rng.choice((1, 2, 3, 3, 3))
        extras = _draw_extras(rng, catalog, query, outcome.plan.total_cost, extra_count)
        texts = base_texts + [d.text for d in extras]
        constraints = tuple(parse(t) for t in texts)
        check = solve(
            SolveRequest(query=query, constraints=constraints, search_budget=200_000),
            catalog,
        )
        if check.status != "feasible":
            # drop extras until feasible; the base set always is
            while extras:
                extras.pop()
                texts = base_texts + [d.text for d in extras]
                constraints = tuple(parse(t) for t in texts)
                check = solve(
                    SolveRequest(query=query, constraints=constraints, search_budget=200_000),
                    catalog,
                )
                if check.status == "feasible":
                    break
            if check.status != "feasible":
                continue
        query = Query(
            id=query.id,
            text=_query_text(query, [d.clause for d in extras]),
            origin=query.origin,
            destinations=query.destinations,
            dates=query.dates,
            people=query.people,
            profile=query.profile,
        )
        canonical = tuple(render(parse(t)) for t in texts)
        out.append(AnnotatedQuery(query=query, constraints=canonical))
    if len(out) < spec.queries:
        raise RuntimeError(
            f"could only assemble {len(out)} of {spec.queries} feasible queries; "
            "the spec's catalog is too sparse"
        )
    return catalog, out


# ---------------------------------------------------------------------------
# queries file round-trip
# ---------------------------------------------------------------------------


def queries_to_doc(annotated: Sequence[AnnotatedQuery]) -> dict:
    return {
        "format": QUERIES_FORMAT,
        "queries": [a.to_doc() for a in annotated],
    }


def save_queries(path: Path, annotated: Sequence[AnnotatedQuery]) -> None:
    path = Path(path)
    path.write_text(canonical_json(queries_to_doc(annotated)) + "\n", encoding="utf-8")


def load_queries(path: Path) -> list[AnnotatedQuery]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or doc.get("format") != QUERIES_FORMAT:
        raise ValueError(f"{path}: not a queries document (format {QUERIES_FORMAT})")
    return [AnnotatedQuery.from_doc(entry) for entry in doc.get("queries", [])]


# ---------------------------------------------------------------------------
# CSV ingestion for benchmark-shaped data
# ---------------------------------------------------------------------------

#: ingestion mapping document:
#: {"kind": "...", "id_prefix": "...", "columns": {field: csv column},
#:  "scales": {field: multiplier}, "constants": {field: value}}
#: fields: city, name, price, rating, room_type, house_rules, max_occupancy,
#: cuisines, mode, origin, destination, date, depart, arrive, duration,
#: distance_m. List-valued fields split on ";" or ",".

_LIST_FIELDS = {"house_rules", "cuisines"}
_INT_FIELDS = {"price", "rating", "max_occupancy", "depart", "arrive", "duration", "distance_m"}


def ingest_csv(csv_path: Path, mapping: Mapping) -> list[PoiRecord]:
    """PoiRecords from one benchmark-shaped CSV plus a column mapping."""
    kind = Kind(mapping["kind"])
    columns: Mapping[str, str] = mapping.get("columns", {})
    scales: Mapping[str, float] = mapping.get("scales", {})
    constants: Mapping[str, object] = mapping.get("constants", {})
    prefix = str(mapping.get("id_prefix", kind.value[:3]))
    records: list[PoiRecord] = []
    with open(csv_path, newline="", encoding="utf-8") as handle:
        for i, row in enumerate(csv.DictReader(handle), start=1):
            fields: dict[str, object] = dict(constants)
            for field_name, column in columns.items():
                if column not in row or row[column] in ("", None):
                    continue
                fields[field_name] = row[column]
            city = str(fields.pop("city", "")).strip()
            name = str(fields.pop("name", "")).strip() or f"{prefix}-{i}"
            attrs: dict = {}
            for field_name, raw in fields.items():
                if field_name in _LIST_FIELDS:
                    parts = [
                        p.strip() for p in str(raw).replace(";", ",").split(",") if p.strip()
                    ]
                    if parts:
                        attrs[field_name] = frozenset(parts)
                elif field_name in _INT_FIELDS:
                    text = str(raw).strip()
                    if field_name in ("depart", "arrive") and ":" in text:
                        clock = parse_clock(text)
                        if clock is None:
                            raise ValueError(f"{csv_path}:{i}: bad time {text!r}")
                        attrs[field_name] = clock
                        continue
                    value = float(text) * float(scales.get(field_name, 1))
                    attrs[field_name] = int(round(value))
                else:
                    attrs[field_name] = str(raw).strip()
            if not city:
                raise ValueError(f"{csv_path}:{i}: no city value")
            records.append(PoiRecord(
                id=f"{prefix}-{i:05d}", kind=kind, city=city, name=name, attributes=attrs,
            ))
    return records


def ingest_catalog(specs: Iterable[tuple[Path, Mapping]]) -> PoiCatalog:
    """A catalog from several (csv path, mapping) pairs."""
    records: list[PoiRecord] = []
    for csv_path, mapping in specs:
        records.extend(ingest_csv(csv_path, mapping))
    return PoiCatalog.from_records(records)


__all__ = [
    "AnnotatedQuery",
    "BUDGET_HEADROOM",
    "CUISINES",
    "DEFAULT_PRICE_RANGES",
    "GenSpec",
    "HOUSE_RULES",
    "INNERCITY_MODES",
    "QUERIES_FORMAT",
    "ROOM_TYPES",
    "build_catalog",
    "generate",
    "ingest_catalog",
    "ingest_csv",
    "load_queries",
    "queries_to_doc",
    "save_queries",
]
