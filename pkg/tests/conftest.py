"""Shared fixtures: a small handcrafted catalog and queries over it.

The catalog covers three cities with enough variety to exercise every
record kind, yet few enough candidates that tests can reason about the
whole search space by hand.
"""

from __future__ import annotations

import datetime as dt

import pytest

from tripdiag.catalog import PoiCatalog
from tripdiag.model import Kind, PoiRecord, Profile, Query

D1 = dt.date(2026, 5, 1)
D2 = dt.date(2026, 5, 2)
D3 = dt.date(2026, 5, 3)


def _rec(rid, kind, city, name, **attrs):
    for key in ("house_rules", "cuisines"):
        if key in attrs and not isinstance(attrs[key], frozenset):
            attrs[key] = frozenset(attrs[key])
    return PoiRecord(id=rid, kind=kind, city=city, name=name, attributes=attrs)


def build_tiny_catalog() -> PoiCatalog:
    records = [
        # outbound flights: the 10000/30000 pair used by budget examples
        _rec("fl-ab-1", Kind.FLIGHT, "Arden", "AB Early", price=10000, mode="flight",
             origin="Arden", destination="Brightwater", date=D1.isoformat(),
             depart=8 * 60, arrive=10 * 60),
        _rec("fl-ab-2", Kind.FLIGHT, "Arden", "AB Late", price=30000, mode="flight",
             origin="Arden", destination="Brightwater", date=D1.isoformat(),
             depart=9 * 60, arrive=11 * 60),
        _rec("fl-ba-1", Kind.FLIGHT, "Brightwater", "BA Noon", price=12000, mode="flight",
             origin="Brightwater", destination="Arden", date=D3.isoformat(),
             depart=12 * 60, arrive=14 * 60),
        _rec("fl-ba-2", Kind.FLIGHT, "Brightwater", "BA Dusk", price=26000, mode="flight",
             origin="Brightwater", destination="Arden", date=D3.isoformat(),
             depart=18 * 60, arrive=20 * 60),
        # undated trains, both directions plus the Caldera legs
        _rec("ict-ab", Kind.INTERCITY_TRANSIT, "Arden", "Coast Line", price=6000,
             mode="train", origin="Arden", destination="Brightwater",
             depart=7 * 60, arrive=11 * 60),
        _rec("ict-ba", Kind.INTERCITY_TRANSIT, "Brightwater", "Coast Line Back",
             price=6000, mode="train", origin="Brightwater", destination="Arden",
             depart=15 * 60, arrive=19 * 60),
        _rec("ict-bc", Kind.INTERCITY_TRANSIT, "Brightwater", "Hill Line", price=5000,
             mode="train", origin="Brightwater", destination="Caldera",
             depart=9 * 60, arrive=12 * 60),
        _rec("ict-ca", Kind.INTERCITY_TRANSIT, "Caldera", "Valley Line", price=5000,
             mode="train", origin="Caldera", destination="Arden",
             depart=16 * 60, arrive=21 * 60),
        # Brightwater lodging
        _rec("acc-b1", Kind.ACCOMMODATION, "Brightwater", "Harbor Rest", price=8000,
             rating=42, room_type="entire home", max_occupancy=2,
             house_rules=frozenset()),
        _rec("acc-b2", Kind.ACCOMMODATION, "Brightwater", "Shared Loft", price=3000,
             rating=35, room_type="shared room", max_occupancy=1,
             house_rules={"no pets"}),
        # Brightwater food
        _rec("res-b1", Kind.RESTAURANT, "Brightwater", "Copper Kettle", price=2000,
             rating=44, cuisines={"italian"}),
        _rec("res-b2", Kind.RESTAURANT, "Brightwater", "Night Market", price=1500,
             rating=38, cuisines={"thai", "street food"}),
        # Brightwater sights: three, so a 3-day stay has distinct attractions
        _rec("att-b1", Kind.ATTRACTION, "Brightwater", "Tide Museum", price=1200, rating=46),
        _rec("att-b2", Kind.ATTRACTION, "Brightwater", "Gull Tower", price=800, rating=40),
        _rec("att-b3", Kind.ATTRACTION, "Brightwater", "Sea Arch", price=0, rating=43),
        _rec("evt-b1", Kind.EVENT, "Brightwater", "Lantern Fair", price=2500,
             rating=41, date=D2.isoformat()),
        # innercity hops for the nearby/goto tools
        _rec("leg-b1", Kind.INNERCITY_TRANSIT, "Brightwater", "Walk to Kettle",
             price=0, mode="walk", origin="Tide Museum", destination="Copper Kettle",
             distance_m=900, duration=12),
        _rec("leg-b2", Kind.INNERCITY_TRANSIT, "Brightwater", "Taxi to Market",
             price=700, mode="taxi", origin="Tide Museum", destination="Night Market",
             distance_m=2500, duration=9),
        # Caldera: a lean second destination
        _rec("acc-c1", Kind.ACCOMMODATION, "Caldera", "Crater House", price=9000,
             rating=47, room_type="entire home", max_occupancy=4,
             house_rules={"no parties"}),
        _rec("res-c1", Kind.RESTAURANT, "Caldera", "Ashline Grill", price=2600,
             rating=45, cuisines={"bbq"}),
        _rec("att-c1", Kind.ATTRACTION, "Caldera", "Rim Walk", price=400, rating=48),
        _rec("att-c2", Kind.ATTRACTION, "Caldera", "Lava Tube", price=1500, rating=44),
    ]
    return PoiCatalog.from_records(records)


@pytest.fixture(scope="session")
def tiny_catalog() -> PoiCatalog:
    return build_tiny_catalog()


def make_query(
    qid: str = "qtest",
    *,
    days: int = 3,
    destinations: tuple[str, ...] = ("Brightwater",),
    people: int = 2,
    profile: Profile = Profile.TP_LIKE,
) -> Query:
    dates = tuple(D1 + dt.timedelta(days=i) for i in range(days))
    return Query(
        id=qid,
        text=f"{people} people, {days} days in {' and '.join(destinations)}.",
        origin="Arden",
        destinations=destinations,
        dates=dates,
        people=people,
        profile=profile,
    )


@pytest.fixture
def q_bw() -> Query:
    return make_query()


@pytest.fixture
def q_two_dest() -> Query:
    return make_query("qtwo", destinations=("Brightwater", "Caldera"), profile=Profile.TC_LIKE)
