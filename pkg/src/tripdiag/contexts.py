"""Oracle information contexts: what a plan-generation case gets to see.

Levels:

* ``minimal``    exactly the records the reference plan uses
* ``moderate``   minimal plus 10 distractors per category per visited city
* ``rich``       minimal plus 20 distractors per category per visited city
* ``correction`` the faulty plan's records plus the reference plan's records

Distractor categories are attraction, accommodation, and restaurant; the
visited cities are the query's destination cities. Distractors are drawn
without replacement from a pool of valid candidates (normally the POIs that
appear in some satisfying plan); the draw is a seeded permutation per
(city, category) cell and the rich draw extends the moderate one, so the
three levels are always nested. A pool too small for the requested count is
reported, never silently padded.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Optional

from .catalog import PoiCatalog
from .model import (
    ContextLevel,
    InformationContext,
    Itinerary,
    Kind,
    Query,
    canonical_json,
)

LEVEL_DISTRACTORS = {
    ContextLevel.MINIMAL: 0,
    ContextLevel.MODERATE: 10,
    ContextLevel.RICH: 20,
    ContextLevel.CORRECTION: 0,
}

DISTRACTOR_KINDS = (Kind.ATTRACTION, Kind.ACCOMMODATION, Kind.RESTAURANT)

TOKEN_ESTIMATE_DIVISOR = 4
TOKEN_WARN_THRESHOLD = 64_000


@dataclass(frozen=True)
class ContextSpec:
    level: ContextLevel
    distractors_per_category_per_city: int
    seed: int = 0

    def __post_init__(self) -> None:
        expected = LEVEL_DISTRACTORS[self.level]
        if self.distractors_per_category_per_city != expected:
            raise ValueError(
                f"{self.level.value} context takes exactly {expected} distractors "
                f"per category per city, got {self.distractors_per_category_per_city}"
            )

    @staticmethod
    def for_level(level: ContextLevel, seed: int = 0) -> "ContextSpec":
        return ContextSpec(
            level=level,
            distractors_per_category_per_city=LEVEL_DISTRACTORS[level],
            seed=seed,
        )


@dataclass(frozen=True)
class ContextBuild:
    """A built context plus the per-cell distractor accounting."""

    context: InformationContext
    requested_per_cell: int
    # (city, kind value) -> distractors actually added
    achieved: tuple[tuple[tuple[str, str], int], ...] = ()

    @property
    def insufficient(self) -> bool:
        return any(got < self.requested_per_cell for _, got in self.achieved)

    def shortfalls(self) -> dict[tuple[str, str], int]:
        return {
            cell: got for cell, got in self.achieved
            if got < self.requested_per_cell
        }


def _referenced_ids(plan: Itinerary, catalog: PoiCatalog) -> set[str]:
    return {pid for pid in plan.poi_ids() if pid in catalog}


def build(
    ref_plan: Itinerary,
    faulty_plan: Optional[Itinerary],
    catalog: PoiCatalog,
    spec: ContextSpec,
    *,
    query: Query,
    case_id: str,
    distractor_pool: Optional[Iterable[str]] = None,
) -> ContextBuild:
    """Assemble the record-id set for one case at one context level.

    ``distractor_pool`` restricts candidate distractors to the given ids
    (normally POIs seen in some satisfying plan, from the solver's
    enumeration); without it every in-city record of the category counts.
    The correction level requires ``faulty_plan`` and ignores distractors.
    """
    if spec.level is ContextLevel.CORRECTION:
        if faulty_plan is None:
            raise ValueError("correction context needs the faulty plan")
        ids = _referenced_ids(faulty_plan, catalog) | _referenced_ids(ref_plan, catalog)
        context = InformationContext(
            case_id=case_id, level=spec.level, record_ids=frozenset(ids)
        )
        return ContextBuild(context=context, requested_per_cell=0)

    base = _referenced_ids(ref_plan, catalog)
    ids = set(base)
    achieved: list[tuple[tuple[str, str], int]] = []
    wanted = spec.distractors_per_category_per_city
    if wanted:
        pool = frozenset(distractor_pool) if distractor_pool is not None else None
        for city in query.destinations:
            for kind in DISTRACTOR_KINDS:
                eligible = [
                    r.id for r in catalog.by_kind(kind, city)
                    if r.id not in base and (pool is None or r.id in pool)
                ]
                eligible.sort()
                # keyed by query, not case: all levels of one query share the
                # permutation, which is what makes minimal/moderate/rich nest
                rng = random.Random(f"{spec.seed}:{query.id}:{city}:{kind.value}")
                order = rng.sample(eligible, len(eligible))
                take = order[:wanted]
                ids.update(take)
                achieved.append(((city, kind.value), len(take)))
    context = InformationContext(
        case_id=case_id, level=spec.level, record_ids=frozenset(ids)
    )
    return ContextBuild(
        context=context,
        requested_per_cell=wanted,
        achieved=tuple(achieved),
    )


def render_context(context: InformationContext, catalog: PoiCatalog) -> dict:
    """The context as the JSON document an agent receives."""
    records = sorted(context.record_ids)
    return {
        "level": context.level.value,
        "records": [
            catalog.get(pid).to_doc() for pid in records if pid in catalog
        ],
    }


def token_estimate(context: InformationContext, catalog: PoiCatalog) -> int:
    """Rough context size: canonical JSON characters over a fixed divisor.

    Advisory only; compare against TOKEN_WARN_THRESHOLD for a size warning.
    """
    total = 0
    for pid in sorted(context.record_ids):
        record = catalog.get(pid)
        if record is not None:
            total += len(canonical_json(record.to_doc()))
    return total // TOKEN_ESTIMATE_DIVISOR


__all__ = [
    "ContextBuild",
    "ContextSpec",
    "DISTRACTOR_KINDS",
    "LEVEL_DISTRACTORS",
    "TOKEN_ESTIMATE_DIVISOR",
    "TOKEN_WARN_THRESHOLD",
    "build",
    "render_context",
    "token_estimate",
]
