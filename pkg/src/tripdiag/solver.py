"""Feasibility search, exhaustive enumeration, and plan verification.

Plan shape
----------
A plan visits the query's destination cities in the given order, splitting
the trip days into one contiguous block per city (every block gets at least
one day). Day 1 opens with the leg from the origin to the first city; each
later block opens with the connecting leg on its first day; the last day
closes with the return leg to the origin. Every day carries one dinner
restaurant and one attraction in the current city; attractions never repeat
across the trip. Every night (each day except the trip's last) carries a
lodging item; the accommodation is chosen once per city block. Transit,
restaurant and attraction items are booked per person; lodging quantity is
``ceil(people / max_occupancy)`` rooms per night.

Search
------
``solve`` runs a depth-first search over (day-structure skeleton, then
transit legs, then lodgings, then meals, then attractions) with candidates
ordered cheapest-first and two sound prunings: budget bound propagation from
total-cost constraints, and candidate pre-filtering from universal
constraints (a record that falsifies a ``forall`` body or a banned-tag
membership can never appear in a satisfying plan). Constraints whose value
is already fixed by the bound slots are checked at stage boundaries, the
full constraint set again at every leaf.

``enumerate_all`` deliberately shares none of that pruning: it walks the
raw structural space, evaluates every constraint at each leaf, and is the
brute-force oracle that the search is validated against.

Violation synthesis folds the chosen constraint subset in negated form into
the same search, so a returned plan falsifies exactly that subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

from .catalog import PoiCatalog
from .dsl import ast as dast
from .dsl.canonical import canonicalize, negate
from .dsl.evaluate import evaluate_many
from .model import (
    ActivityItem,
    DayPlan,
    ErrorCategory,
    ErrorFinding,
    Itinerary,
    Kind,
    MealSlot,
    PoiRecord,
    Query,
    TRANSIT_KINDS,
)

DEFAULT_SEARCH_BUDGET = 500_000

_HEAD_CATEGORY = {
    dast.Head.DAYS: ErrorCategory.DAYS,
    dast.Head.PEOPLE_NUMBER: ErrorCategory.PEOPLE_NUMBER,
    dast.Head.TOTAL_BUDGET: ErrorCategory.TOTAL_BUDGET,
    dast.Head.COST_OF: ErrorCategory.COST_OF,
    dast.Head.ROOM_TYPES: ErrorCategory.ROOM_TYPE,
    dast.Head.HOUSE_RULES: ErrorCategory.HOUSE_RULE,
    dast.Head.TRANSPORT_MODES: ErrorCategory.TRANSPORT_MODE,
    dast.Head.CUISINES: ErrorCategory.CUISINE,
    dast.Head.VISITED_CITIES: ErrorCategory.VISITED_CITY,
    dast.Head.RATING_OF: ErrorCategory.RATING,
    dast.Head.POI_VISITED: ErrorCategory.POI_VISITED,
}


def category_of(expr: dast.ConstraintExpr) -> ErrorCategory:
    """Violation category for a constraint: its leading accessor head.

    Degenerate constraints that reference no plan accessor (literal-folded
    leftovers) are reported as schema_error.
    """
    head = dast.head_of(expr)
    if head is None:
        return ErrorCategory.SCHEMA_ERROR
    return _HEAD_CATEGORY[head]


@dataclass(frozen=True)
class SolveRequest:
    query: Query
    constraints: tuple[dast.ConstraintExpr, ...]
    neg_subset: frozenset[int] = frozenset()
    search_budget: int = DEFAULT_SEARCH_BUDGET
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "neg_subset", frozenset(self.neg_subset))
        if self.search_budget <= 0:
            raise ValueError("search_budget must be positive")
        bad = [i for i in self.neg_subset if not 0 <= i < len(self.constraints)]
        if bad:
            raise ValueError(f"neg_subset indices out of range: {sorted(bad)}")

    def effective_constraints(self) -> tuple[dast.ConstraintExpr, ...]:
        """The constraint set actually searched: the chosen subset negated."""
        return tuple(
            negate(c) if i in self.neg_subset else c
            for i, c in enumerate(self.constraints)
        )


@dataclass(frozen=True)
class SolveOutcome:
    status: str  # feasible | infeasible | budget_exhausted
    plan: Optional[Itinerary]
    nodes_explored: int
    certificate: str = ""

    STATUSES = ("feasible", "infeasible", "budget_exhausted")

    def __post_init__(self) -> None:
        assert self.status in self.STATUSES
        assert (self.plan is not None) == (self.status == "feasible")


@dataclass(frozen=True)
class EnumerationResult:
    """Every satisfying plan plus the POI pool they draw from."""

    plans: tuple[Itinerary, ...]
    poi_ids: frozenset[str]
    leaves_visited: int


class EnumerationCapExceeded(Exception):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"structural plan space exceeds cap of {cap}")


class _OutOfBudget(Exception):
    pass


# ---------------------------------------------------------------------------
# plan skeletons and slots
# ---------------------------------------------------------------------------

# DFS stages; constraints are re-checked as soon as their stage completes.
_STAGE_NONE = 0       # fixed by the query alone
_STAGE_TRANSIT = 1
_STAGE_LODGING = 2
_STAGE_MEALS = 3
_STAGE_ATTRACTIONS = 4

_KIND_STAGE = {
    Kind.FLIGHT: _STAGE_TRANSIT,
    Kind.INTERCITY_TRANSIT: _STAGE_TRANSIT,
    Kind.ACCOMMODATION: _STAGE_LODGING,
    Kind.RESTAURANT: _STAGE_MEALS,
    Kind.ATTRACTION: _STAGE_ATTRACTIONS,
    # never placed in a plan, so their aggregates are fixed from the start
    Kind.EVENT: _STAGE_NONE,
    Kind.INNERCITY_TRANSIT: _STAGE_NONE,
}


@dataclass(frozen=True)
class _Slot:
    stage: int
    day: int                     # leg / meal / attraction day; first night for lodging
    city: str                    # destination city (legs: arrival side)
    leg: Optional[tuple[str, str, str]] = None   # (origin, destination, date)
    is_return: bool = False                      # the closing leg back to the origin
    nights: tuple[int, ...] = ()                 # lodging slots only


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Ordered splits of `total` days into `parts` positive blocks."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _skeleton_slots(query: Query, skeleton: tuple[int, ...]) -> list[_Slot]:
    dates = [d.isoformat() for d in query.dates]
    day_city: list[str] = []
    block_start: list[int] = []
    day = 0
    for block_len, city in zip(skeleton, query.destinations):
        block_start.append(day)
        day_city.extend([city] * block_len)
        day += block_len
    last = len(dates) - 1

    slots: list[_Slot] = []
    legs: list[tuple[int, str, str, bool]] = [(0, query.origin, query.destinations[0], False)]
    for j in range(1, len(query.destinations)):
        legs.append((block_start[j], query.destinations[j - 1], query.destinations[j], False))
    legs.append((last, query.destinations[-1], query.origin, True))
    for day_idx, origin, dest, is_return in legs:
        slots.append(_Slot(
            stage=_STAGE_TRANSIT, day=day_idx, city=dest,
            leg=(origin, dest, dates[day_idx]), is_return=is_return,
        ))
    for j, city in enumerate(query.destinations):
        nights = tuple(
            d for d in range(block_start[j], block_start[j] + skeleton[j]) if d != last
        )
        if nights:
            slots.append(_Slot(stage=_STAGE_LODGING, day=nights[0], city=city, nights=nights))
    for d in range(len(dates)):
        slots.append(_Slot(stage=_STAGE_MEALS, day=d, city=day_city[d]))
    for d in range(len(dates)):
        slots.append(_Slot(stage=_STAGE_ATTRACTIONS, day=d, city=day_city[d]))
    return slots


def _rooms(record: PoiRecord, people: int) -> int:
    occupancy = record.attributes.get("max_occupancy")
    if not isinstance(occupancy, int) or occupancy < 1:
        occupancy = 1
    return math.ceil(people / occupancy)


def _slot_cost(slot: _Slot, record: PoiRecord, people: int) -> int:
    if slot.stage == _STAGE_LODGING:
        return record.price * _rooms(record, people) * len(slot.nights)
    return record.price * people


def _slot_candidates(slot: _Slot, catalog: PoiCatalog) -> list[PoiRecord]:
    if slot.stage == _STAGE_TRANSIT:
        assert slot.leg is not None
        found = catalog.intercity_options(*slot.leg)
        return sorted(found, key=lambda r: (r.price, r.attributes.get("depart", -1), r.id))
    kind = {
        _STAGE_LODGING: Kind.ACCOMMODATION,
        _STAGE_MEALS: Kind.RESTAURANT,
        _STAGE_ATTRACTIONS: Kind.ATTRACTION,
    }[slot.stage]
    return sorted(catalog.by_kind(kind, slot.city), key=lambda r: (r.price, r.id))


def _materialize(
    query: Query, slots: Sequence[_Slot], chosen: Sequence[Optional[PoiRecord]]
) -> Itinerary:
    """Assemble the bound slots into an itinerary (unbound slots skipped).

    Day item order: arriving leg, attraction, dinner, lodging; the return
    leg always closes the final day.
    """
    by_day: list[dict[str, list[ActivityItem]]] = [
        {"leg_in": [], "attraction": [], "meal": [], "lodging": [], "leg_out": []}
        for _ in range(query.days)
    ]
    for slot, record in zip(slots, chosen):
        if record is None:
            continue
        if slot.stage == _STAGE_TRANSIT:
            item = ActivityItem(
                kind=record.kind,
                poi_id=record.id,
                start=record.attributes.get("depart"),
                end=record.attributes.get("arrive"),
                unit_cost=record.price,
                quantity=query.people,
            )
            by_day[slot.day]["leg_out" if slot.is_return else "leg_in"].append(item)
        elif slot.stage == _STAGE_LODGING:
            for night in slot.nights:
                by_day[night]["lodging"].append(ActivityItem(
                    kind=Kind.ACCOMMODATION,
                    poi_id=record.id,
                    unit_cost=record.price,
                    quantity=_rooms(record, query.people),
                ))
        elif slot.stage == _STAGE_MEALS:
            by_day[slot.day]["meal"].append(ActivityItem(
                kind=Kind.RESTAURANT,
                poi_id=record.id,
                unit_cost=record.price,
                quantity=query.people,
                meal_slot=MealSlot.DINNER,
            ))
        else:
            by_day[slot.day]["attraction"].append(ActivityItem(
                kind=Kind.ATTRACTION,
                poi_id=record.id,
                unit_cost=record.price,
                quantity=query.people,
            ))
    days = []
    for d, date in enumerate(query.dates):
        buckets = by_day[d]
        items = (
            buckets["leg_in"] + buckets["attraction"] + buckets["meal"]
            + buckets["lodging"] + buckets["leg_out"]
        )
        days.append(DayPlan(date=date, items=tuple(items)))
    return Itinerary(query_id=query.id, days=tuple(days))


# ---------------------------------------------------------------------------
# constraint-derived pruning
# ---------------------------------------------------------------------------


def _conjuncts(exprs: Sequence[dast.ConstraintExpr]) -> list[dast.ConstraintExpr]:
    out: list[dast.ConstraintExpr] = []
    for expr in exprs:
        canon = canonicalize(expr)
        if isinstance(canon, dast.BoolOp) and canon.op == "and":
            out.extend(canon.operands)
        else:
            out.append(canon)
    return out


def _budget_bounds(conjuncts: Sequence[dast.ConstraintExpr]) -> tuple[Optional[int], Optional[int]]:
    """(lower, upper) bounds on total cost implied by top-level conjuncts."""
    lower: Optional[int] = None
    upper: Optional[int] = None

    def tighten(op: str, bound: int) -> None:
        nonlocal lower, upper
        if op in ("<", "<="):
            limit = bound - 1 if op == "<" else bound
            upper = limit if upper is None else min(upper, limit)
        elif op in (">", ">="):
            limit = bound + 1 if op == ">" else bound
            lower = limit if lower is None else max(lower, limit)
        elif op == "==":
            tighten("<=", bound)
            tighten(">=", bound)

    for conj in conjuncts:
        negated = isinstance(conj, dast.Not)
        atom = conj.operand if negated else conj
        if not isinstance(atom, dast.Compare):
            continue
        if not (
            isinstance(atom.left, dast.Accessor)
            and atom.left.head is dast.Head.TOTAL_BUDGET
            and isinstance(atom.right, dast.Lit)
            and isinstance(atom.right.value, int)
        ):
            continue
        op = dast.NEGATE_OP[atom.op] if negated else atom.op
        tighten(op, atom.right.value)
    return lower, upper


def _record_tags(record: PoiRecord, attr: str) -> frozenset:
    val = record.attributes.get(attr)
    if isinstance(val, frozenset):
        return val
    if isinstance(val, str):
        return frozenset({val})
    return frozenset()


def _body_holds(body: dast.ConstraintExpr, record: PoiRecord) -> bool:
    """Quantifier body evaluated against one candidate record."""

    def value(e):
        if isinstance(e, dast.Lit):
            return e.value
        if isinstance(e, dast.ItemField):
            if e.name == "kind":
                return record.kind.value
            if e.name == "price":
                return record.price
            if e.name == "rating":
                rating = record.attributes.get("rating")
                return rating if isinstance(rating, int) else None
            if e.name == "name":
                return record.name
            if e.name == "city":
                return record.city
        raise TypeError(f"unexpected body value {e!r}")

    def walk(e) -> bool:
        if isinstance(e, dast.Lit):
            return bool(e.value)
        if isinstance(e, dast.Compare):
            left, right = value(e.left), value(e.right)
            if left is None or right is None or type(left) is not type(right):
                return False
            return {
                "==": left == right, "!=": left != right,
                "<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right,
            }[e.op]
        if isinstance(e, dast.Membership):
            elem = value(e.elem)
            target = value(e.set_expr)
            if elem is None or not isinstance(target, frozenset):
                return not e.positive
            return (elem in target) if e.positive else (elem not in target)
        if isinstance(e, dast.Not):
            return not walk(e.operand)
        if isinstance(e, dast.BoolOp):
            if e.op == "and":
                return all(walk(op) for op in e.operands)
            return any(walk(op) for op in e.operands)
        raise TypeError(f"unexpected body expression {e!r}")

    return walk(body)


_MEMBER_FILTER_KINDS = {
    dast.Head.ROOM_TYPES: ((Kind.ACCOMMODATION,), "room_type"),
    dast.Head.HOUSE_RULES: ((Kind.ACCOMMODATION,), "house_rules"),
    dast.Head.CUISINES: ((Kind.RESTAURANT,), "cuisines"),
    dast.Head.TRANSPORT_MODES: (tuple(TRANSIT_KINDS), "mode"),
}


def _candidate_filters(
    conjuncts: Sequence[dast.ConstraintExpr],
) -> dict[Kind, list[Callable[[PoiRecord], bool]]]:
    """Per-kind record predicates implied by universal conjuncts.

    Only restrictions every satisfying plan must obey are extracted, so
    filtering candidate lists by them never loses a solution:
    a negative membership bans a tag outright, and a universal quantifier's
    body must hold for each item of the quantified kind.
    """
    filters: dict[Kind, list[Callable[[PoiRecord], bool]]] = {}

    def add(kind: Kind, pred: Callable[[PoiRecord], bool]) -> None:
        filters.setdefault(kind, []).append(pred)

    for conj in conjuncts:
        if (
            isinstance(conj, dast.Membership)
            and not conj.positive
            and isinstance(conj.elem, dast.Lit)
            and isinstance(conj.set_expr, dast.Accessor)
            and conj.set_expr.head in _MEMBER_FILTER_KINDS
        ):
            kinds, attr = _MEMBER_FILTER_KINDS[conj.set_expr.head]
            banned = conj.elem.value
            for kind in kinds:
                add(kind, lambda r, a=attr, b=banned: b not in _record_tags(r, a))
        elif isinstance(conj, dast.Quantifier) and conj.universal:
            kinds = (
                tuple(Kind) if conj.kind_filter == "any"
                else (Kind(conj.kind_filter),)
            )
            for kind in kinds:
                add(kind, lambda r, body=conj.body: _body_holds(body, r))
    return filters


def _expr_stage(expr: dast.ConstraintExpr, catalog: PoiCatalog) -> int:
    """Earliest DFS stage at which the expression's truth value is fixed.

    Item fields never reach this function: they live inside quantifier
    bodies, and a quantifier's stage is decided by its kind filter alone.
    """
    if isinstance(expr, dast.Lit):
        return _STAGE_NONE
    if isinstance(expr, dast.Accessor):
        head = expr.head
        if head in (dast.Head.DAYS, dast.Head.PEOPLE_NUMBER):
            return _STAGE_NONE
        if head in (dast.Head.TRANSPORT_MODES, dast.Head.VISITED_CITIES):
            return _STAGE_TRANSIT
        if head in (dast.Head.ROOM_TYPES, dast.Head.HOUSE_RULES):
            return _STAGE_LODGING
        if head is dast.Head.CUISINES:
            return _STAGE_MEALS
        if head is dast.Head.COST_OF:
            return _KIND_STAGE[Kind(expr.arg)]
        if head is dast.Head.TOTAL_BUDGET:
            return _STAGE_ATTRACTIONS
        if head in (dast.Head.RATING_OF, dast.Head.POI_VISITED):
            kinds = {r.kind for r in catalog if r.name == expr.arg}
            if not kinds:
                return _STAGE_NONE
            return max(_KIND_STAGE[k] for k in kinds)
        raise AssertionError(head)
    if isinstance(expr, dast.Compare):
        return max(_expr_stage(expr.left, catalog), _expr_stage(expr.right, catalog))
    if isinstance(expr, dast.Membership):
        return max(_expr_stage(expr.elem, catalog), _expr_stage(expr.set_expr, catalog))
    if isinstance(expr, dast.Not):
        return _expr_stage(expr.operand, catalog)
    if isinstance(expr, dast.BoolOp):
        return max(_expr_stage(op, catalog) for op in expr.operands)
    if isinstance(expr, dast.Quantifier):
        if expr.kind_filter == "any":
            return _STAGE_ATTRACTIONS
        return _KIND_STAGE[Kind(expr.kind_filter)]
    raise TypeError(f"not a constraint expression: {expr!r}")


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def solve(req: SolveRequest, catalog: PoiCatalog) -> SolveOutcome:
    """First satisfying plan in deterministic search order, if any.

    With a non-empty ``neg_subset`` the returned plan evaluates false on
    exactly those constraints and true on all others.
    """
    query = req.query
    effective = req.effective_constraints()
    nodes = 0

    # constraints fixed by the query alone: check once against the bare shell
    shell = Itinerary(
        query_id=query.id,
        days=tuple(DayPlan(date=d) for d in query.dates),
    )
    stages = [_expr_stage(c, catalog) for c in effective]
    shell_values = evaluate_many(effective, shell, catalog, query)
    for i, (stage, value) in enumerate(zip(stages, shell_values)):
        if stage == _STAGE_NONE and not value:
            return SolveOutcome(
                status="infeasible",
                plan=None,
                nodes_explored=0,
                certificate=f"constraint fixed by the query alone is false: "
                            f"{dast.render(effective[i])}",
            )

    conjuncts = _conjuncts(effective)
    lower_bound, upper_bound = _budget_bounds(conjuncts)
    filters = _candidate_filters(conjuncts)
    by_stage = [
        [i for i, s in enumerate(stages) if s == stage]
        for stage in range(_STAGE_ATTRACTIONS + 1)
    ]

    def run() -> Optional[Itinerary]:
        nonlocal nodes
        for skeleton in _compositions(query.days, len(query.destinations)):
            nodes += 1
            if nodes > req.search_budget:
                raise _OutOfBudget
            slots = _skeleton_slots(query, skeleton)
            candidate_lists: list[list[PoiRecord]] = []
            for slot in slots:
                records = [
                    r for r in _slot_candidates(slot, catalog)
                    if all(pred(r) for pred in filters.get(r.kind, []))
                ]
                candidate_lists.append(records)
            if any(not c for c in candidate_lists):
                continue
            min_suffix, max_suffix = _cost_suffixes(slots, candidate_lists, query.people)
            chosen: list[Optional[PoiRecord]] = [None] * len(slots)
            plan = _assign(0, 0, slots, candidate_lists, chosen, min_suffix, max_suffix)
            if plan is not None:
                return plan
        return None

    def _assign(
        idx: int,
        cost: int,
        slots: list[_Slot],
        candidate_lists: list[list[PoiRecord]],
        chosen: list[Optional[PoiRecord]],
        min_suffix: list[int],
        max_suffix: list[int],
    ) -> Optional[Itinerary]:
        nonlocal nodes
        if idx == len(slots):
            plan = _materialize(query, slots, chosen)
            if all(evaluate_many(effective, plan, catalog, query)):
                return plan
            return None
        if upper_bound is not None and cost + min_suffix[idx] > upper_bound:
            return None
        if lower_bound is not None and cost + max_suffix[idx] < lower_bound:
            return None
        slot = slots[idx]
        stage_ends = idx + 1 == len(slots) or slots[idx + 1].stage != slot.stage
        used_attractions = {
            r.id for s, r in zip(slots, chosen)
            if r is not None and s.stage == _STAGE_ATTRACTIONS
        }
        for record in candidate_lists[idx]:
            nodes += 1
            if nodes > req.search_budget:
                raise _OutOfBudget
            if slot.stage == _STAGE_ATTRACTIONS and record.id in used_attractions:
                continue
            if not _leg_order_ok(slots, chosen, slot, record):
                continue
            chosen[idx] = record
            if stage_ends and not _stage_check(slot.stage, slots, chosen):
                chosen[idx] = None
                continue
            plan = _assign(
                idx + 1, cost + _slot_cost(slot, record, query.people),
                slots, candidate_lists, chosen, min_suffix, max_suffix,
            )
            if plan is not None:
                return plan
            chosen[idx] = None
        return None

    def _stage_check(stage: int, slots: list[_Slot], chosen: list[Optional[PoiRecord]]) -> bool:
        if stage == _STAGE_ATTRACTIONS:
            return True  # the leaf check covers the final stage
        pending = by_stage[stage]
        if not pending:
            return True
        partial = _materialize(query, slots, chosen)
        values = evaluate_many([effective[i] for i in pending], partial, catalog, query)
        return all(values)

    try:
        plan = run()
    except _OutOfBudget:
        return SolveOutcome(
            status="budget_exhausted",
            plan=None,
            nodes_explored=nodes,
            certificate=f"node limit {req.search_budget} reached",
        )
    if plan is None:
        return SolveOutcome(
            status="infeasible",
            plan=None,
            nodes_explored=nodes,
            certificate=f"search space exhausted after {nodes} nodes",
        )
    return SolveOutcome(status="feasible", plan=plan, nodes_explored=nodes)


def _cost_suffixes(
    slots: list[_Slot], candidate_lists: list[list[PoiRecord]], people: int
) -> tuple[list[int], list[int]]:
    mins = [
        min(_slot_cost(s, r, people) for r in records)
        for s, records in zip(slots, candidate_lists)
    ]
    maxs = [
        max(_slot_cost(s, r, people) for r in records)
        for s, records in zip(slots, candidate_lists)
    ]
    min_suffix = [0] * (len(slots) + 1)
    max_suffix = [0] * (len(slots) + 1)
    for i in range(len(slots) - 1, -1, -1):
        min_suffix[i] = mins[i] + min_suffix[i + 1]
        max_suffix[i] = maxs[i] + max_suffix[i + 1]
    return min_suffix, max_suffix


def _leg_order_ok(
    slots: Sequence[_Slot],
    chosen: Sequence[Optional[PoiRecord]],
    slot: _Slot,
    record: PoiRecord,
) -> bool:
    """Same-day legs must run in order: the arriving leg before the departing."""
    if slot.stage != _STAGE_TRANSIT:
        return True
    start = record.attributes.get("depart")
    for other_slot, other in zip(slots, chosen):
        if other is None or other_slot.stage != _STAGE_TRANSIT or other_slot.day != slot.day:
            continue
        prior_end = other.attributes.get("arrive")
        if prior_end is not None and start is not None and start < prior_end:
            return False
    return True


# ---------------------------------------------------------------------------
# brute-force enumeration (test oracle and distractor pool source)
# ---------------------------------------------------------------------------


def enumerate_all(
    query: Query,
    constraints: Sequence[dast.ConstraintExpr],
    catalog: PoiCatalog,
    cap: int = 100_000,
) -> EnumerationResult:
    """Every satisfying plan, by walking the whole structural space.

    No pruning beyond plan-shape rules: every structurally valid plan is
    materialized and checked, which is what makes this a trustworthy oracle
    for ``solve``. Raises EnumerationCapExceeded once the structural space
    passes ``cap`` leaves.
    """
    plans: list[Itinerary] = []
    pool: set[str] = set()
    leaves = 0

    def walk(
        idx: int,
        slots: list[_Slot],
        candidate_lists: list[list[PoiRecord]],
        chosen: list[Optional[PoiRecord]],
    ) -> None:
        nonlocal leaves
        if idx == len(slots):
            leaves += 1
            if leaves > cap:
                raise EnumerationCapExceeded(cap)
            plan = _materialize(query, slots, chosen)
            if all(evaluate_many(list(constraints), plan, catalog, query)):
                plans.append(plan)
                pool.update(plan.poi_ids())
            return
        slot = slots[idx]
        used = {
            r.id for s, r in zip(slots, chosen)
            if r is not None and s.stage == _STAGE_ATTRACTIONS
        }
        for record in candidate_lists[idx]:
            if slot.stage == _STAGE_ATTRACTIONS and record.id in used:
                continue
            if not _leg_order_ok(slots, chosen, slot, record):
                continue
            chosen[idx] = record
            walk(idx + 1, slots, candidate_lists, chosen)
            chosen[idx] = None

    for skeleton in _compositions(query.days, len(query.destinations)):
        slots = _skeleton_slots(query, skeleton)
        candidate_lists = [_slot_candidates(slot, catalog) for slot in slots]
        if any(not c for c in candidate_lists):
            continue
        walk(0, slots, candidate_lists, [None] * len(slots))

    return EnumerationResult(
        plans=tuple(plans), poi_ids=frozenset(pool), leaves_visited=leaves
    )


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def verify(
    plan: Itinerary,
    constraints: Sequence[dast.ConstraintExpr],
    catalog: PoiCatalog,
    query: Query,
) -> list[ErrorFinding]:
    """All violations in one plan; empty means fully valid.

    Finding order is deterministic: constraint violations in input order,
    then unresolvable or kind-mismatched references, repeated attractions,
    and transit-continuity breaks, each in plan order.
    """
    findings: list[ErrorFinding] = []

    values = evaluate_many(list(constraints), plan, catalog, query)
    for expr, ok in zip(constraints, values):
        if not ok:
            findings.append(ErrorFinding(
                category=category_of(expr), constraint=expr, locus=None,
            ))

    # unresolvable ids, and ids whose declared kind contradicts the catalog
    for di, ii, item in plan.all_items():
        record = catalog.get(item.poi_id)
        if record is None or record.kind is not item.kind:
            findings.append(ErrorFinding(
                category=ErrorCategory.HALLUCINATED_POI, locus=(di, ii),
            ))

    seen_attractions: set[str] = set()
    for di, ii, item in plan.all_items():
        if item.kind is not Kind.ATTRACTION:
            continue
        if item.poi_id in seen_attractions:
            findings.append(ErrorFinding(
                category=ErrorCategory.REPEATED_ACTIVITY, locus=(di, ii),
            ))
        seen_attractions.add(item.poi_id)

    findings.extend(_continuity_findings(plan, catalog, query))
    return findings


def _continuity_findings(
    plan: Itinerary, catalog: PoiCatalog, query: Query
) -> list[ErrorFinding]:
    """Walk the plan geographically: legs must chain from the origin back
    to the origin, and every located item must sit in the current city."""
    findings: list[ErrorFinding] = []
    location = query.origin
    for di, ii, item in plan.all_items():
        record = catalog.get(item.poi_id)
        if record is None or record.kind is not item.kind:
            continue  # already reported as hallucinated
        if record.kind in (Kind.FLIGHT, Kind.INTERCITY_TRANSIT):
            leg_from = record.attributes.get("origin")
            if leg_from != location:
                findings.append(ErrorFinding(
                    category=ErrorCategory.TRANSIT_CONTINUITY, locus=(di, ii),
                ))
            location = str(record.attributes.get("destination", location))
        elif record.kind is not Kind.INNERCITY_TRANSIT:
            if record.city != location:
                findings.append(ErrorFinding(
                    category=ErrorCategory.TRANSIT_CONTINUITY, locus=(di, ii),
                ))
    if location != query.origin:
        findings.append(ErrorFinding(
            category=ErrorCategory.TRANSIT_CONTINUITY, locus=None,
        ))
    return findings


__all__ = [
    "DEFAULT_SEARCH_BUDGET",
    "EnumerationCapExceeded",
    "EnumerationResult",
    "SolveOutcome",
    "SolveRequest",
    "category_of",
    "enumerate_all",
    "solve",
    "verify",
]
