"""Constraint evaluation over an itinerary, a catalog, and its query.

Every expression evaluates to a total boolean. Plans may reference poi ids
that do not resolve in the catalog; such references make money, rating, and
record-derived string values *undefined*. A comparison touching an undefined
value evaluates to false (``Not`` of such an atom is therefore true). A
membership atom with an undefined element is false when positive and true
when negative, so flipping membership polarity is always a sound negation.
Set-valued accessors stay total: unresolvable items simply contribute
nothing.

Resolution is by id only. Aggregations group by the resolved record's kind;
the declared item kind is used for the quantifier ``kind`` field and filter
(no catalog lookup needed) and for deciding which cost buckets an
unresolvable item poisons.
"""

from __future__ import annotations

from typing import Optional, Sequence

from ..catalog import PoiCatalog
from ..model import INTERCITY_KINDS, Itinerary, Kind, PoiRecord, Query, TRANSIT_KINDS
from .ast import (
    Accessor,
    BoolOp,
    Compare,
    ConstraintExpr,
    Head,
    ItemField,
    Lit,
    Membership,
    Not,
    Quantifier,
    ValueType,
)

_UNDEF = object()  # sentinel matched by identity: poisoned/unknown value


class PlanView:
    """Precomputed observations of one plan, shared across constraint evals."""

    def __init__(self, plan: Itinerary, catalog: PoiCatalog, query: Query):
        self.plan = plan
        self.catalog = catalog
        self.query = query
        self.entries = [
            (item, catalog.get(item.poi_id)) for _, _, item in plan.all_items()
        ]

    # -- scalar observations --------------------------------------------

    @property
    def days(self) -> int:
        return len(self.plan.days)

    @property
    def people(self) -> int:
        return self.query.people

    def total_cost(self):
        total = 0
        for item, rec in self.entries:
            if rec is None:
                return _UNDEF
            total += rec.price * item.quantity
        return total

    def cost_of(self, kind_value: str):
        total = 0
        for item, rec in self.entries:
            if rec is None:
                if item.kind.value == kind_value:
                    return _UNDEF
                continue
            if rec.kind.value == kind_value:
                total += rec.price * item.quantity
        return total

    def rating_of(self, name: str):
        for item, rec in self.entries:
            if rec is not None and rec.name == name:
                rating = rec.attributes.get("rating")
                return rating if isinstance(rating, int) else _UNDEF
        return _UNDEF

    def poi_visited(self, name: str) -> bool:
        return any(rec is not None and rec.name == name for _, rec in self.entries)

    # -- set observations -------------------------------------------------

    def _tag_union(self, kind: Kind, attr: str) -> frozenset:
        out: set[str] = set()
        for _, rec in self.entries:
            if rec is None or rec.kind is not kind:
                continue
            val = rec.attributes.get(attr)
            if isinstance(val, frozenset):
                out |= val
            elif isinstance(val, str):
                out.add(val)
        return frozenset(out)

    def room_types(self) -> frozenset:
        return self._tag_union(Kind.ACCOMMODATION, "room_type")

    def house_rules(self) -> frozenset:
        return self._tag_union(Kind.ACCOMMODATION, "house_rules")

    def cuisines(self) -> frozenset:
        return self._tag_union(Kind.RESTAURANT, "cuisines")

    def transport_modes(self) -> frozenset:
        out: set[str] = set()
        for _, rec in self.entries:
            if rec is not None and rec.kind in TRANSIT_KINDS:
                mode = rec.attributes.get("mode")
                if isinstance(mode, str):
                    out.add(mode)
        return frozenset(out)

    def visited_cities(self) -> frozenset:
        out: set[str] = set()
        for _, rec in self.entries:
            if rec is None:
                continue
            out.add(rec.city)
            if rec.kind in INTERCITY_KINDS:
                for key in ("origin", "destination"):
                    val = rec.attributes.get(key)
                    if isinstance(val, str):
                        out.add(val)
        return frozenset(out)

    # -- accessor dispatch -------------------------------------------------

    def accessor_value(self, acc: Accessor):
        head = acc.head
        if head is Head.DAYS:
            return self.days
        if head is Head.PEOPLE_NUMBER:
            return self.people
        if head is Head.TOTAL_BUDGET:
            return self.total_cost()
        if head is Head.COST_OF:
            return self.cost_of(acc.arg)  # type: ignore[arg-type]
        if head is Head.ROOM_TYPES:
            return self.room_types()
        if head is Head.HOUSE_RULES:
            return self.house_rules()
        if head is Head.TRANSPORT_MODES:
            return self.transport_modes()
        if head is Head.CUISINES:
            return self.cuisines()
        if head is Head.VISITED_CITIES:
            return self.visited_cities()
        if head is Head.RATING_OF:
            return self.rating_of(acc.arg)  # type: ignore[arg-type]
        if head is Head.POI_VISITED:
            return self.poi_visited(acc.arg)  # type: ignore[arg-type]
        raise AssertionError(f"unhandled head {head}")


def _field_value(field: ItemField, item, rec: Optional[PoiRecord]):
    if field.name == "kind":
        return item.kind.value
    if rec is None:
        return _UNDEF
    if field.name == "price":
        return rec.price
    if field.name == "rating":
        rating = rec.attributes.get("rating")
        return rating if isinstance(rating, int) else _UNDEF
    if field.name == "name":
        return rec.name
    if field.name == "city":
        return rec.city
    raise AssertionError(f"unhandled field {field.name}")


def _value(expr, view: PlanView, entry):
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Accessor):
        return view.accessor_value(expr)
    if isinstance(expr, ItemField):
        if entry is None:
            raise TypeError("item field outside a quantifier body")
        return _field_value(expr, entry[0], entry[1])
    raise TypeError(f"not a value expression: {expr!r}")


_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _eval(expr: ConstraintExpr, view: PlanView, entry) -> bool:
    if isinstance(expr, Lit):
        if expr.vtype is ValueType.BOOL:
            return bool(expr.value)
        raise TypeError("a bare non-boolean literal is not a constraint")
    if isinstance(expr, Accessor):
        if expr.vtype is ValueType.BOOL:
            return bool(view.accessor_value(expr))
        raise TypeError(f"bare accessor {expr.head.value} is not a constraint")
    if isinstance(expr, Compare):
        left = _value(expr.left, view, entry)
        right = _value(expr.right, view, entry)
        if left is _UNDEF or right is _UNDEF:
            return False
        if type(left) is not type(right):
            # mismatched hand-built trees compare to false rather than raise
            return False
        return _CMP[expr.op](left, right)
    if isinstance(expr, Membership):
        elem = _value(expr.elem, view, entry)
        target = _value(expr.set_expr, view, entry)
        if elem is _UNDEF or target is _UNDEF or not isinstance(target, frozenset):
            return False if expr.positive else True
        inside = elem in target
        return inside if expr.positive else not inside
    if isinstance(expr, Not):
        return not _eval(expr.operand, view, entry)
    if isinstance(expr, BoolOp):
        if expr.op == "and":
            return all(_eval(op, view, entry) for op in expr.operands)
        return any(_eval(op, view, entry) for op in expr.operands)
    if isinstance(expr, Quantifier):
        domain = [
            e for e in view.entries
            if expr.kind_filter == "any" or e[0].kind.value == expr.kind_filter
        ]
        if expr.universal:
            return all(_eval(expr.body, view, e) for e in domain)
        return any(_eval(expr.body, view, e) for e in domain)
    if isinstance(expr, ItemField):
        raise TypeError("a bare item field is not a constraint")
    raise TypeError(f"not a constraint expression: {expr!r}")


def evaluate(expr: ConstraintExpr, plan: Itinerary, catalog: PoiCatalog, query: Query) -> bool:
    """Truth of one constraint against a plan. Total: always a bool."""
    return _eval(expr, PlanView(plan, catalog, query), None)


def evaluate_many(
    exprs: Sequence[ConstraintExpr], plan: Itinerary, catalog: PoiCatalog, query: Query
) -> list[bool]:
    """Truth of several constraints sharing one precomputed plan view."""
    view = PlanView(plan, catalog, query)
    return [_eval(e, view, None) for e in exprs]


__all__ = ["PlanView", "evaluate", "evaluate_many"]
