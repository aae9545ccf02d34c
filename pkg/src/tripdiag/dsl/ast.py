"""Constraint expression nodes and their canonical text rendering.

The vocabulary is closed: a fixed set of plan accessors, typed literals,
comparisons, set membership, boolean connectives, and item quantifiers.
Value typing rules:

* ``COUNT`` integers (days, people),
* ``MONEY`` integer minor units, rendered in major units ("400" = 40000),
* ``RATING`` integer tenths, rendered with one decimal ("4.5" = 45),
* ``STRING`` / ``STRSET`` / ``BOOL`` as usual.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union


class ValueType(Enum):
    COUNT = "count"
    MONEY = "money"
    RATING = "rating"
    STRING = "string"
    STRSET = "strset"
    BOOL = "bool"


NUMERIC_TYPES = frozenset({ValueType.COUNT, ValueType.MONEY, ValueType.RATING})


class Head(Enum):
    """Accessor heads: everything a constraint can observe about a plan."""

    DAYS = "days"
    PEOPLE_NUMBER = "people_number"
    TOTAL_BUDGET = "total_budget"
    COST_OF = "cost_of"
    ROOM_TYPES = "room_types"
    HOUSE_RULES = "house_rules"
    TRANSPORT_MODES = "transport_modes"
    CUISINES = "cuisines"
    VISITED_CITIES = "visited_cities"
    RATING_OF = "rating_of"
    POI_VISITED = "poi_visited"


HEAD_TYPE: dict[Head, ValueType] = {
    Head.DAYS: ValueType.COUNT,
    Head.PEOPLE_NUMBER: ValueType.COUNT,
    Head.TOTAL_BUDGET: ValueType.MONEY,
    Head.COST_OF: ValueType.MONEY,
    Head.ROOM_TYPES: ValueType.STRSET,
    Head.HOUSE_RULES: ValueType.STRSET,
    Head.TRANSPORT_MODES: ValueType.STRSET,
    Head.CUISINES: ValueType.STRSET,
    Head.VISITED_CITIES: ValueType.STRSET,
    Head.RATING_OF: ValueType.RATING,
    Head.POI_VISITED: ValueType.BOOL,
}

#: heads that take a string argument: cost_of(kind), rating_of/poi_visited(name)
HEADS_WITH_ARG = frozenset({Head.COST_OF, Head.RATING_OF, Head.POI_VISITED})

#: heads whose value is undefined when the plan references unknown poi ids;
#: atomic predicates over them evaluate to false on such plans
PARTIAL_HEADS = frozenset({Head.TOTAL_BUDGET, Head.COST_OF, Head.RATING_OF})

#: accepted spelling variants, normalized at parse time
ALIAS_VERSION = 1
HEAD_ALIASES: dict[str, str] = {
    "people_count": "people_number",
    "people": "people_number",
    "budget": "total_budget",
    "total_cost": "total_budget",
    "room_type": "room_types",
    "room_type_set": "room_types",
    "house_rule": "house_rules",
    "house_rule_set": "house_rules",
    "transportation": "transport_modes",
    "transport_mode": "transport_modes",
    "transport_mode_set": "transport_modes",
    "cuisine": "cuisines",
    "cuisine_set": "cuisines",
    "visited_city": "visited_cities",
    "visited_city_set": "visited_cities",
    "day_count": "days",
}

SURFACE_TO_HEAD: dict[str, Head] = {h.value: h for h in Head}

#: fields available on items inside forall/exists bodies
FIELD_TYPES: dict[str, ValueType] = {
    "price": ValueType.MONEY,
    "rating": ValueType.RATING,
    "name": ValueType.STRING,
    "city": ValueType.STRING,
    "kind": ValueType.STRING,
}

#: item fields readable without a catalog lookup (safe to operator-flip)
TOTAL_FIELDS = frozenset({"kind"})

COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
ORDER_OPS = frozenset({"<", "<=", ">", ">="})
MIRROR_OP = {"==": "==", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}
NEGATE_OP = {"==": "!=", "!=": "==", "<": ">=", ">": "<=", "<=": ">", ">=": "<"}


@dataclass(frozen=True)
class Accessor:
    head: Head
    arg: Optional[str] = None

    def __post_init__(self) -> None:
        if self.head in HEADS_WITH_ARG:
            if self.arg is None:
                raise ValueError(f"{self.head.value} requires an argument")
        elif self.arg is not None:
            raise ValueError(f"{self.head.value} takes no argument")

    @property
    def vtype(self) -> ValueType:
        return HEAD_TYPE[self.head]


@dataclass(frozen=True)
class ItemField:
    """A bare field reference inside a quantifier body."""

    name: str

    def __post_init__(self) -> None:
        if self.name not in FIELD_TYPES:
            raise ValueError(f"unknown item field {self.name!r}")

    @property
    def vtype(self) -> ValueType:
        return FIELD_TYPES[self.name]


@dataclass(frozen=True)
class Lit:
    vtype: ValueType
    value: Union[int, str, bool, frozenset]

    def __post_init__(self) -> None:
        v = self.value
        if self.vtype in NUMERIC_TYPES and (not isinstance(v, int) or isinstance(v, bool)):
            raise ValueError("numeric literal must hold an int")
        if self.vtype is ValueType.STRING and not isinstance(v, str):
            raise ValueError("string literal must hold a str")
        if self.vtype is ValueType.STRSET:
            if not isinstance(v, frozenset) or not all(isinstance(x, str) for x in v):
                raise ValueError("set literal must hold a frozenset of str")
        if self.vtype is ValueType.BOOL and not isinstance(v, bool):
            raise ValueError("bool literal must hold a bool")


@dataclass(frozen=True)
class Compare:
    op: str
    left: "ValueExpr"
    right: "ValueExpr"

    def __post_init__(self) -> None:
        if self.op not in COMPARE_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class Membership:
    """``elem in set_expr`` (positive) or ``elem not in set_expr``."""

    elem: "ValueExpr"
    set_expr: "ValueExpr"
    positive: bool = True


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    operands: tuple["ConstraintExpr", ...]

    def __post_init__(self) -> None:
        if self.op not in ("and", "or"):
            raise ValueError(f"unknown boolean operator {self.op!r}")
        if len(self.operands) < 2:
            raise ValueError("boolean operator needs at least two operands")


@dataclass(frozen=True)
class Not:
    operand: "ConstraintExpr"


@dataclass(frozen=True)
class Quantifier:
    """``forall(plan, '<kind>', body)`` / ``exists(plan, '<kind>', body)``.

    The kind filter selects plan items by their ``kind``; ``'any'`` keeps all
    items. The body is a predicate over item fields.
    """

    universal: bool
    kind_filter: str
    body: "ConstraintExpr"


ValueExpr = Union[Accessor, ItemField, Lit]
ConstraintExpr = Union[Lit, Accessor, ItemField, Compare, Membership, BoolOp, Not, Quantifier]


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

# precedence levels: or=1, and=2, not=3, atoms=4
_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4


def quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def render_number(vtype: ValueType, value: int) -> str:
    if vtype is ValueType.COUNT:
        return str(value)
    if vtype is ValueType.RATING:
        sign = "-" if value < 0 else ""
        mag = abs(value)
        return f"{sign}{mag // 10}.{mag % 10}"
    # money: minor units shown in major units, trailing zeros trimmed
    sign = "-" if value < 0 else ""
    mag = abs(value)
    major, minor = divmod(mag, 100)
    if minor == 0:
        return f"{sign}{major}"
    cents = f"{minor:02d}".rstrip("0")
    return f"{sign}{major}.{cents}"


def _render_value(expr: ValueExpr) -> str:
    if isinstance(expr, Accessor):
        if expr.arg is not None:
            return f"{expr.head.value}(plan, {quote(expr.arg)})"
        return f"{expr.head.value}(plan)"
    if isinstance(expr, ItemField):
        return expr.name
    if isinstance(expr, Lit):
        if expr.vtype in NUMERIC_TYPES:
            return render_number(expr.vtype, expr.value)  # type: ignore[arg-type]
        if expr.vtype is ValueType.STRING:
            return quote(expr.value)  # type: ignore[arg-type]
        if expr.vtype is ValueType.STRSET:
            inner = ", ".join(quote(s) for s in sorted(expr.value))  # type: ignore[arg-type]
            return "{" + inner + "}"
        return "true" if expr.value else "false"
    raise TypeError(f"not a value expression: {expr!r}")


def _render(expr: ConstraintExpr, parent_prec: int) -> str:
    if isinstance(expr, (Accessor, ItemField, Lit)):
        return _render_value(expr)
    if isinstance(expr, Compare):
        return f"{_render_value(expr.left)} {expr.op} {_render_value(expr.right)}"
    if isinstance(expr, Membership):
        word = "in" if expr.positive else "not in"
        return f"{_render_value(expr.elem)} {word} {_render_value(expr.set_expr)}"
    if isinstance(expr, Not):
        text = f"not {_render(expr.operand, _PREC_NOT)}"
        return f"({text})" if parent_prec > _PREC_NOT else text
    if isinstance(expr, BoolOp):
        prec = _PREC_AND if expr.op == "and" else _PREC_OR
        joined = f" {expr.op} ".join(_render(op, prec + 1) for op in expr.operands)
        return f"({joined})" if parent_prec > prec else joined
    if isinstance(expr, Quantifier):
        word = "forall" if expr.universal else "exists"
        return f"{word}(plan, {quote(expr.kind_filter)}, {_render(expr.body, _PREC_OR)})"
    raise TypeError(f"not a constraint expression: {expr!r}")


def render(expr: ConstraintExpr) -> str:
    """Canonical text for an expression; ``parse(render(e))`` returns ``e``."""
    return _render(expr, _PREC_OR)


def head_of(expr: ConstraintExpr) -> Optional[Head]:
    """The accessor head a constraint is primarily about (pre-order first).

    Quantifier bodies have no accessors; their first item field maps to the
    nearest head (price to cost_of, rating to rating_of, city to
    visited_cities, name and kind to poi_visited).
    """
    field_heads = {
        "price": Head.COST_OF,
        "rating": Head.RATING_OF,
        "city": Head.VISITED_CITIES,
        "name": Head.POI_VISITED,
        "kind": Head.POI_VISITED,
    }
    if isinstance(expr, Accessor):
        return expr.head
    if isinstance(expr, ItemField):
        return field_heads[expr.name]
    if isinstance(expr, Lit):
        return None
    if isinstance(expr, Compare):
        return head_of(expr.left) or head_of(expr.right)
    if isinstance(expr, Membership):
        return head_of(expr.set_expr) or head_of(expr.elem)
    if isinstance(expr, Not):
        return head_of(expr.operand)
    if isinstance(expr, BoolOp):
        for op in expr.operands:
            found = head_of(op)
            if found is not None:
                return found
        return None
    if isinstance(expr, Quantifier):
        return head_of(expr.body)
    raise TypeError(f"not a constraint expression: {expr!r}")
