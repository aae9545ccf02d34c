"""Canonical forms and sound syntactic negation.

``canonicalize`` is idempotent and truth-preserving. It orients comparisons
accessor-on-left (``3 == days(plan)`` becomes ``days(plan) == 3``, and
``k < x`` becomes ``x > k``), folds comparisons between literals, flattens
and sorts the operands of ``and``/``or`` (dropping duplicates and neutral
constants), cancels double negation, and pushes ``not`` inward wherever the
rewrite is truth-preserving for *every* plan, including plans with
unresolvable poi ids.

That last clause is why ``not`` is only distributed over comparisons whose
operands are total (counts and literals): an atom over money, rating, or a
record-derived string evaluates to false when the value is undefined, so the
operator-flipped atom is *not* its complement there. Those atoms keep an
explicit ``Not`` wrapper. Membership polarity and De Morgan rewrites are
always sound.

Canonical-form equality is the equivalence notion used for matching. It is a
deliberate under-approximation of semantic equivalence: ``days(plan) < 4``
and ``days(plan) <= 3`` stay distinct.
"""

from __future__ import annotations

from .ast import (
    Accessor,
    BoolOp,
    Compare,
    ConstraintExpr,
    ItemField,
    Lit,
    Membership,
    MIRROR_OP,
    NEGATE_OP,
    Not,
    NUMERIC_TYPES,
    PARTIAL_HEADS,
    Quantifier,
    TOTAL_FIELDS,
    ValueType,
    render,
)

_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _is_total_value(expr) -> bool:
    """Defined on every plan, resolvable or not."""
    if isinstance(expr, Lit):
        return True
    if isinstance(expr, Accessor):
        return expr.head not in PARTIAL_HEADS and expr.vtype is not ValueType.STRING
    if isinstance(expr, ItemField):
        return expr.name in TOTAL_FIELDS
    return False


def _fold_compare(cmp: Compare) -> ConstraintExpr:
    left, right = cmp.left, cmp.right
    if isinstance(left, Lit) and isinstance(right, Lit):
        if left.vtype == right.vtype:
            try:
                return Lit(ValueType.BOOL, bool(_CMP[cmp.op](left.value, right.value)))
            except TypeError:
                return cmp
        return cmp
    if isinstance(left, Lit):
        return Compare(MIRROR_OP[cmp.op], right, left)
    if not isinstance(right, Lit):
        # two accessors or fields: order operands by their rendering
        if render(left) > render(right):
            return Compare(MIRROR_OP[cmp.op], right, left)
    return cmp


def _rebuild_boolop(op: str, operands: list[ConstraintExpr]) -> ConstraintExpr:
    """Flatten, drop neutral constants, fold absorbing ones, sort, dedupe."""
    absorbing = op == "or"  # Lit(True) absorbs an or; Lit(False) absorbs an and
    flat: list[ConstraintExpr] = []
    for item in operands:
        if isinstance(item, BoolOp) and item.op == op:
            flat.extend(item.operands)
        else:
            flat.append(item)
    kept: list[ConstraintExpr] = []
    for item in flat:
        if isinstance(item, Lit) and item.vtype is ValueType.BOOL:
            if bool(item.value) == absorbing:
                return Lit(ValueType.BOOL, absorbing)
            continue  # neutral element, drop
        kept.append(item)
    if not kept:
        return Lit(ValueType.BOOL, not absorbing)
    uniq: dict[str, ConstraintExpr] = {}
    for item in kept:
        uniq.setdefault(render(item), item)
    ordered = [uniq[key] for key in sorted(uniq)]
    if len(ordered) == 1:
        return ordered[0]
    return BoolOp(op, tuple(ordered))


def _push_not(expr: ConstraintExpr) -> ConstraintExpr:
    """Canonical form of the complement of an already-canonical ``expr``."""
    if isinstance(expr, Lit) and expr.vtype is ValueType.BOOL:
        return Lit(ValueType.BOOL, not expr.value)
    if isinstance(expr, Not):
        return expr.operand
    if isinstance(expr, Membership):
        return Membership(expr.elem, expr.set_expr, not expr.positive)
    if isinstance(expr, Compare):
        if _is_total_value(expr.left) and _is_total_value(expr.right):
            return Compare(NEGATE_OP[expr.op], expr.left, expr.right)
        return Not(expr)
    if isinstance(expr, BoolOp):
        dual = "or" if expr.op == "and" else "and"
        return _rebuild_boolop(dual, [_push_not(op) for op in expr.operands])
    if isinstance(expr, Quantifier):
        return Quantifier(not expr.universal, expr.kind_filter, _push_not(expr.body))
    # bare boolean accessor (poi_visited)
    return Not(expr)


def canonicalize(expr: ConstraintExpr) -> ConstraintExpr:
    """Normalize an expression; idempotent and truth-preserving."""
    if isinstance(expr, (Lit, Accessor, ItemField)):
        return expr
    if isinstance(expr, Compare):
        return _fold_compare(expr)
    if isinstance(expr, Membership):
        elem, target = expr.elem, expr.set_expr
        if isinstance(elem, Lit) and isinstance(target, Lit):
            inside = elem.value in target.value  # type: ignore[operator]
            return Lit(ValueType.BOOL, inside if expr.positive else not inside)
        return expr
    if isinstance(expr, Not):
        return _push_not(canonicalize(expr.operand))
    if isinstance(expr, BoolOp):
        return _rebuild_boolop(expr.op, [canonicalize(op) for op in expr.operands])
    if isinstance(expr, Quantifier):
        return Quantifier(expr.universal, expr.kind_filter, canonicalize(expr.body))
    raise TypeError(f"not a constraint expression: {expr!r}")


def negate(expr: ConstraintExpr) -> ConstraintExpr:
    """Canonical complement: evaluates to the opposite truth on every plan."""
    return _push_not(canonicalize(expr))


def canonical_equal(a: ConstraintExpr, b: ConstraintExpr) -> bool:
    """Equivalence as used for matching: equality of canonical forms."""
    return canonicalize(a) == canonicalize(b)


__all__ = ["canonical_equal", "canonicalize", "negate"]
