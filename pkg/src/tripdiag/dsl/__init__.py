"""Constraint DSL: parse, render, evaluate, negate, canonicalize, match."""

from .ast import (
    ALIAS_VERSION,
    Accessor,
    BoolOp,
    Compare,
    ConstraintExpr,
    FIELD_TYPES,
    HEAD_ALIASES,
    HEAD_TYPE,
    HEADS_WITH_ARG,
    Head,
    ItemField,
    Lit,
    Membership,
    Not,
    PARTIAL_HEADS,
    Quantifier,
    ValueType,
    head_of,
    render,
)
from .canonical import canonical_equal, canonicalize, negate
from .evaluate import PlanView, evaluate, evaluate_many
from .matching import MatchReport, match_keyed, match_sets, rates
from .parser import DslTypeError, ParseError, parse

__all__ = [
    "ALIAS_VERSION",
    "Accessor",
    "BoolOp",
    "Compare",
    "ConstraintExpr",
    "DslTypeError",
    "FIELD_TYPES",
    "HEAD_ALIASES",
    "HEAD_TYPE",
    "HEADS_WITH_ARG",
    "Head",
    "ItemField",
    "Lit",
    "MatchReport",
    "Membership",
    "Not",
    "PARTIAL_HEADS",
    "ParseError",
    "PlanView",
    "Quantifier",
    "ValueType",
    "canonical_equal",
    "canonicalize",
    "evaluate",
    "evaluate_many",
    "head_of",
    "match_keyed",
    "match_sets",
    "negate",
    "parse",
    "rates",
    "render",
]
