"""Set matching between predicted and gold constraints.

Counting rules: every predicted item is greedily matched, in input order,
against the lowest-index gold item with an equal key; several predictions may
match the same gold item. ``tp`` counts matched predictions, ``fp`` unmatched
predictions, and ``fn`` is the number of gold items minus the number of
distinct gold indexes that got matched. A prediction list {A, A} against gold
{A} therefore scores tp=2, fp=0, fn=0 and is an exact match.

Rates are exact ``Fraction`` values. Empty sides use the vacuous convention:
precision is 1 with no predictions, recall is 1 with no gold items.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Optional, Sequence

from .ast import ConstraintExpr
from .canonical import canonicalize


@dataclass(frozen=True)
class MatchReport:
    tp: int
    fp: int
    fn: int
    precision: Fraction
    recall: Fraction
    f1: Fraction
    exact_match: bool
    pairing: tuple[Optional[int], ...]  # per prediction: matched gold index

    def to_doc(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": float(self.precision),
            "recall": float(self.recall),
            "f1": float(self.f1),
            "exact_match": self.exact_match,
            "pairing": list(self.pairing),
        }


def rates(tp: int, fp: int, fn: int) -> tuple[Fraction, Fraction, Fraction]:
    """(precision, recall, f1) under the vacuous-truth conventions."""
    precision = Fraction(tp, tp + fp) if tp + fp else Fraction(1)
    recall = Fraction(tp, tp + fn) if tp + fn else Fraction(1)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else Fraction(0)
    return precision, recall, f1


def match_keyed(pred_keys: Sequence[Hashable], gold_keys: Sequence[Hashable]) -> MatchReport:
    """Greedy many-to-one matching over arbitrary hashable keys."""
    first_index: dict[Hashable, int] = {}
    for idx, key in enumerate(gold_keys):
        first_index.setdefault(key, idx)
    pairing: list[Optional[int]] = []
    matched_gold: set[int] = set()
    tp = 0
    for key in pred_keys:
        idx = first_index.get(key)
        pairing.append(idx)
        if idx is not None:
            tp += 1
            matched_gold.add(idx)
    fp = len(pred_keys) - tp
    fn = len(gold_keys) - len(matched_gold)
    precision, recall, f1 = rates(tp, fp, fn)
    return MatchReport(
        tp=tp,
        fp=fp,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        exact_match=(fp == 0 and fn == 0),
        pairing=tuple(pairing),
    )


def match_sets(
    pred: Sequence[ConstraintExpr], gold: Sequence[ConstraintExpr]
) -> MatchReport:
    """Match predicted constraints to gold by canonical-form equality."""
    return match_keyed([canonicalize(p) for p in pred], [canonicalize(g) for g in gold])


__all__ = ["MatchReport", "match_keyed", "match_sets", "rates"]
