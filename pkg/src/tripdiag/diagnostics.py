"""Scoring for the five sub-tasks, and batch aggregation.

Every ``score_*`` function produces one CaseResult whose ``payload`` holds
everything the aggregator reads: tp/fp/fn counts as plain ints, per-call
verdicts, context level, error counts. That keeps every batch-level number
recomputable from the per-case records alone. Rates are computed in exact
fractions and serialized as floats.

Pass definitions:

* extraction       predicted constraint set exactly matches the gold set
* tool_use         every call correct (name and arguments), none extra
* plan_gen         schema-valid and the verifier finds nothing
* identification   predicted finding set exactly matches the injected set
* correction       corrected plan schema-valid and verifies clean
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence

from .catalog import PoiCatalog
from .dsl import canonical_equal, match_sets, parse, rates
from .dsl import ast as dast
from .model import (
    ErrorCategory,
    ErrorFinding,
    Itinerary,
    Query,
    SchemaErrorList,
    ToolCall,
    validate_schema,
)
from .sandbox import validate_call
from .solver import verify

SUBTASKS = ("extraction", "tool_use", "plan_gen", "identification", "correction")


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    subtask: str
    passed: bool
    payload: dict

    def to_doc(self) -> dict:
        return {
            "case_id": self.case_id,
            "subtask": self.subtask,
            "pass": self.passed,
            "payload": self.payload,
        }


def _f(x: Optional[Fraction]) -> Optional[float]:
    return None if x is None else float(x)


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


def _head_name(expr: dast.ConstraintExpr) -> str:
    head = dast.head_of(expr)
    return head.value if head is not None else "none"


def score_extraction(
    case_id: str,
    pred_texts: Sequence[str],
    gold: Sequence[dast.ConstraintExpr],
) -> CaseResult:
    """Set match of predicted constraint strings against the gold set.

    Unparseable predictions count as unmatched predictions (false
    positives); the per-head table buckets matched pairs under the gold
    constraint's head so the per-head counts always sum to the totals.
    """
    preds: list[dast.ConstraintExpr] = []
    unparsed: list[dict] = []
    for text in pred_texts:
        try:
            preds.append(parse(text))
        except Exception as exc:  # any malformed prediction is a false positive
            unparsed.append({"text": str(text), "error": str(exc)})

    report = match_sets(preds, list(gold))
    tp = report.tp
    fp = report.fp + len(unparsed)
    fn = report.fn
    precision, recall, f1 = rates(tp, fp, fn)
    exact = fp == 0 and fn == 0

    per_head: dict[str, dict[str, int]] = {}

    def bucket(head: str) -> dict[str, int]:
        return per_head.setdefault(head, {"tp": 0, "fp": 0, "fn": 0})

    # pairing[pi] is the matched gold index for prediction pi, None if unmatched
    matched_golds = {gi for gi in report.pairing if gi is not None}
    for pi, gi in enumerate(report.pairing):
        if gi is not None:
            bucket(_head_name(gold[gi]))["tp"] += 1
        else:
            bucket(_head_name(preds[pi]))["fp"] += 1
    for entry in unparsed:
        bucket("unparseable")["fp"] += 1
    for gi, g in enumerate(gold):
        if gi not in matched_golds:
            bucket(_head_name(g))["fn"] += 1

    payload = {
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "precision": _f(precision),
        "recall": _f(recall),
        "f1": _f(f1),
        "exact_match": exact,
        "pairing": list(report.pairing),
        "unparsed": unparsed,
        "per_head": {h: per_head[h] for h in sorted(per_head)},
    }
    return CaseResult(case_id=case_id, subtask="extraction", passed=exact, payload=payload)


# ---------------------------------------------------------------------------
# tool use
# ---------------------------------------------------------------------------


def score_tool_use(
    case_id: str,
    pred_calls: Sequence[ToolCall],
    gold_calls: Sequence[ToolCall],
) -> CaseResult:
    """Positional comparison of predicted calls against the gold sequence."""
    verdicts: list[dict] = []
    tool_hits = 0
    param_hits = 0
    overall_hits = 0
    for i, gold in enumerate(gold_calls):
        if i < len(pred_calls):
            doc = validate_call(pred_calls[i], gold).to_doc()
        else:
            doc = {
                "gold_tool": gold.tool_name,
                "pred_tool": None,
                "tool_ok": False,
                "params_ok": False,
                "overall_ok": False,
                "args": [],
                "missing": True,
            }
        verdicts.append(doc)
        tool_hits += bool(doc["tool_ok"])
        param_hits += bool(doc["params_ok"])
        overall_hits += bool(doc["overall_ok"])
    n = len(gold_calls)
    extra = max(0, len(pred_calls) - n)
    passed = overall_hits == n and extra == 0
    payload = {
        "calls": verdicts,
        "gold_call_count": n,
        "extra_pred_calls": extra,
        "tool_accuracy": _f(Fraction(tool_hits, n)) if n else 1.0,
        "param_accuracy": _f(Fraction(param_hits, n)) if n else 1.0,
        "overall_accuracy": _f(Fraction(overall_hits, n)) if n else 1.0,
    }
    return CaseResult(case_id=case_id, subtask="tool_use", passed=passed, payload=payload)


# ---------------------------------------------------------------------------
# plan generation
# ---------------------------------------------------------------------------


def poi_overlap(pred_plan: Itinerary, ref_plan: Itinerary) -> tuple[bool, Fraction]:
    """(full multiset match, overlap ratio against the reference POI set)."""
    pred_ids = pred_plan.poi_ids()
    ref_ids = ref_plan.poi_ids()
    matched = Counter(pred_ids) == Counter(ref_ids)
    ref_set = set(ref_ids)
    if not ref_set:
        return matched, Fraction(1)
    coverage = Fraction(len(set(pred_ids) & ref_set), len(ref_set))
    return matched, coverage


def score_plan(
    case_id: str,
    raw_plan: Any,
    constraints: Sequence[dast.ConstraintExpr],
    catalog: PoiCatalog,
    query: Query,
    *,
    ref_plan: Optional[Itinerary] = None,
    context_level: Optional[str] = None,
    subtask: str = "plan_gen",
) -> CaseResult:
    """Schema gate, then full verification; optionally POI overlap vs gold."""
    checked = validate_schema(raw_plan, query)
    if isinstance(checked, SchemaErrorList):
        payload = {
            "schema_ok": False,
            "schema_errors": checked.to_doc()["schema_errors"],
            "categories": [ErrorCategory.SCHEMA_ERROR.value],
            "findings": [{"category": ErrorCategory.SCHEMA_ERROR.value}],
            "context_level": context_level,
        }
        return CaseResult(case_id=case_id, subtask=subtask, passed=False, payload=payload)

    findings = verify(checked, constraints, catalog, query)
    passed = not findings
    payload = {
        "schema_ok": True,
        "findings": [f.to_doc() for f in findings],
        "categories": sorted({f.category.value for f in findings}),
        "total_cost": checked.total_cost,
        "context_level": context_level,
    }
    if ref_plan is not None:
        matched, coverage = poi_overlap(checked, ref_plan)
        payload["poi_match"] = matched
        payload["poi_coverage"] = _f(coverage)
    return CaseResult(case_id=case_id, subtask=subtask, passed=passed, payload=payload)


# ---------------------------------------------------------------------------
# error identification
# ---------------------------------------------------------------------------


def _parse_pred_finding(doc: Any) -> Optional[tuple[str, Optional[dast.ConstraintExpr]]]:
    """(category, optional constraint) from one predicted finding document."""
    if not isinstance(doc, Mapping):
        return None
    category = doc.get("category")
    if not isinstance(category, str):
        return None
    try:
        category = ErrorCategory(category).value
    except ValueError:
        return None
    constraint = None
    raw = doc.get("constraint")
    if isinstance(raw, str) and raw.strip():
        try:
            constraint = parse(raw)
        except Exception:  # noqa: BLE001 - constraint stays None, category still counts
            constraint = None
    return category, constraint


def match_findings(
    preds: Sequence[tuple[str, Optional[dast.ConstraintExpr]]],
    golds: Sequence[ErrorFinding],
) -> tuple[int, int, int, list[tuple[int, int]]]:
    """Greedy finding match: same category, and equal constraints when both
    sides carry one. Returns (tp, fp, fn, pairing)."""
    pairing: list[tuple[int, int]] = []
    matched_golds: set[int] = set()
    tp = 0
    for pi, (category, constraint) in enumerate(preds):
        hit = None
        for gi, gold in enumerate(golds):
            if gold.category.value != category:
                continue
            if (
                constraint is not None
                and gold.constraint is not None
                and not canonical_equal(constraint, gold.constraint)
            ):
                continue
            hit = gi
            break
        if hit is not None:
            tp += 1
            pairing.append((pi, hit))
            matched_golds.add(hit)
    fp = len(preds) - tp
    fn = len(golds) - len(matched_golds)
    return tp, fp, fn, pairing


def score_identification(
    case_id: str,
    pred_findings: Sequence[Any],
    gold_findings: Sequence[ErrorFinding],
    *,
    error_count: Optional[int] = None,
) -> CaseResult:
    parsed: list[tuple[str, Optional[dast.ConstraintExpr]]] = []
    malformed = 0
    for doc in pred_findings:
        entry = _parse_pred_finding(doc)
        if entry is None:
            malformed += 1
        else:
            parsed.append(entry)
    tp, fp, fn, pairing = match_findings(parsed, gold_findings)
    fp += malformed
    precision, recall, f1 = rates(tp, fp, fn)
    exact = fp == 0 and fn == 0
    payload = {
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "precision": _f(precision),
        "recall": _f(recall),
        "f1": _f(f1),
        "exact_match": exact,
        "pairing": [list(p) for p in pairing],
        "malformed_findings": malformed,
        "error_count": error_count if error_count is not None else len(gold_findings),
    }
    return CaseResult(
        case_id=case_id, subtask="identification", passed=exact, payload=payload
    )


# ---------------------------------------------------------------------------
# correction
# ---------------------------------------------------------------------------


def score_correction(
    case_id: str,
    corrected_raw: Any,
    original_findings: Sequence[ErrorFinding],
    constraints: Sequence[dast.ConstraintExpr],
    catalog: PoiCatalog,
    query: Query,
) -> CaseResult:
    """Correction pass/fail plus error persistence.

    Persistence is the share of originally flagged findings whose category
    shows up again in the corrected plan's verification. A corrected plan
    that does not even pass the schema gate has no verifiable categories;
    its persistence is recorded as null and skipped in aggregation.
    """
    if not original_findings:
        raise ValueError("correction cases require a non-empty original finding list")
    original_categories = {f.category.value for f in original_findings}
    n_original = len(original_findings)

    checked = validate_schema(corrected_raw, query)
    if isinstance(checked, SchemaErrorList):
        payload = {
            "schema_ok": False,
            "schema_errors": checked.to_doc()["schema_errors"],
            "categories": [ErrorCategory.SCHEMA_ERROR.value],
            "persistence": None,
            "error_count": n_original,
        }
        return CaseResult(case_id=case_id, subtask="correction", passed=False, payload=payload)

    findings = verify(checked, constraints, catalog, query)
    new_categories = {f.category.value for f in findings}
    recurring = sorted(new_categories & original_categories)
    persistence = Fraction(len(recurring), n_original)
    passed = not findings
    payload = {
        "schema_ok": True,
        "findings": [f.to_doc() for f in findings],
        "categories": sorted(new_categories),
        "recurring_categories": recurring,
        "persistence": _f(persistence),
        "error_count": n_original,
        "total_cost": checked.total_cost,
    }
    return CaseResult(case_id=case_id, subtask="correction", passed=passed, payload=payload)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


def _mean(values: Sequence[Fraction]) -> Optional[Fraction]:
    if not values:
        return None
    return sum(values, Fraction(0)) / len(values)


def _frac(x: Any) -> Fraction:
    return Fraction(x).limit_denominator(10**9) if isinstance(x, float) else Fraction(x)


def _aggregate_set_metrics(results: list[CaseResult]) -> dict:
    tp = sum(r.payload["tp"] for r in results)
    fp = sum(r.payload["fp"] for r in results)
    fn = sum(r.payload["fn"] for r in results)
    precision, recall, f1 = rates(tp, fp, fn)
    # macro rates recomputed from the per-case integer counts: exact, and
    # provably recomputable from the emitted records
    per_case = [rates(r.payload["tp"], r.payload["fp"], r.payload["fn"]) for r in results]
    macro_p = _mean([p for p, _, _ in per_case])
    macro_r = _mean([r for _, r, _ in per_case])
    macro_f = _mean([f for _, _, f in per_case])
    return {
        "cases": len(results),
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "micro_precision": _f(precision),
        "micro_recall": _f(recall),
        "micro_f1": _f(f1),
        "macro_precision": _f(macro_p),
        "macro_recall": _f(macro_r),
        "macro_f1": _f(macro_f),
        "exact_match_rate": _f(_mean([Fraction(int(r.payload["exact_match"])) for r in results])),
    }


def aggregate(results: Sequence[CaseResult]) -> dict:
    """Batch report over per-case results, grouped by subtask.

    Deterministic: results are folded in case-id order regardless of the
    order they were produced in.
    """
    ordered = sorted(results, key=lambda r: r.case_id)
    by_subtask: dict[str, list[CaseResult]] = {name: [] for name in SUBTASKS}
    for result in ordered:
        by_subtask.setdefault(result.subtask, []).append(result)
    report: dict[str, Any] = {
        "cases_total": len(ordered),
        "pass_rate_overall": _f(
            _mean([Fraction(int(r.passed)) for r in ordered])
        ) if ordered else None,
    }

    # extraction
    extraction = by_subtask["extraction"]
    if extraction:
        section = _aggregate_set_metrics(extraction)
        per_head: dict[str, dict[str, int]] = {}
        for result in extraction:
            for head, counts in result.payload["per_head"].items():
                agg = per_head.setdefault(head, {"tp": 0, "fp": 0, "fn": 0})
                for key in ("tp", "fp", "fn"):
                    agg[key] += counts[key]
        section["per_head"] = {
            head: {
                **counts,
                "precision": _f(rates(counts["tp"], counts["fp"], counts["fn"])[0]),
                "recall": _f(rates(counts["tp"], counts["fp"], counts["fn"])[1]),
            }
            for head, counts in sorted(per_head.items())
        }
        report["extraction"] = section

    # tool use
    tool = by_subtask["tool_use"]
    if tool:
        calls = [c for r in tool for c in r.payload["calls"]]
        n = len(calls)
        confusion: Counter[tuple[str, str]] = Counter()
        for call in calls:
            if not call["tool_ok"]:
                confusion[(call["gold_tool"], call["pred_tool"] or "")] += 1
        report["tool_use"] = {
            "cases": len(tool),
            "calls": n,
            "tool_accuracy": _f(Fraction(sum(c["tool_ok"] for c in calls), n)) if n else None,
            "param_accuracy": _f(Fraction(sum(c["params_ok"] for c in calls), n)) if n else None,
            "overall_accuracy": _f(Fraction(sum(c["overall_ok"] for c in calls), n)) if n else None,
            "pass_rate": _f(_mean([Fraction(int(r.passed)) for r in tool])),
            "confusion_pairs": [
                {"gold_tool": g, "pred_tool": p, "count": c}
                for (g, p), c in sorted(
                    confusion.items(), key=lambda kv: (-kv[1], kv[0])
                )
            ],
        }

    # plan generation
    plans = by_subtask["plan_gen"]
    if plans:
        categories: Counter[str] = Counter()
        for result in plans:
            categories.update(result.payload.get("categories", []))
        correct = [r for r in plans if r.passed]
        with_overlap = [r for r in correct if "poi_match" in r.payload]
        by_level: dict[str, dict] = {}
        for result in plans:
            level = result.payload.get("context_level") or "unspecified"
            slot = by_level.setdefault(level, {"cases": 0, "passed": 0})
            slot["cases"] += 1
            slot["passed"] += int(result.passed)
        report["plan_gen"] = {
            "cases": len(plans),
            "pass_rate": _f(_mean([Fraction(int(r.passed)) for r in plans])),
            "by_context_level": {
                level: {
                    **slot,
                    "pass_rate": _f(Fraction(slot["passed"], slot["cases"])),
                }
                for level, slot in sorted(by_level.items())
            },
            "error_categories": dict(sorted(categories.items())),
            "poi_match_rate": _f(
                _mean([Fraction(int(r.payload["poi_match"])) for r in with_overlap])
            ),
            "poi_coverage": _f(
                _mean([_frac(r.payload["poi_coverage"]) for r in with_overlap])
            ),
        }

    # identification
    ident = by_subtask["identification"]
    if ident:
        section = _aggregate_set_metrics(ident)
        by_count: dict[int, list[CaseResult]] = {}
        for result in ident:
            by_count.setdefault(int(result.payload["error_count"]), []).append(result)
        section["by_error_count"] = {
            str(count): _aggregate_set_metrics(group)
            for count, group in sorted(by_count.items())
        }
        report["identification"] = section

    # correction
    corr = by_subtask["correction"]
    if corr:
        def persistences(group: Sequence[CaseResult]) -> list[Fraction]:
            return [
                _frac(r.payload["persistence"]) for r in group
                if r.payload.get("persistence") is not None
            ]

        by_count_c: dict[int, list[CaseResult]] = {}
        for result in corr:
            by_count_c.setdefault(int(result.payload["error_count"]), []).append(result)
        report["correction"] = {
            "cases": len(corr),
            "pass_rate": _f(_mean([Fraction(int(r.passed)) for r in corr])),
            "persistence": _f(_mean(persistences(corr))),
            "persistence_by_error_count": {
                str(count): _f(_mean(persistences(group)))
                for count, group in sorted(by_count_c.items())
            },
        }

    return report


def confusion_csv(report: dict) -> str:
    """Confusion pairs as CSV text (gold_tool, pred_tool, count)."""
    rows = ["gold_tool,pred_tool,count"]
    for entry in report.get("tool_use", {}).get("confusion_pairs", []):
        rows.append(f"{entry['gold_tool']},{entry['pred_tool']},{entry['count']}")
    return "\n".join(rows) + "\n"


__all__ = [
    "SUBTASKS",
    "CaseResult",
    "aggregate",
    "confusion_csv",
    "match_findings",
    "poi_overlap",
    "score_correction",
    "score_extraction",
    "score_identification",
    "score_plan",
    "score_tool_use",
]
