"""Scorer tests. Every expected number here is worked out by hand first.

The recurring example: gold {A, B, C} against predicted {A, B, D} gives
tp 2, fp 1, fn 1, so precision, recall, and F1 all equal 2/3.
"""

import random
from fractions import Fraction

import pytest

from tripdiag.diagnostics import (
    CaseResult,
    aggregate,
    confusion_csv,
    match_findings,
    poi_overlap,
    score_correction,
    score_extraction,
    score_identification,
    score_plan,
    score_tool_use,
)
from tripdiag.dsl import parse
from tripdiag.model import (
    ActivityItem,
    DayPlan,
    ErrorCategory,
    ErrorFinding,
    Itinerary,
    Kind,
    ToolCall,
)
from tripdiag.solver import SolveRequest, solve

import datetime as dt

D1 = dt.date(2026, 5, 1)

A, B, C, D = (
    "days(plan) == 3",
    "people_count(plan) == 2",
    "total_budget(plan) <= 700",
    "'thai' in cuisines(plan)",
)


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


class TestExtraction:
    def test_two_thirds_worked_example(self):
        result = score_extraction("c", [A, B, D], [parse(A), parse(B), parse(C)])
        p = result.payload
        assert (p["tp"], p["fp"], p["fn"]) == (2, 1, 1)
        assert p["precision"] == p["recall"] == p["f1"] == pytest.approx(2 / 3)
        assert not p["exact_match"] and not result.passed

    def test_pass_requires_exact_set_match(self):
        result = score_extraction("c", [B, A], [parse(A), parse(B)])
        assert result.passed
        assert result.payload["exact_match"]

    def test_equivalent_spelling_matches(self):
        result = score_extraction("c", ["3 == days(plan)"], [parse(A)])
        assert result.payload["tp"] == 1
        assert result.passed

    def test_unparseable_prediction_is_a_false_positive(self):
        result = score_extraction("c", ["days(plan) ===== 3"], [parse(A)])
        p = result.payload
        assert (p["tp"], p["fp"], p["fn"]) == (0, 1, 1)
        assert len(p["unparsed"]) == 1
        assert p["per_head"]["unparseable"]["fp"] == 1

    def test_over_flagging_halves_precision(self):
        result = score_extraction("c", [A, B], [parse(A)])
        p = result.payload
        assert p["precision"] == pytest.approx(1 / 2)
        assert p["recall"] == pytest.approx(1.0)
        assert p["f1"] == pytest.approx(2 / 3)

    def test_per_head_counts_sum_to_totals(self):
        result = score_extraction("c", [A, B, D, "garbage(("], [parse(A), parse(B), parse(C)])
        p = result.payload
        assert sum(h["tp"] for h in p["per_head"].values()) == p["tp"]
        assert sum(h["fp"] for h in p["per_head"].values()) == p["fp"]
        assert sum(h["fn"] for h in p["per_head"].values()) == p["fn"]
        assert p["per_head"]["total_budget"]["fn"] == 1
        assert p["per_head"]["cuisines"]["fp"] == 1


# ---------------------------------------------------------------------------
# tool use
# ---------------------------------------------------------------------------


def _call(tool, **kw):
    return ToolCall(tool, tuple(kw.items()))


GOLD_CALLS = (
    _call("FlightSearch", origin="Arden", destination="Brightwater", date="2026-05-01"),
    _call("AccommodationSearch", city="Brightwater"),
    _call("AttractionSearch", city="Brightwater"),
    _call("RestaurantSearch", city="Brightwater"),
)


class TestToolUse:
    def test_perfect_sequence(self):
        result = score_tool_use("c", list(GOLD_CALLS), GOLD_CALLS)
        p = result.payload
        assert result.passed
        assert p["tool_accuracy"] == p["param_accuracy"] == p["overall_accuracy"] == 1.0
        assert p["extra_pred_calls"] == 0

    def test_half_right_worked_example(self):
        preds = [
            GOLD_CALLS[0],
            GOLD_CALLS[1],
            _call("RestaurantSearch", city="Brightwater"),  # wrong tool, right shape
            _call("RestaurantSearch", city="Caldera"),      # right tool, wrong city
        ]
        p = score_tool_use("c", preds, GOLD_CALLS).payload
        assert p["tool_accuracy"] == pytest.approx(3 / 4)
        assert p["param_accuracy"] == pytest.approx(3 / 4)
        assert p["overall_accuracy"] == pytest.approx(2 / 4)

    def test_overall_never_exceeds_either_accuracy(self):
        rng = random.Random(404)
        tools = ["FlightSearch", "AccommodationSearch", "AttractionSearch", "RestaurantSearch"]
        for _ in range(100):
            preds = []
            for gold in GOLD_CALLS:
                tool = gold.tool_name if rng.random() < 0.6 else rng.choice(tools)
                args = tuple(
                    (k, v if rng.random() < 0.6 else "Elsewhere") for k, v in gold.arguments
                )
                preds.append(ToolCall(tool, args))
            p = score_tool_use("c", preds, GOLD_CALLS).payload
            assert p["overall_accuracy"] <= min(p["tool_accuracy"], p["param_accuracy"])

    def test_missing_tail_call(self):
        p = score_tool_use("c", [GOLD_CALLS[0]], GOLD_CALLS[:2]).payload
        assert p["calls"][1]["missing"] is True
        assert p["overall_accuracy"] == pytest.approx(1 / 2)

    def test_extra_calls_block_the_pass(self):
        preds = list(GOLD_CALLS) + [_call("RestaurantSearch", city="Caldera")]
        result = score_tool_use("c", preds, GOLD_CALLS)
        assert not result.passed
        assert result.payload["extra_pred_calls"] == 1
        assert result.payload["overall_accuracy"] == 1.0  # the graded prefix was right

    def test_confusion_pairs_count_across_cases(self):
        gold = (_call("intercity_transport_select", origin="A", destination="B", mode="train", earliest="06:00"),)
        pred = (_call("goto", origin="A", destination="B", mode="train", earliest="06:00"),)
        results = [score_tool_use(f"c{i}", list(pred), gold) for i in range(3)]
        report = aggregate(results)
        pair = report["tool_use"]["confusion_pairs"][0]
        assert pair == {"gold_tool": "intercity_transport_select", "pred_tool": "goto", "count": 3}
        csv = confusion_csv(report)
        assert "intercity_transport_select,goto,3" in csv


# ---------------------------------------------------------------------------
# plan generation
# ---------------------------------------------------------------------------


def _solved(tiny_catalog, query, *texts, neg=()):
    req = SolveRequest(
        query=query, constraints=tuple(parse(t) for t in texts), neg_subset=frozenset(neg)
    )
    outcome = solve(req, tiny_catalog)
    assert outcome.status == "feasible"
    return outcome.plan


class TestPlanScoring:
    def test_valid_plan_passes_with_full_overlap(self, tiny_catalog, q_bw):
        plan = _solved(tiny_catalog, q_bw, A)
        result = score_plan(
            "c", plan.to_doc(), [parse(A)], tiny_catalog, q_bw,
            ref_plan=plan, context_level="minimal",
        )
        assert result.passed
        p = result.payload
        assert p["schema_ok"] and p["categories"] == []
        assert p["poi_match"] is True
        assert p["poi_coverage"] == 1.0
        assert p["context_level"] == "minimal"

    def test_schema_failure_short_circuits(self, tiny_catalog, q_bw):
        result = score_plan("c", {"query_id": "q"}, [parse(A)], tiny_catalog, q_bw)
        assert not result.passed
        assert result.payload["schema_ok"] is False
        assert result.payload["categories"] == ["schema_error"]

    def test_violations_become_categories(self, tiny_catalog, q_bw):
        plan = _solved(tiny_catalog, q_bw, C, neg={0})  # spends over budget on purpose
        result = score_plan("c", plan.to_doc(), [parse(C)], tiny_catalog, q_bw)
        assert not result.passed
        assert result.payload["categories"] == ["total_budget"]

    def test_poi_overlap_three_of_six(self):
        def mk(ids):
            items = tuple(
                ActivityItem(kind=Kind.ATTRACTION, poi_id=i, unit_cost=0, quantity=1) for i in ids
            )
            return Itinerary(query_id="q", days=(DayPlan(date=D1, items=items),))

        ref = mk(["a", "b", "c", "d", "e", "f"])
        pred = mk(["a", "b", "c"])
        matched, coverage = poi_overlap(pred, ref)
        assert matched is False
        assert coverage == Fraction(1, 2)

    def test_poi_overlap_is_a_multiset_match(self):
        def mk(ids):
            items = tuple(
                ActivityItem(kind=Kind.ATTRACTION, poi_id=i, unit_cost=0, quantity=1) for i in ids
            )
            return Itinerary(query_id="q", days=(DayPlan(date=D1, items=items),))

        matched, coverage = poi_overlap(mk(["a", "a"]), mk(["a"]))
        assert matched is False  # repeat count differs
        assert coverage == Fraction(1)


# ---------------------------------------------------------------------------
# identification
# ---------------------------------------------------------------------------


def finding(category, text=None):
    return ErrorFinding(
        category=ErrorCategory(category),
        constraint=parse(text) if text else None,
    )


GOLD3 = (
    finding("total_budget", C),
    finding("room_type", "'shared room' in room_types(plan)"),
    finding("cuisine", D),
)


def fdoc(category, text=None):
    doc = {"category": category}
    if text:
        doc["constraint"] = text
    return doc


class TestIdentification:
    def test_two_of_three_found(self):
        preds = [fdoc("total_budget", C), fdoc("room_type", "'shared room' in room_types(plan)")]
        result = score_identification("c", preds, GOLD3)
        p = result.payload
        assert (p["tp"], p["fp"], p["fn"]) == (2, 0, 1)
        assert p["recall"] == pytest.approx(2 / 3)
        assert p["precision"] == 1.0
        assert not result.passed

    def test_exact_match_passes(self):
        preds = [fdoc("cuisine", D), fdoc("total_budget", C),
                 fdoc("room_type", "'shared room' in room_types(plan)")]
        assert score_identification("c", preds, GOLD3).passed

    def test_constraint_equivalence_not_string_equality(self):
        preds = [fdoc("total_budget", "700 >= total_budget(plan)")]
        result = score_identification("c", preds, GOLD3[:1])
        assert result.payload["tp"] == 1

    def test_same_category_wrong_constraint_misses(self):
        preds = [fdoc("total_budget", "total_budget(plan) <= 9")]
        result = score_identification("c", preds, GOLD3[:1])
        assert (result.payload["tp"], result.payload["fp"]) == (0, 1)

    def test_category_only_prediction_matches(self):
        preds = [fdoc("total_budget")]
        assert score_identification("c", preds, GOLD3[:1]).payload["tp"] == 1

    def test_malformed_findings_count_as_false_positives(self):
        preds = [fdoc("total_budget", C), "nonsense", {"category": "not_a_category"}]
        p = score_identification("c", preds, GOLD3[:1]).payload
        assert p["malformed_findings"] == 2
        assert (p["tp"], p["fp"], p["fn"]) == (1, 2, 0)

    def test_error_count_defaults_to_gold_size(self):
        assert score_identification("c", [], GOLD3).payload["error_count"] == 3
        assert score_identification("c", [], GOLD3, error_count=2).payload["error_count"] == 2

    def test_match_findings_mirrors_set_matcher_on_duplicates(self):
        preds = [("total_budget", parse(C)), ("total_budget", parse("700 >= total_budget(plan)"))]
        tp, fp, fn, pairing = match_findings(preds, GOLD3[:1])
        assert (tp, fp, fn) == (2, 0, 0)
        assert pairing == [(0, 0), (1, 0)]


# ---------------------------------------------------------------------------
# correction
# ---------------------------------------------------------------------------


TEXTS3 = (C, "'shared room' in room_types(plan)", D)


class TestCorrection:
    def test_full_fix_has_zero_persistence(self, tiny_catalog, q_bw):
        fixed = _solved(tiny_catalog, q_bw, *TEXTS3)
        result = score_correction("c", fixed.to_doc(), GOLD3, [parse(t) for t in TEXTS3],
                                  tiny_catalog, q_bw)
        assert result.passed
        assert result.payload["persistence"] == 0.0
        assert result.payload["recurring_categories"] == []

    def test_one_of_three_recurs(self, tiny_catalog, q_bw):
        still_over_budget = _solved(tiny_catalog, q_bw, *TEXTS3, neg={0})
        result = score_correction("c", still_over_budget.to_doc(), GOLD3,
                                  [parse(t) for t in TEXTS3], tiny_catalog, q_bw)
        assert not result.passed
        assert result.payload["persistence"] == pytest.approx(1 / 3)
        assert result.payload["recurring_categories"] == ["total_budget"]
        assert result.payload["error_count"] == 3

    def test_schema_broken_correction_has_null_persistence(self, tiny_catalog, q_bw):
        result = score_correction("c", {"query_id": "q"}, GOLD3,
                                  [parse(t) for t in TEXTS3], tiny_catalog, q_bw)
        assert not result.passed
        assert result.payload["persistence"] is None
        assert result.payload["categories"] == ["schema_error"]

    def test_requires_original_findings(self, tiny_catalog, q_bw):
        with pytest.raises(ValueError):
            score_correction("c", {}, (), (), tiny_catalog, q_bw)

    def test_new_unrelated_violation_fails_without_persisting(self, tiny_catalog, q_bw):
        # keeps the original three fixed but now repeats an attraction
        fixed = _solved(tiny_catalog, q_bw, *TEXTS3)
        doc = fixed.to_doc()
        attractions = [
            (di, ii) for di, day in enumerate(doc["days"])
            for ii, it in enumerate(day["items"]) if it["kind"] == "attraction"
        ]
        (d0, i0), (d1, i1) = attractions[0], attractions[1]
        doc["days"][d1]["items"][i1] = dict(doc["days"][d0]["items"][i0])
        result = score_correction("c", doc, GOLD3, [parse(t) for t in TEXTS3],
                                  tiny_catalog, q_bw)
        assert not result.passed
        assert result.payload["persistence"] == 0.0
        assert "repeated_activity" in result.payload["categories"]


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


class TestAggregate:
    def test_empty_batch(self):
        report = aggregate([])
        assert report["cases_total"] == 0
        assert report["pass_rate_overall"] is None

    def test_extraction_micro_metrics_worked_example(self):
        result = score_extraction("c", [A, B, D], [parse(A), parse(B), parse(C)])
        report = aggregate([result])
        section = report["extraction"]
        assert section["micro_precision"] == pytest.approx(2 / 3)
        assert section["micro_recall"] == pytest.approx(2 / 3)
        assert section["micro_f1"] == pytest.approx(2 / 3)
        assert section["exact_match_rate"] == 0.0

    def test_micro_counts_are_summed_not_averaged(self):
        rng = random.Random(77)
        pool = [A, B, C, D, "days(plan) == 2", "'no pets' in house_rules(plan)"]
        results = []
        tally = {"tp": 0, "fp": 0, "fn": 0}
        for i in range(100):
            gold = rng.sample(pool, rng.randint(1, 4))
            pred = rng.sample(pool, rng.randint(0, 4))
            result = score_extraction(f"c{i:03}", pred, [parse(t) for t in gold])
            results.append(result)
            for key in tally:
                tally[key] += result.payload[key]
        section = aggregate(results)["extraction"]
        assert section["tp"] == tally["tp"]
        assert section["fp"] == tally["fp"]
        assert section["fn"] == tally["fn"]
        assert section["micro_precision"] == pytest.approx(
            tally["tp"] / (tally["tp"] + tally["fp"])
        )
        assert section["micro_recall"] == pytest.approx(
            tally["tp"] / (tally["tp"] + tally["fn"])
        )

    def test_macro_differs_from_micro_when_cases_are_skewed(self):
        # one perfect small case, one bad big case
        perfect = score_extraction("c1", [A], [parse(A)])
        bad = score_extraction("c2", [], [parse(B), parse(C), parse(D)])
        section = aggregate([perfect, bad])["extraction"]
        assert section["macro_recall"] == pytest.approx(1 / 2)   # mean(1, 0)
        assert section["micro_recall"] == pytest.approx(1 / 4)   # 1 of 4 golds

    def test_plan_gen_sections(self, tiny_catalog, q_bw):
        plan = _solved(tiny_catalog, q_bw, A)
        broken = _solved(tiny_catalog, q_bw, C, neg={0})
        results = [
            score_plan("q1.plan_gen.minimal", plan.to_doc(), [parse(A)], tiny_catalog, q_bw,
                       ref_plan=plan, context_level="minimal"),
            score_plan("q2.plan_gen.minimal", broken.to_doc(), [parse(C)], tiny_catalog, q_bw,
                       ref_plan=plan, context_level="minimal"),
            score_plan("q3.plan_gen.moderate", plan.to_doc(), [parse(A)], tiny_catalog, q_bw,
                       ref_plan=plan, context_level="moderate"),
        ]
        section = aggregate(results)["plan_gen"]
        assert section["cases"] == 3
        assert section["pass_rate"] == pytest.approx(2 / 3)
        assert section["by_context_level"]["minimal"] == {
            "cases": 2, "passed": 1, "pass_rate": 0.5,
        }
        assert section["by_context_level"]["moderate"]["pass_rate"] == 1.0
        assert section["error_categories"] == {"total_budget": 1}
        assert section["poi_match_rate"] == 1.0  # over passing cases only

    def test_identification_by_error_count(self):
        one = score_identification("c1", [fdoc("total_budget", C)], GOLD3[:1])
        three = score_identification("c2", [fdoc("total_budget", C)], GOLD3)
        section = aggregate([one, three])["identification"]
        assert section["by_error_count"]["1"]["micro_recall"] == 1.0
        assert section["by_error_count"]["3"]["micro_recall"] == pytest.approx(1 / 3)

    def test_correction_persistence_skips_nulls(self, tiny_catalog, q_bw):
        exprs = [parse(t) for t in TEXTS3]
        fixed = _solved(tiny_catalog, q_bw, *TEXTS3)
        partial = _solved(tiny_catalog, q_bw, *TEXTS3, neg={0})
        results = [
            score_correction("c1", fixed.to_doc(), GOLD3, exprs, tiny_catalog, q_bw),
            score_correction("c2", partial.to_doc(), GOLD3, exprs, tiny_catalog, q_bw),
            score_correction("c3", {"query_id": "q"}, GOLD3, exprs, tiny_catalog, q_bw),
        ]
        section = aggregate(results)["correction"]
        assert section["cases"] == 3
        assert section["pass_rate"] == pytest.approx(1 / 3)
        assert section["persistence"] == pytest.approx((0 + 1 / 3) / 2)
        assert section["persistence_by_error_count"] == {
            "3": pytest.approx((0 + 1 / 3) / 2),
        }

    def test_overall_pass_rate_spans_subtasks(self, tiny_catalog, q_bw):
        plan = _solved(tiny_catalog, q_bw, A)
        results: list[CaseResult] = [
            score_extraction("a", [A], [parse(A)]),                        # pass
            score_extraction("b", [], [parse(A)]),                         # fail
            score_plan("c", plan.to_doc(), [parse(A)], tiny_catalog, q_bw),  # pass
            score_tool_use("d", [], GOLD_CALLS),                           # fail
            score_tool_use("e", list(GOLD_CALLS), GOLD_CALLS),             # pass
        ]
        report = aggregate(results)
        assert report["cases_total"] == 5
        assert report["pass_rate_overall"] == pytest.approx(3 / 5)
