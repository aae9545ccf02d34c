"""Acceptance checklist: eight numbered end-to-end checks.

One test per check, each ending in a single PASS or FAIL verdict line
(visible with -s, or in the failure report).  Every numeric comparison
here is exact integer or rational arithmetic; there are no tolerances.
Runtime limits are asserted where a check carries one.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import itertools
import os
import random
import subprocess
import sys
import time

import pytest

from tripdiag.catalog import PoiCatalog
from tripdiag.contexts import ContextSpec, LEVEL_DISTRACTORS, build as build_context
from tripdiag.diagnostics import (
    aggregate,
    score_correction,
    score_extraction,
    score_tool_use,
)
from tripdiag.dsl import canonicalize, evaluate, negate, parse
from tripdiag.dsl.ast import head_of
from tripdiag.harness import (
    eligible_violation_indices,
    generate_dataset,
    gold_tool_calls,
    run,
)
from tripdiag.model import (
    ContextLevel,
    Kind,
    PoiRecord,
    Profile,
    Query,
    ToolCall,
    plan_from_doc,
)
from tripdiag.solver import SolveRequest, category_of, enumerate_all, solve, verify
from tripdiag.synth import AnnotatedQuery, GenSpec, generate

from .conftest import make_query
from .oracle_eval import oracle_eval, plan_facts, random_expr, random_plan


def _verdict(n: int, ok: bool, detail: str) -> None:
    print(f"check {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"check {n}: {detail}"


# ---------------------------------------------------------------------------
# shared fixtures
# ---------------------------------------------------------------------------

FULL_COVERAGE_CONSTRAINTS = (
    "days(plan) == 3",
    "people_number(plan) == 2",
    "total_budget(plan) <= 700",
    "'shared room' in room_types(plan)",
    "'thai' in cuisines(plan)",
)


@pytest.fixture(scope="module")
def closure_ds():
    catalog, annotated = generate(GenSpec(seed=2, cities=3, queries=4))
    return generate_dataset(catalog, annotated, seed=2)


@pytest.fixture(scope="module")
def full_coverage_ds(tiny_catalog):
    ann = AnnotatedQuery(query=make_query(), constraints=FULL_COVERAGE_CONSTRAINTS)
    return generate_dataset(tiny_catalog, [ann], seed=7)


# ---------------------------------------------------------------------------
# 1. solver self-consistency at scale
# ---------------------------------------------------------------------------


def test_01_solver_self_consistency():
    started = time.monotonic()
    cases = feasible_clean = violations_exact = 0
    worlds = 0
    for seed in range(20):
        catalog, annotated = generate(GenSpec(seed=seed, cities=3, queries=8))
        worlds += 1
        for ann in annotated:
            exprs = ann.parsed()
            outcome = solve(SolveRequest(ann.query, exprs), catalog)
            assert outcome.status == "feasible", (seed, ann.query.id)
            cases += 1
            if verify(outcome.plan, exprs, catalog, ann.query) == []:
                feasible_clean += 1
            eligible = eligible_violation_indices(exprs)
            for size in (1, 2, 3):
                for combo in itertools.combinations(eligible, size):
                    if len({head_of(exprs[i]) for i in combo}) != size:
                        continue
                    neg = solve(
                        SolveRequest(ann.query, exprs, neg_subset=frozenset(combo)),
                        catalog,
                    )
                    if neg.status != "feasible":
                        continue
                    cases += 1
                    got = sorted(
                        f.category.value
                        for f in verify(neg.plan, exprs, catalog, ann.query)
                    )
                    want = sorted(category_of(exprs[i]).value for i in combo)
                    if got == want:
                        violations_exact += 1
        if cases >= 520:
            break
    elapsed = time.monotonic() - started
    clean = feasible_clean + violations_exact == cases
    _verdict(
        1,
        cases >= 500 and clean and elapsed < 60.0,
        f"{cases} solver cases over {worlds} worlds, "
        f"{feasible_clean} feasible all clean, {violations_exact} violations all "
        f"exact, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 2. brute-force equivalence on small fixtures
# ---------------------------------------------------------------------------

_FX_CUISINES = ("thai", "italian", "bbq", "ramen")
_FX_ROOMS = ("entire home", "private room", "shared room")


def _fx_record(rid, kind, city, name, **attrs):
    for key in ("house_rules", "cuisines"):
        if key in attrs:
            attrs[key] = frozenset(attrs[key])
    return PoiRecord(id=rid, kind=kind, city=city, name=name, attributes=attrs)


def _equivalence_fixture(rng: random.Random):
    """A random world with at most 4 candidates per category and 3 days."""
    days = rng.randint(2, 3)
    people = rng.randint(1, 3)
    dates = tuple(dt.date(2026, 5, 1) + dt.timedelta(days=i) for i in range(days))
    records = []
    for i in range(rng.randint(1, 3)):
        depart = rng.randrange(360, 720, 30)
        arrive = rng.randrange(721, 900, 30)
        if rng.random() < 0.5:
            records.append(_fx_record(
                f"out-{i}", Kind.FLIGHT, "Arden", f"Out {i}",
                price=rng.randrange(4000, 30000, 100), mode="flight",
                origin="Arden", destination="Halst", date=dates[0].isoformat(),
                depart=depart, arrive=arrive))
        else:
            records.append(_fx_record(
                f"out-{i}", Kind.INTERCITY_TRANSIT, "Arden", f"Rail Out {i}",
                price=rng.randrange(3000, 12000, 100), mode="train",
                origin="Arden", destination="Halst", depart=depart, arrive=arrive))
    for i in range(rng.randint(1, 3)):
        depart = rng.randrange(900, 1200, 30)
        arrive = rng.randrange(1201, 1380, 30)
        if rng.random() < 0.5:
            records.append(_fx_record(
                f"back-{i}", Kind.FLIGHT, "Halst", f"Back {i}",
                price=rng.randrange(4000, 30000, 100), mode="flight",
                origin="Halst", destination="Arden", date=dates[-1].isoformat(),
                depart=depart, arrive=arrive))
        else:
            records.append(_fx_record(
                f"back-{i}", Kind.INTERCITY_TRANSIT, "Halst", f"Rail Back {i}",
                price=rng.randrange(3000, 12000, 100), mode="train",
                origin="Halst", destination="Arden", depart=depart, arrive=arrive))
    for i in range(rng.randint(1, 3)):
        records.append(_fx_record(
            f"acc-{i}", Kind.ACCOMMODATION, "Halst", f"Stay {i}",
            price=rng.randrange(2000, 9000, 100), rating=rng.randint(30, 50),
            room_type=rng.choice(_FX_ROOMS), max_occupancy=rng.randint(1, 3),
            house_rules=rng.sample(("no pets", "no smoking"), rng.randint(0, 2))))
    for i in range(rng.randint(1, 3)):
        records.append(_fx_record(
            f"res-{i}", Kind.RESTAURANT, "Halst", f"Table {i}",
            price=rng.randrange(800, 3000, 50), rating=rng.randint(30, 50),
            cuisines=rng.sample(_FX_CUISINES, rng.randint(1, 2))))
    for i in range(rng.randint(1, 4)):
        records.append(_fx_record(
            f"att-{i}", Kind.ATTRACTION, "Halst", f"Sight {i}",
            price=rng.randrange(0, 2500, 50), rating=rng.randint(30, 50)))
    catalog = PoiCatalog.from_records(records)
    query = Query(
        id="qfx", text="fixture trip", origin="Arden", destinations=("Halst",),
        dates=dates, people=people, profile=Profile.TP_LIKE,
    )
    texts = [f"days(plan) == {days}", f"people_number(plan) == {people}"]
    if rng.random() < 0.8:
        texts.append(f"total_budget(plan) <= {rng.randint(200, 1100)}")
    if rng.random() < 0.5:
        texts.append(f"'{rng.choice(_FX_CUISINES + ('durian',))}' in cuisines(plan)")
    if rng.random() < 0.3:
        texts.append(f"'{rng.choice(_FX_ROOMS)}' in room_types(plan)")
    return catalog, query, tuple(parse(t) for t in texts)


def test_02_brute_force_equivalence():
    rng = random.Random(20260821)
    fixtures = 220
    feasible = infeasible = disagreements = 0
    for _ in range(fixtures):
        catalog, query, exprs = _equivalence_fixture(rng)
        outcome = solve(SolveRequest(query, exprs), catalog)
        enumeration = enumerate_all(query, exprs, catalog, cap=60_000)
        if (outcome.status == "feasible") != bool(enumeration.plans):
            disagreements += 1
            continue
        if outcome.status == "feasible":
            feasible += 1
            docs = [p.to_doc() for p in enumeration.plans]
            assert outcome.plan.to_doc() in docs
        else:
            infeasible += 1
    _verdict(
        2,
        disagreements == 0 and fixtures >= 200 and feasible >= 30 and infeasible >= 30,
        f"{fixtures} fixtures, {feasible} feasible / {infeasible} infeasible, "
        f"{disagreements} disagreements",
    )


# ---------------------------------------------------------------------------
# 3. constraint language soundness on randomized pairs
# ---------------------------------------------------------------------------


def test_03_language_soundness(tiny_catalog):
    rng = random.Random(31337)
    query = make_query()
    pairs = 10_000
    negation_bad = idempotence_bad = oracle_bad = 0
    for _ in range(pairs):
        expr = random_expr(rng)
        plan = random_plan(rng, tiny_catalog, query)
        value = evaluate(expr, plan, tiny_catalog, query)
        if evaluate(negate(expr), plan, tiny_catalog, query) != (not value):
            negation_bad += 1
        canon = canonicalize(expr)
        if canonicalize(canon) != canon:
            idempotence_bad += 1
        facts = plan_facts(plan, tiny_catalog, query)
        if oracle_eval(expr, facts) != value:
            oracle_bad += 1
    _verdict(
        3,
        negation_bad == idempotence_bad == oracle_bad == 0,
        f"{pairs} randomized pairs: {negation_bad} negation failures, "
        f"{idempotence_bad} idempotence failures, {oracle_bad} oracle disagreements",
    )


# ---------------------------------------------------------------------------
# 4. context distractor counts and nesting
# ---------------------------------------------------------------------------


def test_04_context_levels():
    spec = GenSpec(
        seed=11, cities=3,
        accommodations_per_city=24, restaurants_per_city=26,
        attractions_per_city=26, queries=4,
    )
    catalog, annotated = generate(spec)
    dataset = generate_dataset(catalog, annotated, seed=11)
    exact_cells = 0
    nesting_breaks = 0
    count_misses = 0
    for ann in annotated:
        ref_doc = dataset.case(f"{ann.query.id}.plan_gen.minimal").gold["plan"]
        ref = plan_from_doc(ref_doc)
        ids_by_level = {}
        for level in (ContextLevel.MINIMAL, ContextLevel.MODERATE, ContextLevel.RICH):
            built = build_context(
                ref, None, catalog, ContextSpec.for_level(level, seed=11),
                query=ann.query, case_id=f"{ann.query.id}.check.{level.value}",
            )
            wanted = LEVEL_DISTRACTORS[level]
            for _cell, got in built.achieved:
                exact_cells += 1
                if got != wanted:
                    count_misses += 1
            ids_by_level[level] = set(built.context.record_ids)
            # the dataset case carries exactly these records
            case = dataset.case(f"{ann.query.id}.plan_gen.{level.value}")
            case_ids = {r["id"] for r in case.inputs["context"]["records"]}
            assert case_ids == ids_by_level[level]
        if not (
            ids_by_level[ContextLevel.MINIMAL]
            <= ids_by_level[ContextLevel.MODERATE]
            <= ids_by_level[ContextLevel.RICH]
        ):
            nesting_breaks += 1
    pools_sufficed = dataset.manifest["context_shortfalls"] == []
    _verdict(
        4,
        pools_sufficed and count_misses == 0 and nesting_breaks == 0,
        f"{exact_cells} city/kind cells at exact 0/10/20, "
        f"{nesting_breaks} nesting exceptions, shortfalls={not pools_sufficed}",
    )


# ---------------------------------------------------------------------------
# 5. metric arithmetic worked examples
# ---------------------------------------------------------------------------


def test_05_metric_arithmetic(tiny_catalog):
    a = "days(plan) == 3"
    b = "people_number(plan) == 2"
    c = "total_budget(plan) <= 700"
    d = "'thai' in cuisines(plan)"

    # three gold constraints, two recovered plus one invention
    result = score_extraction("ex", [a, b, d], [parse(a), parse(b), parse(c)])
    two_thirds = 2 / 3
    set_example_ok = (
        result.payload["precision"] == two_thirds
        and result.payload["recall"] == two_thirds
        and result.payload["f1"] == two_thirds
    )
    agg = aggregate([result])["extraction"]
    set_example_ok = set_example_ok and all(
        agg[key] == two_thirds
        for key in (
            "micro_precision", "micro_recall", "micro_f1",
            "macro_precision", "macro_recall", "macro_f1",
        )
    )

    # three injected errors, a repair that clears two of them
    query = make_query()
    exprs = tuple(parse(t) for t in FULL_COVERAGE_CONSTRAINTS)
    faulty = solve(
        SolveRequest(query, exprs, neg_subset=frozenset({2, 3, 4})), tiny_catalog
    )
    assert faulty.status == "feasible"
    originals = verify(faulty.plan, exprs, tiny_catalog, query)
    assert len(originals) == 3
    half_fixed = solve(
        SolveRequest(query, exprs, neg_subset=frozenset({2})), tiny_catalog
    )
    assert half_fixed.status == "feasible"
    corr = score_correction(
        "corr", half_fixed.plan.to_doc(), originals, exprs, tiny_catalog, query
    )
    persistence_ok = corr.payload["persistence"] == 1 / 3

    # overall accuracy can never beat its factors, any batch, any case
    rng = random.Random(5150)
    gold = list(gold_tool_calls(query, tiny_catalog))
    inequality_ok = True
    for batch in range(10):
        results = []
        for case_no in range(30):
            preds = []
            for call in gold:
                if rng.random() < 0.25:
                    preds.append(ToolCall("SomethingElse", call.arguments))
                elif rng.random() < 0.3:
                    preds.append(ToolCall(call.tool_name, call.arguments[:-1]))
                elif rng.random() < 0.2:
                    preds.append(
                        ToolCall(
                            call.tool_name,
                            tuple((n, "wrong") for n, _ in call.arguments),
                        )
                    )
                else:
                    preds.append(call)
            preds = preds[: rng.randint(1, len(gold))]
            result = score_tool_use(f"b{batch}.t{case_no}", preds, gold)
            payload = result.payload
            if payload["overall_accuracy"] > min(
                payload["tool_accuracy"], payload["param_accuracy"]
            ):
                inequality_ok = False
            results.append(result)
        batch_agg = aggregate(results)["tool_use"]
        if batch_agg["overall_accuracy"] > min(
            batch_agg["tool_accuracy"], batch_agg["param_accuracy"]
        ):
            inequality_ok = False

    _verdict(
        5,
        set_example_ok and persistence_ok and inequality_ok,
        f"set metrics 2/3 exact: {set_example_ok}; persistence 1/3 exact: "
        f"{persistence_ok}; overall <= min(tool, param) on 10 batches x 30 cases: "
        f"{inequality_ok}",
    )


# ---------------------------------------------------------------------------
# 6. oracle closure and the null floor
# ---------------------------------------------------------------------------


def test_06_oracle_closure(closure_ds):
    started = time.monotonic()
    oracle = run(closure_ds, "builtin:oracle")["aggregates"]
    null = run(closure_ds, "builtin:null")["aggregates"]
    elapsed = time.monotonic() - started

    perfect = []
    for section, keys in (
        ("extraction", (
            "micro_precision", "micro_recall", "micro_f1",
            "macro_precision", "macro_recall", "macro_f1", "exact_match_rate",
        )),
        ("tool_use", ("tool_accuracy", "param_accuracy", "overall_accuracy", "pass_rate")),
        ("plan_gen", ("pass_rate", "poi_match_rate", "poi_coverage")),
        ("identification", (
            "micro_precision", "micro_recall", "micro_f1",
            "macro_precision", "macro_recall", "macro_f1", "exact_match_rate",
        )),
        ("correction", ("pass_rate",)),
    ):
        for key in keys:
            perfect.append(oracle[section][key] == 1.0)
    for head, counts in oracle["extraction"]["per_head"].items():
        perfect.append(counts["precision"] == 1.0 and counts["recall"] == 1.0)
    for level, slot in oracle["plan_gen"]["by_context_level"].items():
        perfect.append(slot["pass_rate"] == 1.0)
    for _count, section in oracle["identification"]["by_error_count"].items():
        perfect.append(section["micro_f1"] == 1.0 and section["exact_match_rate"] == 1.0)
    perfect.append(oracle["correction"]["persistence"] == 0.0)
    perfect.append(
        all(v == 0.0 for v in oracle["correction"]["persistence_by_error_count"].values())
    )
    perfect.append(oracle["pass_rate_overall"] == 1.0)

    floor = (
        null["extraction"]["micro_recall"] == 0.0
        and null["identification"]["micro_recall"] == 0.0
        and null["plan_gen"]["pass_rate"] == 0.0
    )
    _verdict(
        6,
        all(perfect) and floor and elapsed < 120.0,
        f"{closure_ds.manifest['cases']} cases; oracle perfect on "
        f"{sum(perfect)}/{len(perfect)} metric checks; null floor: {floor}; "
        f"{elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 7. dataset generation determinism
# ---------------------------------------------------------------------------


def _tripdiag(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "tripdiag", *args],
        capture_output=True, text=True, env=os.environ.copy(),
    )


def _tree_hashes(root) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_07_generation_determinism(tmp_path):
    demo = tmp_path / "demo"
    proc = _tripdiag(
        "demo-catalog", "--seed", "9", "--cities", "3", "--queries", "3",
        "--out", str(demo),
    )
    assert proc.returncode == 0, proc.stderr
    outs = []
    for name in ("first", "second"):
        target = tmp_path / name
        proc = _tripdiag(
            "gen-data", "--catalog", str(demo / "catalog"),
            "--queries", str(demo / "queries.json"),
            "--seed", "9", "--out", str(target),
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(_tree_hashes(target))
    first, second = outs
    _verdict(
        7,
        bool(first) and first == second,
        f"{len(first)} files, every digest identical across two runs",
    )


# ---------------------------------------------------------------------------
# 8. error-count structure of identification suites
# ---------------------------------------------------------------------------


def test_08_error_count_structure(full_coverage_ds, closure_ds):
    sized_ok = True
    seen_counts = set()
    for dataset in (full_coverage_ds, closure_ds):
        for case in dataset.cases:
            if case.subtask != "identification":
                continue
            count = int(case.case_id.rsplit(".e", 1)[1])
            seen_counts.add(count)
            if len(case.gold["findings"]) != count:
                sized_ok = False
    complete = {1, 2, 3} <= seen_counts
    one_query_full = all(
        f"qtest.identification.e{k}" in {c.case_id for c in full_coverage_ds.cases}
        for k in (1, 2, 3)
    )
    _verdict(
        8,
        sized_ok and complete and one_query_full,
        f"gold finding sets sized exactly by error count across "
        f"{len(full_coverage_ds.cases) + len(closure_ds.cases)} cases; "
        f"one/two/three-error variants all present: {complete}",
    )
