"""Context builder tests: level sizing, nesting, seeding, and accounting."""

import pytest

from tripdiag.contexts import (
    LEVEL_DISTRACTORS,
    TOKEN_ESTIMATE_DIVISOR,
    TOKEN_WARN_THRESHOLD,
    ContextSpec,
    build,
    render_context,
    token_estimate,
)
from tripdiag.model import ContextLevel, InformationContext, canonical_json
from tripdiag.solver import SolveRequest, solve
from tripdiag.synth import GenSpec, generate
from tripdiag.dsl import parse


def _ref_plan(catalog, query, *texts):
    outcome = solve(
        SolveRequest(query=query, constraints=tuple(parse(t) for t in texts)), catalog
    )
    assert outcome.status == "feasible"
    return outcome.plan


def _build(catalog, query, plan, level, seed=0, **kw):
    return build(
        plan,
        None,
        catalog,
        ContextSpec.for_level(level, seed),
        query=query,
        case_id=f"{query.id}.plan_gen.{level.value}",
        **kw,
    )


@pytest.fixture(scope="module")
def roomy():
    """A synthetic world wide enough that rich contexts never run short."""
    spec = GenSpec(
        seed=11,
        cities=3,
        accommodations_per_city=24,
        restaurants_per_city=26,
        attractions_per_city=26,
        queries=4,
    )
    catalog, annotated = generate(spec)
    return catalog, annotated


class TestLevels:
    def test_minimal_is_exactly_the_plan(self, tiny_catalog, q_bw):
        plan = _ref_plan(tiny_catalog, q_bw, "days(plan) == 3")
        got = _build(tiny_catalog, q_bw, plan, ContextLevel.MINIMAL)
        assert got.context.record_ids == frozenset(plan.poi_ids())
        assert got.requested_per_cell == 0
        assert not got.insufficient

    def test_distractor_counts_are_exact_when_the_pool_suffices(self, roomy):
        catalog, annotated = roomy
        checked = 0
        for ann in annotated:
            plan = _ref_plan(catalog, ann.query, *ann.constraints)
            base = frozenset(plan.poi_ids())
            moderate = _build(catalog, ann.query, plan, ContextLevel.MODERATE)
            rich = _build(catalog, ann.query, plan, ContextLevel.RICH)
            cells = len(ann.query.destinations) * 3
            assert dict(moderate.achieved) == {cell: 10 for cell, _ in moderate.achieved}
            assert len(moderate.achieved) == cells
            assert len(moderate.context.record_ids) == len(base) + 10 * cells
            assert dict(rich.achieved) == {cell: 20 for cell, _ in rich.achieved}
            assert len(rich.context.record_ids) == len(base) + 20 * cells
            assert not moderate.insufficient and not rich.insufficient
            checked += 1
        assert checked >= 2

    def test_levels_nest(self, roomy):
        catalog, annotated = roomy
        for ann in annotated:
            plan = _ref_plan(catalog, ann.query, *ann.constraints)
            minimal = _build(catalog, ann.query, plan, ContextLevel.MINIMAL).context.record_ids
            moderate = _build(catalog, ann.query, plan, ContextLevel.MODERATE).context.record_ids
            rich = _build(catalog, ann.query, plan, ContextLevel.RICH).context.record_ids
            assert minimal <= moderate <= rich

    def test_same_seed_same_context(self, roomy):
        catalog, annotated = roomy
        ann = annotated[0]
        plan = _ref_plan(catalog, ann.query, *ann.constraints)
        a = _build(catalog, ann.query, plan, ContextLevel.RICH, seed=5)
        b = _build(catalog, ann.query, plan, ContextLevel.RICH, seed=5)
        assert a.context.record_ids == b.context.record_ids
        assert a.achieved == b.achieved

    def test_level_table_pinned(self):
        assert LEVEL_DISTRACTORS[ContextLevel.MINIMAL] == 0
        assert LEVEL_DISTRACTORS[ContextLevel.MODERATE] == 10
        assert LEVEL_DISTRACTORS[ContextLevel.RICH] == 20
        assert LEVEL_DISTRACTORS[ContextLevel.CORRECTION] == 0

    def test_spec_rejects_off_table_counts(self):
        with pytest.raises(ValueError):
            ContextSpec(level=ContextLevel.MODERATE, distractors_per_category_per_city=5)


class TestShortfalls:
    def test_small_city_shortfalls_are_reported_not_padded(self, tiny_catalog, q_bw):
        plan = _ref_plan(tiny_catalog, q_bw, "days(plan) == 3")
        got = _build(tiny_catalog, q_bw, plan, ContextLevel.MODERATE)
        assert got.insufficient
        # a 3-day plan uses all three Brightwater attractions, one of the two
        # lodgings, and at least one of the two restaurants
        falls = got.shortfalls()
        assert falls[("Brightwater", "attraction")] == 0
        assert falls[("Brightwater", "accommodation")] == 1
        assert falls[("Brightwater", "restaurant")] <= 1
        # everything the pool had was used; nothing invented
        assert got.context.record_ids <= frozenset(r.id for r in tiny_catalog)

    def test_distractor_pool_restricts_candidates(self, tiny_catalog, q_bw):
        plan = _ref_plan(tiny_catalog, q_bw, "days(plan) == 3")
        pool = frozenset(plan.poi_ids())  # nothing outside the plan allowed
        got = _build(tiny_catalog, q_bw, plan, ContextLevel.MODERATE, distractor_pool=pool)
        assert got.context.record_ids == frozenset(plan.poi_ids())
        assert all(n == 0 for _, n in got.achieved)


class TestCorrection:
    def test_union_of_faulty_and_reference(self, tiny_catalog, q_bw):
        ref = _ref_plan(tiny_catalog, q_bw, "total_budget(plan) <= 490")
        faulty = _ref_plan(tiny_catalog, q_bw, "total_budget(plan) <= 700",
                           "'flight' in transport_modes(plan)")
        got = build(
            ref,
            faulty,
            tiny_catalog,
            ContextSpec.for_level(ContextLevel.CORRECTION),
            query=q_bw,
            case_id="qtest.correction.e1",
        )
        assert got.context.record_ids == frozenset(ref.poi_ids()) | frozenset(faulty.poi_ids())

    def test_correction_requires_the_faulty_plan(self, tiny_catalog, q_bw):
        ref = _ref_plan(tiny_catalog, q_bw, "days(plan) == 3")
        with pytest.raises(ValueError):
            build(
                ref,
                None,
                tiny_catalog,
                ContextSpec.for_level(ContextLevel.CORRECTION),
                query=q_bw,
                case_id="qtest.correction.e1",
            )


class TestRendering:
    def test_rendered_records_are_sorted_and_resolved(self, tiny_catalog):
        ctx = InformationContext(
            case_id="c",
            level=ContextLevel.MINIMAL,
            record_ids=frozenset({"res-b1", "acc-b1", "ghost-7"}),
        )
        doc = render_context(ctx, tiny_catalog)
        assert doc["level"] == "minimal"
        assert [r["id"] for r in doc["records"]] == ["acc-b1", "res-b1"]

    def test_token_estimate_arithmetic(self, tiny_catalog):
        empty = InformationContext(case_id="c", level=ContextLevel.MINIMAL, record_ids=frozenset())
        assert token_estimate(empty, tiny_catalog) == 0
        ctx = InformationContext(
            case_id="c", level=ContextLevel.MINIMAL, record_ids=frozenset({"acc-b1", "res-b2"})
        )
        expected = sum(
            len(canonical_json(tiny_catalog.get(pid).to_doc())) for pid in ("acc-b1", "res-b2")
        ) // TOKEN_ESTIMATE_DIVISOR
        assert token_estimate(ctx, tiny_catalog) == expected
        assert TOKEN_WARN_THRESHOLD == 64_000
