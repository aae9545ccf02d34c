"""Property tests for the constraint language.

Expressions and plans come from seeded generators (see oracle_eval); using
the seed as the hypothesis input keeps shrinking useful while the
generators stay plain random code reusable outside hypothesis.
"""

from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from tripdiag.dsl import canonicalize, evaluate, match_sets, negate, parse, render

from .conftest import build_tiny_catalog, make_query
from .oracle_eval import oracle_eval, plan_facts, random_expr, random_plan

CATALOG = build_tiny_catalog()
QUERY = make_query()


def _pair(seed: int):
    rng = random.Random(seed)
    return random_expr(rng), random_plan(rng, CATALOG, QUERY)


@given(st.integers(0, 2**48))
def test_render_parse_round_trip(seed):
    expr, _ = _pair(seed)
    assert parse(render(expr)) == expr


@given(st.integers(0, 2**48))
def test_canonicalize_idempotent(seed):
    expr, _ = _pair(seed)
    once = canonicalize(expr)
    assert canonicalize(once) == once


@given(st.integers(0, 2**48))
def test_canonicalize_preserves_truth(seed):
    expr, plan = _pair(seed)
    assert evaluate(canonicalize(expr), plan, CATALOG, QUERY) == evaluate(
        expr, plan, CATALOG, QUERY
    )


@given(st.integers(0, 2**48))
def test_negation_complements(seed):
    expr, plan = _pair(seed)
    assert evaluate(negate(expr), plan, CATALOG, QUERY) == (
        not evaluate(expr, plan, CATALOG, QUERY)
    )


@given(st.integers(0, 2**48))
def test_evaluator_matches_independent_oracle(seed):
    expr, plan = _pair(seed)
    facts = plan_facts(plan, CATALOG, QUERY)
    assert oracle_eval(expr, facts) == evaluate(expr, plan, CATALOG, QUERY)


@given(st.integers(0, 2**48))
def test_negate_involution_truth(seed):
    expr, plan = _pair(seed)
    assert evaluate(negate(negate(expr)), plan, CATALOG, QUERY) == evaluate(
        expr, plan, CATALOG, QUERY
    )


@settings(max_examples=60)
@given(st.integers(0, 2**48), st.integers(1, 5), st.integers(0, 5))
def test_match_counts_are_order_invariant(seed, n_pred, n_gold):
    rng = random.Random(seed)
    preds = [random_expr(rng, depth=1) for _ in range(n_pred)]
    golds = [random_expr(rng, depth=1) for _ in range(n_gold)]
    base = match_sets(preds, golds)
    shuffled = list(golds)
    rng.shuffle(shuffled)
    other = match_sets(preds, shuffled)
    assert (base.tp, base.fp, base.fn) == (other.tp, other.fp, other.fn)


@settings(max_examples=60)
@given(st.integers(0, 2**48), st.integers(0, 4), st.integers(0, 4))
def test_match_exact_iff_no_errors(seed, n_pred, n_gold):
    rng = random.Random(seed)
    preds = [random_expr(rng, depth=1) for _ in range(n_pred)]
    golds = [random_expr(rng, depth=1) for _ in range(n_gold)]
    report = match_sets(preds, golds)
    assert report.exact_match == (report.fp == 0 and report.fn == 0)


@settings(max_examples=40)
@given(st.integers(0, 2**48))
def test_canonical_equal_soundness(seed):
    """Canonical-equal expressions agree on every sampled plan."""
    rng = random.Random(seed)
    a = random_expr(rng, depth=1)
    b = random_expr(rng, depth=1)
    if canonicalize(a) != canonicalize(b):
        return
    for plan_seed in range(10):
        plan = random_plan(random.Random(plan_seed), CATALOG, QUERY)
        assert evaluate(a, plan, CATALOG, QUERY) == evaluate(b, plan, CATALOG, QUERY)
