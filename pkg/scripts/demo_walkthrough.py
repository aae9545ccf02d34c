"""Guided tour of the toolkit on one synthetic world.

Generates a catalog with annotated queries, solves the first query, injects
constraint violations and verifies them, then derives the full task dataset
and scores the two builtin reference agents on it.

    python scripts/demo_walkthrough.py --seed 4 --out /tmp/tour
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from tripdiag.dsl.ast import head_of
from tripdiag.harness import eligible_violation_indices, generate_dataset, run
from tripdiag.model import canonical_json
from tripdiag.solver import SolveRequest, solve, verify
from tripdiag.synth import GenSpec, generate


def _hhmm(minutes):
    return f"{minutes // 60:02d}:{minutes % 60:02d}" if minutes is not None else "--:--"


def _print_plan(plan, catalog):
    for day in plan.days:
        print(f"  {day.date.isoformat()}")
        for item in day.items:
            rec = catalog.get(item.poi_id)
            name = rec.name if rec else f"<unresolved {item.poi_id}>"
            window = ""
            if item.start is not None:
                window = f" {_hhmm(item.start)}-{_hhmm(item.end)}"
            qty = f" x{item.quantity}" if item.quantity > 1 else ""
            print(
                f"    {item.kind.value:<18} {name}{qty}{window}"
                f"  {item.cost / 100:.2f}"
            )
    print(f"  total {plan.total_cost / 100:.2f}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--cities", type=int, default=3)
    ap.add_argument("--queries", type=int, default=3)
    ap.add_argument("--out", type=Path, default=None,
                    help="directory to save the dataset and both reports")
    args = ap.parse_args()

    catalog, annotated = generate(
        GenSpec(seed=args.seed, cities=args.cities, queries=args.queries)
    )
    print(f"world: {len(catalog)} catalog records, {len(annotated)} queries\n")

    ann = annotated[0]
    print(f"query {ann.query.id}: {ann.query.text}")
    for text in ann.constraints:
        print(f"  - {text}")

    exprs = ann.parsed()
    outcome = solve(SolveRequest(ann.query, exprs), catalog)
    print(f"\nreference solve: {outcome.status} "
          f"({outcome.nodes_explored} nodes explored)")
    _print_plan(outcome.plan, catalog)

    findings = verify(outcome.plan, exprs, catalog, ann.query)
    print(f"verifier on the reference plan: {len(findings)} finding(s)")

    eligible = eligible_violation_indices(exprs)
    subset = frozenset(eligible[:2])
    broken = solve(SolveRequest(ann.query, exprs, neg_subset=subset), catalog)
    if broken.status == "feasible":
        names = ", ".join(head_of(exprs[i]).value for i in sorted(subset))
        print(f"\nplan violating {{{names}}}:")
        _print_plan(broken.plan, catalog)
        for f in verify(broken.plan, exprs, catalog, ann.query):
            print(f"  finding: {canonical_json(f.to_doc())}")
    else:
        print(f"\nno plan violating exactly that subset: {broken.status}")

    dataset = generate_dataset(catalog, annotated, seed=args.seed)
    print(f"\ndataset: {dataset.manifest['cases']} cases "
          f"{dataset.manifest['case_counts']}")
    for skip in dataset.manifest["skipped"]:
        print(f"  skipped {skip['query_id']} {skip['case']}: {skip['reason']}")

    reports = {}
    for agent in ("builtin:oracle", "builtin:null"):
        reports[agent] = run(dataset, agent)
        agg = reports[agent]["aggregates"]
        print(f"\n{agent}")
        print(f"  extraction      micro_f1        {agg['extraction']['micro_f1']:.3f}")
        print(f"  tool_use        overall_acc     {agg['tool_use']['overall_accuracy']:.3f}")
        print(f"  plan_gen        pass_rate       {agg['plan_gen']['pass_rate']:.3f}")
        print(f"  identification  micro_f1        {agg['identification']['micro_f1']:.3f}")
        print(f"  correction      pass_rate       {agg['correction']['pass_rate']:.3f}")
        print(f"  overall         pass_rate       {agg['pass_rate_overall']:.3f}")

    if args.out is not None:
        dataset.save(args.out / "dataset")
        for agent, report in reports.items():
            name = agent.split(":", 1)[1]
            path = args.out / f"report_{name}.json"
            path.write_text(canonical_json(report) + "\n", encoding="utf-8")
        print(f"\nwrote dataset and reports under {args.out}")


if __name__ == "__main__":
    main()
