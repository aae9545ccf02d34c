"""Metric falloff under a noisy agent.

Wraps the gold answers in a lossy channel: each answer element is dropped
or corrupted independently with probability p, with a fresh deterministic
stream per case.  Sweeping p shows every headline metric degrading from
its oracle value and the correction persistence rising from zero.

    python scripts/run_noise_sweep.py --grid 0,0.1,0.25,0.5 --json /tmp/sweep.json
"""

from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

from tripdiag.harness import generate_dataset, run
from tripdiag.synth import GenSpec, generate


class LossyOracle:
    """Gold passthrough where each element survives with probability 1-p."""

    def __init__(self, p: float, seed: int):
        self.p = p
        self.seed = seed

    def respond(self, case, request):
        rng = random.Random(f"{self.seed}:{self.p}:{case.case_id}")
        gold = json.loads(json.dumps(dict(case.gold)))
        if case.subtask == "extraction":
            kept = [t for t in gold["constraints"] if rng.random() >= self.p]
            return {"constraints": kept}, None
        if case.subtask == "tool_use":
            calls = []
            for call in gold["calls"]:
                if rng.random() < self.p:
                    call = dict(call, tool="Frobnicator")
                calls.append(call)
            return {"calls": calls}, None
        if case.subtask == "plan_gen":
            plan = gold["plan"]
            if rng.random() < self.p:
                days = [d for d in plan["days"] if d["items"]]
                if days:
                    rng.choice(days)["items"].pop()
            return {"plan": plan}, None
        if case.subtask == "identification":
            kept = [f for f in gold["findings"] if rng.random() >= self.p]
            return {"findings": kept}, None
        if case.subtask == "correction":
            if rng.random() < self.p:
                # hand the faulty plan back untouched
                return {"plan": case.inputs["plan"]}, None
            return {"plan": gold["plan"]}, None
        raise AssertionError(case.subtask)


HEADLINE = (
    ("extraction", "micro_recall"),
    ("tool_use", "overall_accuracy"),
    ("plan_gen", "pass_rate"),
    ("identification", "micro_recall"),
    ("correction", "pass_rate"),
    ("correction", "persistence"),
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7, help="world seed")
    ap.add_argument("--cities", type=int, default=3)
    ap.add_argument("--queries", type=int, default=4)
    ap.add_argument("--agent-seed", type=int, default=99)
    ap.add_argument("--grid", default="0,0.1,0.25,0.5",
                    help="comma-separated drop probabilities")
    ap.add_argument("--json", type=Path, default=None, help="write sweep rows here")
    args = ap.parse_args()

    grid = [float(tok) for tok in args.grid.split(",") if tok.strip()]
    catalog, annotated = generate(
        GenSpec(seed=args.seed, cities=args.cities, queries=args.queries)
    )
    dataset = generate_dataset(catalog, annotated, seed=args.seed)
    print(f"{dataset.manifest['cases']} cases, drop grid {grid}\n")

    header = "p      " + "".join(f"{sec[:4]}.{key:<18}"[:20].ljust(21) for sec, key in HEADLINE)
    print(header)
    rows = []
    for p in grid:
        report = run(dataset, LossyOracle(p, args.agent_seed))
        agg = report["aggregates"]
        row = {"p": p}
        cells = [f"{p:<7.2f}"]
        for section, key in HEADLINE:
            value = agg[section][key]
            row[f"{section}.{key}"] = value
            cells.append(("None " if value is None else f"{value:.3f}").ljust(21))
        rows.append(row)
        print("".join(cells))

    if args.json is not None:
        args.json.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
        print(f"\nwrote {args.json}")


if __name__ == "__main__":
    main()
