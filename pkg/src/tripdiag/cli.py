"""Command line entry point.

One executable, subcommands for the whole workflow: build or ingest a
catalog, generate the task-case dataset, solve and verify single queries,
inspect contexts, run an agent over the wire protocol, and score recorded
responses offline.

Exit codes: 0 success, 1 usage error, 2 data error (missing or malformed
files, unknown ids), 3 agent endpoint unreachable.  The TRIPDIAG_LOG
environment variable sets log verbosity (DEBUG, INFO, WARNING); it changes
nothing but logging.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import re
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import harness, synth
from .catalog import PoiCatalog
from .contexts import ContextSpec, build as build_context, render_context, token_estimate
from .dsl import parse
from .model import (
    ContextLevel,
    Query,
    SchemaErrorList,
    plan_from_doc,
    validate_schema,
)
from .solver import DEFAULT_SEARCH_BUDGET, SolveRequest, solve, verify

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ENDPOINT = 3

log = logging.getLogger("tripdiag")


class DataError(Exception):
    """A file or id the command needs is missing or malformed."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the CLI contract reserves 2 for
    # data errors, so remap usage problems to 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# shared loading helpers
# ---------------------------------------------------------------------------


def _load_catalog(path: str) -> PoiCatalog:
    try:
        return PoiCatalog.load_dir(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load catalog from {path}: {exc}") from exc


def _load_annotated(path: str) -> list[synth.AnnotatedQuery]:
    try:
        return synth.load_queries(Path(path))
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load queries from {path}: {exc}") from exc


def _load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read JSON from {path}: {exc}") from exc


def _load_dataset(path: str) -> harness.Dataset:
    try:
        return harness.Dataset.load(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load dataset from {path}: {exc}") from exc


def _pick_query(
    args: argparse.Namespace,
) -> tuple[Query, tuple]:
    """The (query, parsed constraints) pair a solve/verify command works on.

    Two sources: an annotated queries file plus ``--query-id``, or a raw
    query JSON document plus a text file of one constraint per line.
    """
    if args.queries:
        annotated = _load_annotated(args.queries)
        if args.query_id:
            matches = [a for a in annotated if a.query.id == args.query_id]
            if not matches:
                raise DataError(f"no query {args.query_id!r} in {args.queries}")
            ann = matches[0]
        else:
            if len(annotated) != 1:
                raise DataError(
                    f"{args.queries} holds {len(annotated)} queries; pass --query-id"
                )
            ann = annotated[0]
        try:
            return ann.query, ann.parsed()
        except Exception as exc:
            raise DataError(f"constraints for {ann.query.id} do not parse: {exc}") from exc
    if not (args.query and args.constraints):
        raise DataError("need either --queries [--query-id] or --query + --constraints")
    try:
        query = Query.from_doc(_load_json(args.query))
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"bad query document {args.query}: {exc}") from exc
    exprs = []
    try:
        with open(args.constraints, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    exprs.append(parse(line))
    except OSError as exc:
        raise DataError(f"cannot read constraints from {args.constraints}: {exc}") from exc
    except Exception as exc:
        raise DataError(f"constraint does not parse: {exc}") from exc
    return query, tuple(exprs)


def _write_or_print(doc: Any, out: Optional[str]) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        log.info("wrote %s", out)
    else:
        print(text)


def _parse_violate(spec: Optional[str]) -> frozenset[int]:
    if not spec:
        return frozenset()
    try:
        return frozenset(int(part) for part in spec.split(",") if part.strip() != "")
    except ValueError as exc:
        raise DataError(f"bad --violate spec {spec!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_demo_catalog(args: argparse.Namespace) -> int:
    try:
        spec = synth.GenSpec(
            seed=args.seed,
            cities=args.cities,
            accommodations_per_city=args.accommodations,
            restaurants_per_city=args.restaurants,
            attractions_per_city=args.attractions,
            events_per_city=args.events,
            date_start=dt.date.fromisoformat(args.date_start),
            date_days=args.days,
            queries=args.queries,
        )
    except ValueError as exc:
        raise DataError(f"bad generator spec: {exc}") from exc
    catalog, annotated = synth.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    catalog.save_dir(out / "catalog")
    synth.save_queries(out / "queries.json", annotated)
    log.info("catalog: %d records", len(list(catalog)))
    print(
        f"wrote {len(list(catalog))} records and {len(annotated)} queries to {out}"
    )
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace) -> int:
    mapping_doc = _load_json(args.mapping)
    if not isinstance(mapping_doc, list):
        raise DataError("--mapping must hold a JSON list of {csv, kind, ...} entries")
    specs = []
    base = Path(args.mapping).parent
    for entry in mapping_doc:
        if not isinstance(entry, dict) or "csv" not in entry:
            raise DataError("each mapping entry needs a 'csv' path")
        csv_path = Path(entry["csv"])
        if not csv_path.is_absolute():
            csv_path = base / csv_path
        specs.append((csv_path, entry))
    try:
        catalog = synth.ingest_catalog(specs)
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"ingestion failed: {exc}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    catalog.save_dir(out / "catalog")
    print(f"ingested {len(list(catalog))} records into {out / 'catalog'}")
    return EXIT_OK


_COUNTS_RE = re.compile(r"^\d+(,\d+)*$")


def cmd_gen_data(args: argparse.Namespace) -> int:
    catalog = _load_catalog(args.catalog)
    annotated = _load_annotated(args.queries)
    error_plan = None
    error_counts = harness.DEFAULT_ERROR_COUNTS
    if args.errors:
        if _COUNTS_RE.match(args.errors):
            error_counts = tuple(int(p) for p in args.errors.split(","))
            if any(c < 1 for c in error_counts):
                raise DataError("--errors counts must be >= 1")
        else:
            plan_doc = _load_json(args.errors)
            if not isinstance(plan_doc, list):
                raise DataError("--errors file must hold [[query_id, [idx,...]], ...]")
            try:
                error_plan = [
                    (str(qid), tuple(int(i) for i in subset))
                    for qid, subset in plan_doc
                ]
            except (TypeError, ValueError) as exc:
                raise DataError(f"bad error plan: {exc}") from exc
    try:
        dataset = harness.generate_dataset(
            catalog, annotated, error_plan,
            seed=args.seed, error_counts=error_counts,
        )
    except (harness.GenerationError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    dataset.save(args.out)
    counts = dataset.manifest["case_counts"]
    skipped = dataset.manifest["skipped"]
    print(
        f"wrote {dataset.manifest['cases']} cases to {args.out} "
        f"({', '.join(f'{k}={v}' for k, v in sorted(counts.items()))})"
    )
    if skipped:
        print(f"skipped {len(skipped)} case groups (see manifest.json)")
        for entry in skipped:
            log.info("skip %s/%s: %s", entry["query_id"], entry["case"], entry["reason"])
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    catalog = _load_catalog(args.catalog)
    query, exprs = _pick_query(args)
    violate = _parse_violate(args.violate)
    bad = [i for i in violate if not 0 <= i < len(exprs)]
    if bad:
        raise DataError(
            f"--violate indices {sorted(bad)} out of range (have {len(exprs)} constraints)"
        )
    outcome = solve(
        SolveRequest(query, exprs, neg_subset=violate, search_budget=args.budget),
        catalog,
    )
    print(f"status: {outcome.status} (nodes explored: {outcome.nodes_explored})")
    if outcome.status == "feasible":
        doc = outcome.plan.to_doc()
        if args.out:
            _write_or_print(doc, args.out)
        else:
            print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"certificate: {outcome.certificate}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    catalog = _load_catalog(args.catalog)
    query, exprs = _pick_query(args)
    plan_doc = _load_json(args.plan)
    checked = validate_schema(plan_doc, query)
    if isinstance(checked, SchemaErrorList):
        _write_or_print(checked.to_doc(), args.out)
        print(f"schema errors: {len(checked.errors)}", file=sys.stderr)
        return EXIT_OK
    findings = verify(checked, exprs, catalog, query)
    _write_or_print({"findings": [f.to_doc() for f in findings]}, args.out)
    print(
        "valid" if not findings else f"{len(findings)} finding(s)",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_context(args: argparse.Namespace) -> int:
    catalog = _load_catalog(args.catalog)
    query, _ = _pick_query(args)
    try:
        plan = plan_from_doc(_load_json(args.plan), query)
    except Exception as exc:
        raise DataError(f"bad plan document {args.plan}: {exc}") from exc
    level = ContextLevel(args.level)
    faulty = None
    ref = plan
    if level is ContextLevel.CORRECTION:
        if not args.faulty:
            raise DataError("--level correction needs --faulty PLAN_FILE")
        try:
            faulty = plan_from_doc(_load_json(args.faulty), query)
        except Exception as exc:
            raise DataError(f"bad plan document {args.faulty}: {exc}") from exc
    built = build_context(
        ref, faulty, catalog,
        ContextSpec.for_level(level, seed=args.seed),
        query=query, case_id=args.case_id or f"{query.id}.context.{level.value}",
    )
    doc = render_context(built.context, catalog)
    doc["token_estimate"] = token_estimate(built.context, catalog)
    if built.shortfalls():
        doc["shortfalls"] = [
            {"cell": list(cell), "got": got} for cell, got in sorted(built.shortfalls().items())
        ]
    _write_or_print(doc, args.out)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args.cases)
    subtasks = args.subtask or None
    try:
        report = harness.run(
            dataset,
            args.agent,
            subtasks=subtasks,
            parallel=args.parallel,
            timeout=args.timeout,
            retries=args.retries,
            include_gold=args.include_gold,
        )
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _finish_report(report, args.out)
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args.cases)
    try:
        responses = harness.load_responses(args.responses)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read responses from {args.responses}: {exc}") from exc
    try:
        report = harness.score_responses(dataset, responses, subtasks=args.subtask or None)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _finish_report(report, args.out)
    return EXIT_OK


def _finish_report(report: dict, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        log.info("wrote %s", out)
    agg = report["aggregates"]
    print(f"cases: {agg['cases_total']}  overall pass rate: {agg['pass_rate_overall']:.3f}")
    for name in harness.SUBTASKS:
        block = agg.get(name)
        if not block:
            continue
        bits = [f"{name}: n={block['cases']}"]
        for key in ("micro_f1", "overall_accuracy", "pass_rate", "persistence"):
            if block.get(key) is not None:
                bits.append(f"{key}={block[key]:.3f}")
        print("  " + "  ".join(bits))
    if not out:
        print(json.dumps(report, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------


def _add_query_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--queries", help="annotated queries JSON file")
    p.add_argument("--query-id", help="query id inside --queries")
    p.add_argument("--query", help="single query JSON document")
    p.add_argument("--constraints", help="text file, one constraint per line")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tripdiag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-catalog", help="generate a synthetic catalog and queries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--cities", type=int, default=3)
    p.add_argument("--queries", type=int, default=8)
    p.add_argument("--accommodations", type=int, default=6)
    p.add_argument("--restaurants", type=int, default=8)
    p.add_argument("--attractions", type=int, default=8)
    p.add_argument("--events", type=int, default=2)
    p.add_argument("--date-start", default="2026-05-01")
    p.add_argument("--days", type=int, default=6)
    p.set_defaults(func=cmd_demo_catalog)

    p = sub.add_parser("ingest", help="convert benchmark-shaped CSVs into a catalog")
    p.add_argument("--mapping", required=True, help="JSON list of {csv, kind, columns, ...}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen-data", help="emit the five-sub-task case dataset")
    p.add_argument("--catalog", required=True, help="catalog directory")
    p.add_argument("--queries", required=True, help="annotated queries JSON file")
    p.add_argument(
        "--errors",
        help="error counts like 1,2,3 or a JSON file of [query_id, [indices]] pairs",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("solve", help="find a plan satisfying (or violating) constraints")
    p.add_argument("--catalog", required=True)
    _add_query_source(p)
    p.add_argument("--violate", help="comma-separated constraint indices to violate")
    p.add_argument("--budget", type=int, default=DEFAULT_SEARCH_BUDGET)
    p.add_argument("--out", help="write the plan JSON here instead of stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a plan against its constraints")
    p.add_argument("--catalog", required=True)
    _add_query_source(p)
    p.add_argument("--plan", required=True, help="plan JSON document")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("context", help="build the record context for a plan")
    p.add_argument("--catalog", required=True)
    _add_query_source(p)
    p.add_argument("--plan", required=True, help="reference plan JSON document")
    p.add_argument("--faulty", help="faulty plan JSON (correction level)")
    p.add_argument(
        "--level", required=True,
        choices=[lv.value for lv in ContextLevel],
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--case-id", help="case id used in the context document")
    p.add_argument("--out")
    p.set_defaults(func=cmd_context)

    p = sub.add_parser("run", help="evaluate an agent over the wire protocol")
    p.add_argument("--cases", required=True, help="dataset directory from gen-data")
    p.add_argument("--agent", required=True, help="builtin:oracle, builtin:null, URL, or command")
    p.add_argument("--subtask", action="append", choices=list(harness.SUBTASKS))
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--retries", type=int, default=0)
    p.add_argument(
        "--include-gold", action="store_true",
        help="attach gold outputs to requests (closed-loop smoke tests only)",
    )
    p.add_argument("--out", help="write the full report JSON here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="score recorded wire responses offline")
    p.add_argument("--cases", required=True)
    p.add_argument("--responses", required=True, help="JSON-lines response file")
    p.add_argument("--subtask", action="append", choices=list(harness.SUBTASKS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("TRIPDIAG_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"tripdiag: {exc}", file=sys.stderr)
        return EXIT_DATA
    except harness.EndpointUnreachable as exc:
        print(f"tripdiag: endpoint unreachable: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT


if __name__ == "__main__":
    sys.exit(main())
