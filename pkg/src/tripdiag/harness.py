"""Dataset generation and evaluation runs over the five sub-tasks.

Each benchmark query becomes a set of independent task cases: constraint
extraction, tool use, plan generation at three context levels, error
identification at one to three injected errors, and error correction for
the same faulty plans.  Every case input is an oracle artifact produced
here (solver plans, verifier findings, built contexts), never another
sub-task's agent output, so a failure on one capability cannot leak into
the measurement of another.

Agents attach over a one-line-JSON-per-message wire protocol:

    request:  {"protocol": 1, "case_id": ..., "subtask": ..., "inputs": {...}}
    response: {"case_id": ..., "output": {...}}

Requests are replayable from logs; gold outputs ride along only when a
run explicitly asks for them (closed-loop smoke testing).
"""

from __future__ import annotations

import itertools
import json
import random
import shlex
import socket
import subprocess
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from .catalog import PoiCatalog
from .contexts import ContextSpec, build as build_context, render_context
from .diagnostics import (
    CaseResult,
    aggregate,
    score_correction,
    score_extraction,
    score_identification,
    score_plan,
    score_tool_use,
)
from .dsl import parse
from .dsl.ast import Head, head_of
from .model import (
    ContextLevel,
    ErrorCategory,
    ErrorFinding,
    Itinerary,
    Kind,
    Profile,
    Query,
    ToolCall,
    canonical_json,
    plan_from_doc,
)
from .sandbox import ToolError, invoke, register_profile
from .solver import DEFAULT_SEARCH_BUDGET, SolveRequest, category_of, solve, verify
from .synth import AnnotatedQuery, load_queries, save_queries

PROTOCOL_VERSION = 1
DATASET_FORMAT = 1
REPORT_FORMAT = 1

SUBTASKS = ("extraction", "tool_use", "plan_gen", "identification", "correction")

#: constraint heads a violation plan may negate (query-fixed facts like the
#: day count or party size cannot be falsified by choosing different items)
NEG_ELIGIBLE_HEADS = frozenset(
    {
        Head.TOTAL_BUDGET,
        Head.COST_OF,
        Head.ROOM_TYPES,
        Head.HOUSE_RULES,
        Head.TRANSPORT_MODES,
        Head.CUISINES,
        Head.RATING_OF,
        Head.POI_VISITED,
    }
)

DEFAULT_ERROR_COUNTS = (1, 2, 3)

#: feasible-subset search gives up after this many candidate subsets per count
MAX_SUBSET_TRIES = 12

PLAN_GEN_LEVELS = (ContextLevel.MINIMAL, ContextLevel.MODERATE, ContextLevel.RICH)


class GenerationError(Exception):
    """An oracle artifact failed its own validity check during generation."""


class EndpointUnreachable(Exception):
    """The agent endpoint cannot be reached at all; the run aborts."""


# ---------------------------------------------------------------------------
# task cases
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaskCase:
    """One scoreable unit of work: oracle inputs in, one output schema back.

    ``inputs`` is exactly the payload an agent sees; ``gold`` stays on the
    harness side for scoring.  ``input_provenance`` tags every input field
    with where it came from; all fields here are `"oracle"` by construction,
    and the tag set mirroring the input keys is what makes the decoupling
    auditable.
    """

    case_id: str
    subtask: str
    query_id: str
    inputs: Mapping[str, Any]
    gold: Mapping[str, Any]
    input_provenance: Mapping[str, str]

    def __post_init__(self) -> None:
        if self.subtask not in SUBTASKS:
            raise ValueError(f"unknown subtask: {self.subtask!r}")
        if set(self.input_provenance) != set(self.inputs):
            raise ValueError("input_provenance must tag exactly the input fields")

    def to_doc(self) -> dict:
        return {
            "case_id": self.case_id,
            "subtask": self.subtask,
            "query_id": self.query_id,
            "inputs": dict(self.inputs),
            "gold": dict(self.gold),
            "input_provenance": dict(self.input_provenance),
        }

    @staticmethod
    def from_doc(doc: Mapping[str, Any]) -> "TaskCase":
        return TaskCase(
            case_id=str(doc["case_id"]),
            subtask=str(doc["subtask"]),
            query_id=str(doc["query_id"]),
            inputs=dict(doc["inputs"]),
            gold=dict(doc["gold"]),
            input_provenance=dict(doc["input_provenance"]),
        )


def request_doc(case: TaskCase, *, include_gold: bool = False) -> dict:
    """The wire request for one case."""
    doc = {
        "protocol": PROTOCOL_VERSION,
        "case_id": case.case_id,
        "subtask": case.subtask,
        "inputs": dict(case.inputs),
    }
    if include_gold:
        doc["gold"] = dict(case.gold)
    return doc


def findings_from_docs(docs: Iterable[Mapping[str, Any]]) -> tuple[ErrorFinding, ...]:
    """Rebuild verifier findings from their serialized form."""
    out = []
    for doc in docs:
        constraint = None
        if doc.get("constraint") is not None:
            constraint = parse(str(doc["constraint"]))
        locus = None
        if doc.get("locus") is not None:
            day, item = doc["locus"]
            locus = (int(day), int(item))
        out.append(
            ErrorFinding(
                category=ErrorCategory(doc["category"]),
                constraint=constraint,
                locus=locus,
            )
        )
    return tuple(out)


# ---------------------------------------------------------------------------
# gold tool calls
# ---------------------------------------------------------------------------


def _first_name(catalog: PoiCatalog, kind: Kind, city: str, fallback: str) -> str:
    records = catalog.by_kind(kind, city)
    if not records:
        return fallback
    return min(records, key=lambda r: r.id).name


def gold_tool_calls(query: Query, catalog: PoiCatalog) -> tuple[ToolCall, ...]:
    """The reference call sequence for a query under its sandbox profile.

    One call per tool in the profile, argument values taken from the query
    (first destination, trip dates) and the catalog (venue names for the
    profile's point-to-point tools).  Every returned call is checked to
    invoke without a sandbox error before being used as gold.
    """
    dest = query.destinations[0]
    date0 = query.dates[0].isoformat()
    date_last = query.dates[-1].isoformat()

    if query.profile is Profile.TP_LIKE:
        calls = [
            ToolCall("FlightSearch", (("origin", query.origin), ("destination", dest), ("date", date0))),
            ToolCall("AccommodationSearch", (("city", dest),)),
            ToolCall("AttractionSearch", (("city", dest),)),
            ToolCall("RestaurantSearch", (("city", dest),)),
            ToolCall("DistanceMatrix", (("origin", query.origin), ("destination", dest), ("mode", "train"))),
        ]
    elif query.profile is Profile.TC_LIKE:
        calls = [
            ToolCall("Flights", (("origin", query.origin), ("destination", dest), ("date", date0))),
            ToolCall("Accommodations", (("city", dest),)),
            ToolCall("Attractions", (("city", dest),)),
            ToolCall("Restaurants", (("city", dest),)),
            ToolCall("Events", (("city", dest), ("date_range", [date0, date_last]))),
            ToolCall("GoogleDistanceMatrix", (("origin", query.origin), ("destination", dest), ("mode", "train"))),
        ]
    else:
        attraction = _first_name(catalog, Kind.ATTRACTION, dest, "Main Square")
        restaurant = _first_name(catalog, Kind.RESTAURANT, dest, "Old Mill")
        calls = [
            ToolCall("attractions_select", (("city", dest), ("key", "rating"), ("filter", "lambda x: x >= 3.0"))),
            ToolCall("accommodations_select", (("city", dest), ("key", "price"), ("filter", "lambda x: x <= 500"))),
            ToolCall("restaurants_select", (("city", dest), ("key", "price"), ("filter", "lambda x: x <= 100"))),
            ToolCall("restaurants_nearby", (("city", dest), ("point", attraction), ("topk", 3), ("dist", 5.0))),
            ToolCall("intercity_transport_select", (("origin", query.origin), ("destination", dest), ("mode", "train"), ("earliest", "06:00"))),
            ToolCall("goto", (("city", dest), ("origin", attraction), ("destination", restaurant), ("time", "18:00"), ("mode", "taxi"))),
        ]

    for call in calls:
        try:
            invoke(call, catalog, query.profile)
        except ToolError as exc:
            raise GenerationError(
                f"gold call {call.tool_name} does not invoke cleanly: {exc}"
            ) from exc
    return tuple(calls)


# ---------------------------------------------------------------------------
# error plans (which constraints get violated, per query)
# ---------------------------------------------------------------------------


def eligible_violation_indices(constraints: Sequence[Any]) -> list[int]:
    return [i for i, c in enumerate(constraints) if head_of(c) in NEG_ELIGIBLE_HEADS]


def default_error_plan(
    catalog: PoiCatalog,
    annotated: Sequence[AnnotatedQuery],
    *,
    seed: int = 0,
    error_counts: Sequence[int] = DEFAULT_ERROR_COUNTS,
    search_budget: int = DEFAULT_SEARCH_BUDGET,
) -> tuple[list[tuple[str, tuple[int, ...]]], list[dict]]:
    """Choose, per query and error count, a feasible violation subset.

    Subsets draw from the negation-eligible constraints, never repeat a
    constraint head within one subset, and are kept only if the solver can
    actually produce a plan violating exactly that subset.  Returns the
    plan entries plus skip records for the (query, count) pairs where no
    subset worked.
    """
    plan: list[tuple[str, tuple[int, ...]]] = []
    skips: list[dict] = []
    for ann in annotated:
        exprs = ann.parsed()
        eligible = eligible_violation_indices(exprs)
        rng = random.Random(f"errors:{seed}:{ann.query.id}")
        for count in error_counts:
            combos = [
                combo
                for combo in itertools.combinations(eligible, count)
                if len({head_of(exprs[i]) for i in combo}) == count
            ]
            rng.shuffle(combos)
            if not combos:
                skips.append(
                    {
                        "query_id": ann.query.id,
                        "case": f"e{count}",
                        "reason": f"fewer than {count} negation-eligible constraints",
                    }
                )
                continue
            chosen: Optional[tuple[int, ...]] = None
            last_status = ""
            for combo in combos[:MAX_SUBSET_TRIES]:
                outcome = solve(
                    SolveRequest(
                        ann.query, exprs,
                        neg_subset=frozenset(combo),
                        search_budget=search_budget,
                    ),
                    catalog,
                )
                if outcome.status == "feasible":
                    chosen = tuple(sorted(combo))
                    break
                last_status = outcome.status
            if chosen is None:
                skips.append(
                    {
                        "query_id": ann.query.id,
                        "case": f"e{count}",
                        "reason": f"no feasible violation subset of size {count}"
                        + (f" (last solve: {last_status})" if last_status else ""),
                    }
                )
            else:
                plan.append((ann.query.id, chosen))
    return plan, skips


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """A catalog, its annotated queries, and every emitted task case."""

    catalog: PoiCatalog
    annotated: tuple[AnnotatedQuery, ...]
    cases: tuple[TaskCase, ...]
    manifest: dict

    def index(self) -> dict[str, AnnotatedQuery]:
        return {ann.query.id: ann for ann in self.annotated}

    def case(self, case_id: str) -> TaskCase:
        for c in self.cases:
            if c.case_id == case_id:
                return c
        raise KeyError(case_id)

    def save(self, path: Union[str, Path]) -> None:
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        self.catalog.save_dir(root / "catalog")
        save_queries(root / "queries.json", list(self.annotated))
        with open(root / "cases.jsonl", "w", encoding="utf-8") as fh:
            for case in self.cases:
                fh.write(canonical_json(case.to_doc()) + "\n")
        (root / "manifest.json").write_text(
            canonical_json(self.manifest) + "\n", encoding="utf-8"
        )

    @staticmethod
    def load(path: Union[str, Path]) -> "Dataset":
        root = Path(path)
        catalog = PoiCatalog.load_dir(root / "catalog")
        annotated = tuple(load_queries(root / "queries.json"))
        cases = []
        with open(root / "cases.jsonl", "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    cases.append(TaskCase.from_doc(json.loads(line)))
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
        if manifest.get("format") != DATASET_FORMAT:
            raise ValueError(f"unsupported dataset format: {manifest.get('format')!r}")
        return Dataset(
            catalog=catalog, annotated=annotated, cases=tuple(cases), manifest=manifest
        )


def _oracle_tags(inputs: Mapping[str, Any]) -> dict[str, str]:
    return {key: "oracle" for key in inputs}


def _case(
    case_id: str, subtask: str, query_id: str, inputs: dict, gold: dict
) -> TaskCase:
    return TaskCase(
        case_id=case_id,
        subtask=subtask,
        query_id=query_id,
        inputs=inputs,
        gold=gold,
        input_provenance=_oracle_tags(inputs),
    )


def _registry_doc(profile: Profile) -> list[dict]:
    return [
        {
            "name": spec.name,
            "params": [{"name": p.name, "type": p.type} for p in spec.params],
            "result_kind": spec.result_kind.value,
        }
        for spec in register_profile(profile).values()
    ]


def _check_faulty(
    findings: Sequence[ErrorFinding],
    exprs: Sequence[Any],
    subset: Sequence[int],
    query_id: str,
) -> None:
    """A violation plan must verify to exactly the injected categories."""
    expected = sorted(category_of(exprs[i]).value for i in subset)
    got = sorted(f.category.value for f in findings)
    if got != expected:
        raise GenerationError(
            f"{query_id}: faulty plan verifies to {got}, expected {expected}"
        )
    if any(f.constraint is None for f in findings):
        raise GenerationError(f"{query_id}: structural finding in a violation plan")


def generate_dataset(
    catalog: PoiCatalog,
    annotated: Sequence[AnnotatedQuery],
    error_plan: Optional[Sequence[tuple[str, Sequence[int]]]] = None,
    *,
    seed: int = 0,
    error_counts: Sequence[int] = DEFAULT_ERROR_COUNTS,
    search_budget: int = DEFAULT_SEARCH_BUDGET,
) -> Dataset:
    """Emit every task case for the given queries.

    Per query: one extraction case, one tool-use case, one plan-generation
    case per context level, and one identification plus one correction case
    per entry of the error plan (by default: one feasible violation subset
    per error count 1..3).  Queries whose reference solve fails and error
    plan entries whose violation solve fails are skipped with a recorded
    reason; generation never fabricates an oracle artifact.
    """
    skipped: list[dict] = []
    if error_plan is None:
        error_plan, skipped = default_error_plan(
            catalog, annotated,
            seed=seed, error_counts=error_counts, search_budget=search_budget,
        )
    plan_by_query: dict[str, list[tuple[int, ...]]] = {}
    for query_id, subset in error_plan:
        entry = tuple(sorted(int(i) for i in subset))
        sizes = [len(s) for s in plan_by_query.get(query_id, [])]
        if len(entry) in sizes:
            raise ValueError(
                f"error plan has two size-{len(entry)} entries for {query_id}"
            )
        plan_by_query.setdefault(query_id, []).append(entry)

    cases: list[TaskCase] = []
    shortfalls: list[dict] = []

    def context_inputs(
        level: ContextLevel,
        case_id: str,
        query: Query,
        ref: Itinerary,
        faulty: Optional[Itinerary],
    ) -> dict:
        built = build_context(
            ref, faulty, catalog,
            ContextSpec.for_level(level, seed=seed),
            query=query, case_id=case_id,
        )
        for cell, got in built.shortfalls().items():
            shortfalls.append(
                {
                    "case_id": case_id,
                    "cell": list(cell),
                    "requested": built.requested_per_cell,
                    "got": got,
                }
            )
        return render_context(built.context, catalog)

    for ann in annotated:
        query = ann.query
        exprs = ann.parsed()
        query_doc = query.to_doc()
        constraint_texts = list(ann.constraints)

        ref_outcome = solve(
            SolveRequest(query, exprs, search_budget=search_budget), catalog
        )
        if ref_outcome.status != "feasible":
            skipped.append(
                {
                    "query_id": query.id,
                    "case": "*",
                    "reason": f"reference solve {ref_outcome.status}: "
                    f"{ref_outcome.certificate}",
                }
            )
            continue
        ref = ref_outcome.plan
        ref_findings = verify(ref, exprs, catalog, query)
        if ref_findings:
            raise GenerationError(
                f"{query.id}: reference plan fails verification: "
                f"{[f.category.value for f in ref_findings]}"
            )

        cases.append(
            _case(
                f"{query.id}.extraction", "extraction", query.id,
                inputs={"query": query_doc},
                gold={"constraints": constraint_texts},
            )
        )

        calls = gold_tool_calls(query, catalog)
        cases.append(
            _case(
                f"{query.id}.tool_use", "tool_use", query.id,
                inputs={"query": query_doc, "tools": _registry_doc(query.profile)},
                gold={"calls": [c.to_doc() for c in calls]},
            )
        )

        for level in PLAN_GEN_LEVELS:
            case_id = f"{query.id}.plan_gen.{level.value}"
            cases.append(
                _case(
                    case_id, "plan_gen", query.id,
                    inputs={
                        "query": query_doc,
                        "constraints": constraint_texts,
                        "context": context_inputs(level, case_id, query, ref, None),
                    },
                    gold={"plan": ref.to_doc()},
                )
            )

        for subset in sorted(plan_by_query.get(query.id, []), key=len):
            count = len(subset)
            outcome = solve(
                SolveRequest(
                    query, exprs,
                    neg_subset=frozenset(subset), search_budget=search_budget,
                ),
                catalog,
            )
            if outcome.status != "feasible":
                skipped.append(
                    {
                        "query_id": query.id,
                        "case": f"e{count}",
                        "reason": f"violation solve {outcome.status}: "
                        f"{outcome.certificate}",
                    }
                )
                continue
            faulty = outcome.plan
            findings = verify(faulty, exprs, catalog, query)
            _check_faulty(findings, exprs, subset, query.id)
            finding_docs = [f.to_doc() for f in findings]
            faulty_doc = faulty.to_doc()

            ident_id = f"{query.id}.identification.e{count}"
            cases.append(
                _case(
                    ident_id, "identification", query.id,
                    inputs={
                        "query": query_doc,
                        "constraints": constraint_texts,
                        "plan": faulty_doc,
                        "context": context_inputs(
                            ContextLevel.MINIMAL, ident_id, query, faulty, None
                        ),
                    },
                    gold={"findings": finding_docs},
                )
            )

            corr_id = f"{query.id}.correction.e{count}"
            cases.append(
                _case(
                    corr_id, "correction", query.id,
                    inputs={
                        "query": query_doc,
                        "constraints": constraint_texts,
                        "plan": faulty_doc,
                        "findings": finding_docs,
                        "context": context_inputs(
                            ContextLevel.CORRECTION, corr_id, query, ref, faulty
                        ),
                    },
                    gold={"plan": ref.to_doc()},
                )
            )

    counts: dict[str, int] = {name: 0 for name in SUBTASKS}
    for case in cases:
        counts[case.subtask] += 1
    manifest = {
        "format": DATASET_FORMAT,
        "seed": seed,
        "queries": len(annotated),
        "cases": len(cases),
        "case_counts": counts,
        "error_plan": [[qid, list(subset)] for qid, subset in error_plan],
        "skipped": skipped,
        "context_shortfalls": shortfalls,
    }
    return Dataset(
        catalog=catalog,
        annotated=tuple(annotated),
        cases=tuple(cases),
        manifest=manifest,
    )


# ---------------------------------------------------------------------------
# scoring one response against one case
# ---------------------------------------------------------------------------


def _coerce_list(value: Any) -> list:
    return list(value) if isinstance(value, (list, tuple)) else []


def _pred_calls(raw: Any) -> list[ToolCall]:
    calls = []
    for doc in _coerce_list(raw):
        try:
            calls.append(ToolCall.from_doc(doc))
        except Exception:
            # unparseable call entry: counts as a wrong call, not a crash
            calls.append(ToolCall(tool_name="", arguments=()))
    return calls


def score_case(
    dataset: Dataset,
    case: TaskCase,
    output: Any,
    *,
    failure: Optional[str] = None,
) -> CaseResult:
    """Score one agent output document for one case.

    A missing or malformed output scores as an empty answer for the case's
    subtask (never an exception), and ``failure`` stamps the result payload
    with why the output was absent.
    """
    ann = dataset.index()[case.query_id]
    query = ann.query
    exprs = ann.parsed()
    out: Mapping[str, Any] = output if isinstance(output, Mapping) else {}

    if case.subtask == "extraction":
        preds = [str(t) for t in _coerce_list(out.get("constraints"))]
        result = score_extraction(case.case_id, preds, exprs)
    elif case.subtask == "tool_use":
        gold_calls = [ToolCall.from_doc(d) for d in case.gold["calls"]]
        result = score_tool_use(case.case_id, _pred_calls(out.get("calls")), gold_calls)
    elif case.subtask == "plan_gen":
        result = score_plan(
            case.case_id, out.get("plan"), exprs, dataset.catalog, query,
            ref_plan=plan_from_doc(case.gold["plan"]),
            context_level=case.inputs["context"]["level"],
        )
    elif case.subtask == "identification":
        golds = findings_from_docs(case.gold["findings"])
        result = score_identification(
            case.case_id, _coerce_list(out.get("findings")), golds,
            error_count=len(golds),
        )
    elif case.subtask == "correction":
        originals = findings_from_docs(case.inputs["findings"])
        result = score_correction(
            case.case_id, out.get("plan"), originals, exprs, dataset.catalog, query
        )
    else:  # pragma: no cover - TaskCase forbids unknown subtasks
        raise ValueError(f"unknown subtask: {case.subtask!r}")

    if failure is not None:
        payload = dict(result.payload)
        payload["failure"] = failure
        return CaseResult(result.case_id, result.subtask, False, payload)
    return result


# ---------------------------------------------------------------------------
# agent endpoints
# ---------------------------------------------------------------------------

BUILTIN_AGENTS = ("builtin:oracle", "builtin:null")


class _BuiltinEndpoint:
    """In-process reference agents: gold echo and empty answers."""

    def __init__(self, kind: str):
        self.kind = kind

    def respond(
        self, case: TaskCase, request: Mapping[str, Any]
    ) -> tuple[Optional[dict], Optional[str]]:
        if self.kind == "oracle":
            return dict(case.gold), None
        return {}, None


class _SubprocessEndpoint:
    """One agent process per case: request on stdin, response line on stdout."""

    def __init__(self, command: str, *, timeout: float, retries: int):
        self.argv = shlex.split(command)
        if not self.argv:
            raise ValueError("empty agent command")
        self.timeout = timeout
        self.retries = retries

    def respond(
        self, case: TaskCase, request: Mapping[str, Any]
    ) -> tuple[Optional[dict], Optional[str]]:
        line = canonical_json(dict(request))
        failure = "malformed"
        for _ in range(self.retries + 1):
            try:
                proc = subprocess.run(
                    self.argv,
                    input=line + "\n",
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired:
                failure = "timeout"
                continue
            except OSError as exc:
                raise EndpointUnreachable(
                    f"cannot start agent {self.argv[0]!r}: {exc}"
                ) from exc
            if proc.returncode != 0:
                failure = f"agent_exit_{proc.returncode}"
                continue
            output = _parse_response(proc.stdout, case.case_id)
            if output is not None:
                return output, None
            failure = "malformed"
        return None, failure


class _HttpEndpoint:
    """POST one JSON request per case; the response body is the message."""

    def __init__(self, url: str, *, timeout: float, retries: int):
        self.url = url
        self.timeout = timeout
        self.retries = retries

    def respond(
        self, case: TaskCase, request: Mapping[str, Any]
    ) -> tuple[Optional[dict], Optional[str]]:
        body = canonical_json(dict(request)).encode("utf-8")
        failure = "malformed"
        for _ in range(self.retries + 1):
            req = urllib.request.Request(
                self.url, data=body, headers={"Content-Type": "application/json"}
            )
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    text = resp.read().decode("utf-8", errors="replace")
            except urllib.error.HTTPError as exc:
                failure = f"http_{exc.code}"
                continue
            except (socket.timeout, TimeoutError):
                failure = "timeout"
                continue
            except urllib.error.URLError as exc:
                raise EndpointUnreachable(f"{self.url}: {exc.reason}") from exc
            output = _parse_response(text, case.case_id)
            if output is not None:
                return output, None
            failure = "malformed"
        return None, failure


def _parse_response(text: str, case_id: str) -> Optional[dict]:
    """The output dict from a wire response, or None if anything is off."""
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            return None
        if (
            isinstance(doc, dict)
            and doc.get("case_id") == case_id
            and isinstance(doc.get("output"), dict)
        ):
            return doc["output"]
        return None
    return None


def resolve_endpoint(spec: str, *, timeout: float = 30.0, retries: int = 0):
    """An endpoint object for an agent spec string.

    `builtin:oracle` and `builtin:null` run in process; anything starting
    with http:// or https:// is POSTed to; everything else is treated as a
    shell command run once per case.
    """
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    if spec == "builtin:oracle":
        return _BuiltinEndpoint("oracle")
    if spec == "builtin:null":
        return _BuiltinEndpoint("null")
    if spec.startswith("http://") or spec.startswith("https://"):
        return _HttpEndpoint(spec, timeout=timeout, retries=retries)
    return _SubprocessEndpoint(spec, timeout=timeout, retries=retries)


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------


def _select_cases(
    dataset: Dataset, subtasks: Optional[Union[str, Iterable[str]]]
) -> list[TaskCase]:
    if subtasks is None:
        chosen = set(SUBTASKS)
    elif isinstance(subtasks, str):
        chosen = {subtasks}
    else:
        chosen = set(subtasks)
    unknown = chosen - set(SUBTASKS)
    if unknown:
        raise ValueError(f"unknown subtasks: {sorted(unknown)}")
    return [c for c in dataset.cases if c.subtask in chosen]


def run(
    dataset: Dataset,
    agent: Union[str, Any],
    *,
    subtasks: Optional[Union[str, Iterable[str]]] = None,
    parallel: int = 1,
    timeout: float = 30.0,
    retries: int = 0,
    include_gold: bool = False,
) -> dict:
    """Send every selected case to the agent and score the responses.

    ``agent`` is an endpoint spec string or any object with the endpoint
    ``respond(case, request)`` interface.  At most ``parallel`` requests are
    outstanding at once; the report is identical regardless of completion
    order.  A per-case timeout or malformed response fails that one case;
    only an unreachable endpoint aborts the run.
    """
    cases = _select_cases(dataset, subtasks)
    endpoint = (
        resolve_endpoint(agent, timeout=timeout, retries=retries)
        if isinstance(agent, str)
        else agent
    )

    def one(case: TaskCase) -> CaseResult:
        req = request_doc(case, include_gold=include_gold)
        output, failure = endpoint.respond(case, req)
        return score_case(dataset, case, output, failure=failure)

    if parallel < 1:
        raise ValueError("parallel must be >= 1")
    if parallel == 1:
        results = [one(case) for case in cases]
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(one, cases))

    return _report(
        results,
        config={
            "agent": agent if isinstance(agent, str) else type(agent).__name__,
            "cases": len(cases),
            "include_gold": include_gold,
            "parallel": parallel,
            "protocol": PROTOCOL_VERSION,
            "retries": retries,
            "subtasks": sorted({c.subtask for c in cases}),
            "timeout_s": timeout,
        },
    )


def score_responses(
    dataset: Dataset,
    responses: Iterable[Mapping[str, Any]],
    *,
    subtasks: Optional[Union[str, Iterable[str]]] = None,
) -> dict:
    """Offline scoring of recorded wire responses.

    Without an explicit subtask filter, every subtask that appears among
    the matched responses is scored in full, so unanswered cases of those
    subtasks count as failures rather than disappearing.
    """
    by_id: dict[str, Any] = {}
    unknown: list[str] = []
    case_ids = {c.case_id for c in dataset.cases}
    for doc in responses:
        if not isinstance(doc, Mapping) or "case_id" not in doc:
            continue
        cid = str(doc["case_id"])
        if cid not in case_ids:
            unknown.append(cid)
            continue
        by_id[cid] = doc.get("output")

    if subtasks is None:
        answered = {
            c.subtask for c in dataset.cases if c.case_id in by_id
        }
        subtasks = answered or set(SUBTASKS)
    cases = _select_cases(dataset, subtasks)

    results = []
    for case in cases:
        if case.case_id not in by_id:
            results.append(
                score_case(dataset, case, None, failure="missing_response")
            )
            continue
        output = by_id[case.case_id]
        failure = None if isinstance(output, Mapping) else "malformed"
        results.append(score_case(dataset, case, output, failure=failure))

    return _report(
        results,
        config={
            "agent": "recorded-responses",
            "cases": len(cases),
            "subtasks": sorted({c.subtask for c in cases}),
            "unknown_case_ids": sorted(set(unknown)),
        },
    )


def _report(results: list[CaseResult], config: dict) -> dict:
    ordered = sorted(results, key=lambda r: r.case_id)
    return {
        "format": REPORT_FORMAT,
        "config": config,
        "per_case": [r.to_doc() for r in ordered],
        "aggregates": aggregate(ordered),
    }


def load_responses(path: Union[str, Path]) -> list[dict]:
    """Wire responses from a JSON-lines file (blank lines ignored)."""
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                docs.append(json.loads(line))
    return docs
