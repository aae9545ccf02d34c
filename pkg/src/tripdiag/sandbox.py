"""Deterministic offline tool sandbox over a POI catalog.

Three closed tool registries mirror the three benchmark profiles. Every tool
resolves against the catalog with fixed result ordering, so identical calls
always return identical record lists. Tool and parameter checking for
scoring lives here too (``validate_call``), with a small versioned value
normalizer: strings are trimmed and casefolded, several common date
spellings collapse to ISO, clock times gain a leading zero, and numbers
compare numerically.

Filter arguments of the ``*_select`` tools accept one single-field
comparison, optionally spelled as a lambda ("lambda x: x <= 400"); chained
ranges ("lambda x: 50 <= x <= 100") count as one condition on one field.
Numbers in price filters are major currency units (scaled to minor), numbers
in rating filters use the one-decimal rating scale.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .catalog import PoiCatalog
from .model import Kind, PoiRecord, Profile, ToolCall, parse_iso_date

NORMALIZER_VERSION = 1


class ToolError(Exception):
    """Sandbox call rejection with a machine-readable code."""

    CODES = (
        "unknown_tool",
        "bad_arity",
        "bad_type",
        "unknown_city",
        "bad_date",
        "bad_filter",
    )

    def __init__(self, code: str, message: str):
        assert code in self.CODES
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str  # string | int | number | date | time | date_list


@dataclass(frozen=True)
class ToolSpec:
    name: str
    params: tuple[ParamSpec, ...]
    result_kind: Kind
    profile: Profile

    @property
    def arity(self) -> int:
        return len(self.params)


def _spec(profile: Profile, name: str, params: Sequence[tuple[str, str]], result: Kind) -> ToolSpec:
    return ToolSpec(
        name=name,
        params=tuple(ParamSpec(n, t) for n, t in params),
        result_kind=result,
        profile=profile,
    )


_CITY = ("city", "string")
_PROFILE_TOOLS: dict[Profile, tuple[ToolSpec, ...]] = {
    Profile.TP_LIKE: (
        _spec(Profile.TP_LIKE, "FlightSearch",
              [("origin", "string"), ("destination", "string"), ("date", "date")], Kind.FLIGHT),
        _spec(Profile.TP_LIKE, "AccommodationSearch", [_CITY], Kind.ACCOMMODATION),
        _spec(Profile.TP_LIKE, "AttractionSearch", [_CITY], Kind.ATTRACTION),
        _spec(Profile.TP_LIKE, "RestaurantSearch", [_CITY], Kind.RESTAURANT),
        _spec(Profile.TP_LIKE, "DistanceMatrix",
              [("origin", "string"), ("destination", "string"), ("mode", "string")],
              Kind.INTERCITY_TRANSIT),
    ),
    Profile.TC_LIKE: (
        _spec(Profile.TC_LIKE, "Flights",
              [("origin", "string"), ("destination", "string"), ("date", "date")], Kind.FLIGHT),
        _spec(Profile.TC_LIKE, "Accommodations", [_CITY], Kind.ACCOMMODATION),
        _spec(Profile.TC_LIKE, "Attractions", [_CITY], Kind.ATTRACTION),
        _spec(Profile.TC_LIKE, "Restaurants", [_CITY], Kind.RESTAURANT),
        _spec(Profile.TC_LIKE, "Events", [_CITY, ("date_range", "date_list")], Kind.EVENT),
        _spec(Profile.TC_LIKE, "GoogleDistanceMatrix",
              [("origin", "string"), ("destination", "string"), ("mode", "string")],
              Kind.INTERCITY_TRANSIT),
    ),
    Profile.CT_LIKE: (
        _spec(Profile.CT_LIKE, "attractions_select",
              [_CITY, ("key", "string"), ("filter", "string")], Kind.ATTRACTION),
        _spec(Profile.CT_LIKE, "accommodations_select",
              [_CITY, ("key", "string"), ("filter", "string")], Kind.ACCOMMODATION),
        _spec(Profile.CT_LIKE, "restaurants_select",
              [_CITY, ("key", "string"), ("filter", "string")], Kind.RESTAURANT),
        _spec(Profile.CT_LIKE, "restaurants_nearby",
              [_CITY, ("point", "string"), ("topk", "int"), ("dist", "number")], Kind.RESTAURANT),
        _spec(Profile.CT_LIKE, "intercity_transport_select",
              [("origin", "string"), ("destination", "string"), ("mode", "string"),
               ("earliest", "time")], Kind.INTERCITY_TRANSIT),
        _spec(Profile.CT_LIKE, "goto",
              [_CITY, ("origin", "string"), ("destination", "string"), ("time", "time"),
               ("mode", "string")], Kind.INNERCITY_TRANSIT),
    ),
}


def register_profile(profile: Profile) -> dict[str, ToolSpec]:
    """The closed tool table for one profile, keyed by tool name."""
    return {spec.name: spec for spec in _PROFILE_TOOLS[profile]}


# ---------------------------------------------------------------------------
# value normalization (shared by invocation and call validation)
# ---------------------------------------------------------------------------

_TIME_RE = re.compile(r"^(\d{1,2}):(\d{2})$")
_DATE_WORDY = (
    "%B %d, %Y",   # March 13, 2022
    "%b %d, %Y",   # Mar 13, 2022
    "%d %B %Y",    # 13 March 2022
    "%Y/%m/%d",
)


def normalize_date(text: str) -> Optional[str]:
    """ISO form of a date string, or None if it doesn't look like a date."""
    import datetime as dt

    raw = text.strip()
    try:
        return parse_iso_date(raw).isoformat()
    except ValueError:
        pass
    for fmt in _DATE_WORDY:
        try:
            return dt.datetime.strptime(raw, fmt).date().isoformat()
        except ValueError:
            continue
    return None


def parse_clock(text: str) -> Optional[int]:
    """Minutes since midnight for 'H:MM' / 'HH:MM', else None."""
    m = _TIME_RE.match(text.strip())
    if not m:
        return None
    hours, minutes = int(m.group(1)), int(m.group(2))
    if hours > 23 or minutes > 59:
        return None
    return hours * 60 + minutes


def normalize_value(value: Any) -> Any:
    """Comparison form of one argument value (normalizer version 1)."""
    if isinstance(value, str):
        as_date = normalize_date(value)
        if as_date is not None:
            return as_date
        clock = parse_clock(value)
        if clock is not None:
            return ("time", clock)
        return value.strip().casefold()
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        as_float = float(value)
        return int(as_float) if as_float.is_integer() else as_float
    if isinstance(value, (list, tuple)):
        return tuple(normalize_value(v) for v in value)
    return value


def _canon_tool_name(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.casefold())


# ---------------------------------------------------------------------------
# invocation
# ---------------------------------------------------------------------------


def _resolve_city(catalog: PoiCatalog, raw: str) -> str:
    wanted = raw.strip().casefold()
    for city in sorted(catalog.cities()):
        if city.casefold() == wanted:
            return city
    raise ToolError("unknown_city", f"no such city {raw!r}")


def _typed_args(spec: ToolSpec, call: ToolCall) -> dict[str, Any]:
    given = dict(call.arguments)
    extra = set(given) - {p.name for p in spec.params}
    if extra:
        raise ToolError("bad_arity", f"{spec.name}: unexpected argument(s) {sorted(extra)}")
    out: dict[str, Any] = {}
    for param in spec.params:
        if param.name not in given:
            raise ToolError("bad_arity", f"{spec.name}: missing argument {param.name!r}")
        value = given[param.name]
        if param.type == "string":
            if not isinstance(value, str):
                raise ToolError("bad_type", f"{param.name} must be a string")
        elif param.type == "int":
            if not isinstance(value, int) or isinstance(value, bool):
                raise ToolError("bad_type", f"{param.name} must be an integer")
        elif param.type == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ToolError("bad_type", f"{param.name} must be a number")
        elif param.type == "date":
            if not isinstance(value, str) or normalize_date(value) is None:
                raise ToolError("bad_date", f"{param.name} must be a date, got {value!r}")
            value = normalize_date(value)
        elif param.type == "time":
            if not isinstance(value, str) or parse_clock(value) is None:
                raise ToolError("bad_type", f"{param.name} must be 'HH:MM', got {value!r}")
        elif param.type == "date_list":
            if (
                not isinstance(value, (list, tuple))
                or len(value) != 2
                or any(not isinstance(v, str) or normalize_date(v) is None for v in value)
            ):
                raise ToolError("bad_date", f"{param.name} must be a [start, end] date pair")
            value = [normalize_date(v) for v in value]
        out[param.name] = value
    return out


_FILTER_FIELDS = {"price": 100, "rating": 10}  # field -> literal scale factor

_NUM_RE = r"\d+(?:\.\d+)?"
_OP_RE = r"(?:<=|>=|==|<|>)"
_SINGLE_FILTER_RE = re.compile(rf"^(?:x\s*({_OP_RE})\s*({_NUM_RE})|({_NUM_RE})\s*({_OP_RE})\s*x)$")
_RANGE_FILTER_RE = re.compile(
    rf"^({_NUM_RE})\s*(<=|<)\s*x\s*(<=|<)\s*({_NUM_RE})$"
)

_MIRROR = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "=="}


def _scale(num_text: str, factor: int) -> int:
    if "." in num_text:
        whole, frac = num_text.split(".", 1)
    else:
        whole, frac = num_text, ""
    digits = len(frac)
    value = int(whole + frac) if whole + frac else 0
    scaled = value * factor
    if scaled % (10 ** digits):
        raise ToolError("bad_filter", f"too many decimals in {num_text!r}")
    return scaled // (10 ** digits)


def parse_filter(key: str, text: str):
    """One single-field predicate over record[key]; returns int -> bool."""
    if key not in _FILTER_FIELDS:
        raise ToolError("bad_filter", f"unsupported filter key {key!r}")
    factor = _FILTER_FIELDS[key]
    body = text.strip()
    body = re.sub(r"^lambda\s+x\s*:", "", body).strip()
    m = _RANGE_FILTER_RE.match(body)
    if m:
        lo = _scale(m.group(1), factor)
        hi = _scale(m.group(4), factor)
        lo_ok = (lambda v: lo <= v) if m.group(2) == "<=" else (lambda v: lo < v)
        hi_ok = (lambda v: v <= hi) if m.group(3) == "<=" else (lambda v: v < hi)
        return lambda v: lo_ok(v) and hi_ok(v)
    m = _SINGLE_FILTER_RE.match(body)
    if not m:
        raise ToolError("bad_filter", f"not a single-field comparison: {text!r}")
    if m.group(1):
        op, bound = m.group(1), _scale(m.group(2), factor)
    else:
        op, bound = _MIRROR[m.group(4)], _scale(m.group(3), factor)
    return {
        "<": lambda v: v < bound,
        "<=": lambda v: v <= bound,
        ">": lambda v: v > bound,
        ">=": lambda v: v >= bound,
        "==": lambda v: v == bound,
    }[op]


def _sort_records(records: list[PoiRecord], kind: Kind) -> list[PoiRecord]:
    if kind is Kind.FLIGHT or kind is Kind.INTERCITY_TRANSIT:
        return sorted(records, key=lambda r: (r.attributes.get("depart", 0), r.id))
    if kind is Kind.ACCOMMODATION:
        return sorted(records, key=lambda r: (r.price, r.id))
    return sorted(records, key=lambda r: r.id)


def invoke(call: ToolCall, catalog: PoiCatalog, profile: Profile) -> list[PoiRecord]:
    """Execute one sandbox call. Deterministic; raises ToolError on misuse."""
    registry = register_profile(profile)
    spec = registry.get(call.tool_name)
    if spec is None:
        raise ToolError("unknown_tool", f"{call.tool_name!r} is not in the {profile.value} registry")
    args = _typed_args(spec, call)
    name = spec.name

    if name in ("FlightSearch", "Flights"):
        origin = _resolve_city(catalog, args["origin"])
        dest = _resolve_city(catalog, args["destination"])
        found = [
            r for r in catalog.by_kind(Kind.FLIGHT)
            if r.attributes.get("origin") == origin
            and r.attributes.get("destination") == dest
            and r.attributes.get("date") == args["date"]
        ]
        return _sort_records(found, Kind.FLIGHT)

    if name in ("AccommodationSearch", "Accommodations"):
        city = _resolve_city(catalog, args["city"])
        return _sort_records(catalog.by_kind(Kind.ACCOMMODATION, city), Kind.ACCOMMODATION)

    if name in ("AttractionSearch", "Attractions"):
        city = _resolve_city(catalog, args["city"])
        return _sort_records(catalog.by_kind(Kind.ATTRACTION, city), Kind.ATTRACTION)

    if name in ("RestaurantSearch", "Restaurants"):
        city = _resolve_city(catalog, args["city"])
        return _sort_records(catalog.by_kind(Kind.RESTAURANT, city), Kind.RESTAURANT)

    if name == "Events":
        city = _resolve_city(catalog, args["city"])
        start, end = args["date_range"]
        found = [
            r for r in catalog.by_kind(Kind.EVENT, city)
            if start <= str(r.attributes.get("date", "")) <= end
        ]
        return _sort_records(found, Kind.EVENT)

    if name in ("DistanceMatrix", "GoogleDistanceMatrix"):
        origin = _resolve_city(catalog, args["origin"])
        dest = _resolve_city(catalog, args["destination"])
        mode = args["mode"].strip().casefold()
        found = [
            r for r in catalog.by_kind(Kind.INTERCITY_TRANSIT)
            if r.attributes.get("origin") == origin
            and r.attributes.get("destination") == dest
            and str(r.attributes.get("mode", "")).casefold() == mode
        ]
        return _sort_records(found, Kind.INTERCITY_TRANSIT)

    if name.endswith("_select") and name != "intercity_transport_select":
        city = _resolve_city(catalog, args["city"])
        predicate = parse_filter(args["key"], args["filter"])
        found = [
            r for r in catalog.by_kind(spec.result_kind, city)
            if isinstance(r.attributes.get(args["key"]), int)
            and predicate(r.attributes[args["key"]])
        ]
        return _sort_records(found, spec.result_kind)

    if name == "restaurants_nearby":
        city = _resolve_city(catalog, args["city"])
        point = args["point"].strip().casefold()
        if args["topk"] < 1:
            raise ToolError("bad_type", "topk must be >= 1")
        max_m = int(round(float(args["dist"]) * 1000))
        by_name = {r.name: r for r in catalog.by_kind(Kind.RESTAURANT, city)}
        hits: list[tuple[int, str]] = []
        for leg in catalog.by_kind(Kind.INNERCITY_TRANSIT, city):
            if str(leg.attributes.get("origin", "")).casefold() != point:
                continue
            dest_name = str(leg.attributes.get("destination", ""))
            dist_m = leg.attributes.get("distance_m")
            if dest_name in by_name and isinstance(dist_m, int) and dist_m <= max_m:
                hits.append((dist_m, dest_name))
        hits.sort()
        seen: set[str] = set()
        out: list[PoiRecord] = []
        for _, dest_name in hits:
            if dest_name not in seen:
                seen.add(dest_name)
                out.append(by_name[dest_name])
            if len(out) == args["topk"]:
                break
        return out

    if name == "intercity_transport_select":
        origin = _resolve_city(catalog, args["origin"])
        dest = _resolve_city(catalog, args["destination"])
        mode = args["mode"].strip().casefold()
        earliest = parse_clock(args["earliest"])
        found = [
            r for r in catalog.by_kind(Kind.INTERCITY_TRANSIT)
            if r.attributes.get("origin") == origin
            and r.attributes.get("destination") == dest
            and str(r.attributes.get("mode", "")).casefold() == mode
            and r.attributes.get("depart", 0) >= earliest
        ]
        return _sort_records(found, Kind.INTERCITY_TRANSIT)

    if name == "goto":
        city = _resolve_city(catalog, args["city"])
        frm = args["origin"].strip().casefold()
        to = args["destination"].strip().casefold()
        mode = args["mode"].strip().casefold()
        found = [
            r for r in catalog.by_kind(Kind.INNERCITY_TRANSIT, city)
            if str(r.attributes.get("origin", "")).casefold() == frm
            and str(r.attributes.get("destination", "")).casefold() == to
            and str(r.attributes.get("mode", "")).casefold() == mode
        ]
        return _sort_records(found, Kind.INNERCITY_TRANSIT)

    raise AssertionError(f"unhandled tool {name}")


# ---------------------------------------------------------------------------
# call validation for scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArgReport:
    name: str
    ok: bool
    reason: str = ""


@dataclass(frozen=True)
class ValidationReport:
    gold_tool: str
    pred_tool: str
    tool_ok: bool
    params_ok: bool
    arg_reports: tuple[ArgReport, ...] = ()

    @property
    def overall_ok(self) -> bool:
        return self.tool_ok and self.params_ok

    def to_doc(self) -> dict:
        return {
            "gold_tool": self.gold_tool,
            "pred_tool": self.pred_tool,
            "tool_ok": self.tool_ok,
            "params_ok": self.params_ok,
            "overall_ok": self.overall_ok,
            "args": [
                {"name": a.name, "ok": a.ok, "reason": a.reason} for a in self.arg_reports
            ],
        }


def validate_call(pred: ToolCall, expected: ToolCall) -> ValidationReport:
    """Name and argument agreement between a predicted call and the gold one.

    Names compare case- and punctuation-insensitively. Every expected
    argument must be present (by name) with a value equal under the
    normalizer; extra predicted arguments are ignored. ``overall_ok`` is the
    conjunction of the two checks.
    """
    tool_ok = _canon_tool_name(pred.tool_name) == _canon_tool_name(expected.tool_name)
    given = dict(pred.arguments)
    reports: list[ArgReport] = []
    params_ok = True
    for name, gold_value in expected.arguments:
        if name not in given:
            reports.append(ArgReport(name, False, "missing"))
            params_ok = False
            continue
        pred_norm = normalize_value(given[name])
        gold_norm = normalize_value(gold_value)
        if pred_norm == gold_norm:
            reports.append(ArgReport(name, True))
        else:
            reports.append(ArgReport(name, False, f"expected {gold_value!r}, got {given[name]!r}"))
            params_ok = False
    return ValidationReport(
        gold_tool=expected.tool_name,
        pred_tool=pred.tool_name,
        tool_ok=tool_ok,
        params_ok=params_ok,
        arg_reports=tuple(reports),
    )


__all__ = [
    "ArgReport",
    "NORMALIZER_VERSION",
    "ParamSpec",
    "ToolError",
    "ToolSpec",
    "ValidationReport",
    "invoke",
    "normalize_date",
    "normalize_value",
    "parse_clock",
    "parse_filter",
    "register_profile",
    "validate_call",
]
