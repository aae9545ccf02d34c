"""Constraint equivalence judging.

Given gold and predicted constraint arrays, produce the judge document:
per-prediction matches with ``matched_gold_idx`` (or null), plus tp/fp/fn
counts and ``tn`` fixed at 0. With the echo engine the judgment is exact
string matching and fully deterministic; with an API engine the judge
prompt is rendered and the model's JSON is parsed, after which the counts
are recomputed from the matches so arithmetic never depends on the model.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Optional, Sequence

from .engines import EngineError, make_engine
from .parsing import extract_json_block
from .templates import TemplateError, load_template_text, render


class JudgeError(Exception):
    """The judge could not produce a valid judgment document."""


def counts_from_matches(matches: Sequence[Mapping[str, Any]], n_gold: int) -> dict:
    matched = [m["matched_gold_idx"] for m in matches if m["matched_gold_idx"] is not None]
    return {
        "tp": len(matched),
        "fp": len(matches) - len(matched),
        "fn": n_gold - len(set(matched)),
        "tn": 0,
    }


def exact_match_judgment(gold: Sequence[str], pred: Sequence[str]) -> dict:
    matches = []
    for p in pred:
        idx: Optional[int] = gold.index(p) if p in gold else None
        matches.append(
            {
                "pred": p,
                "matched_gold_idx": idx,
                "brief_reason": (
                    "identical to that gold constraint"
                    if idx is not None
                    else "no identical gold constraint"
                ),
            }
        )
    doc = {"matches": matches}
    doc.update(counts_from_matches(matches, len(gold)))
    doc["summary"] = (
        f"{doc['tp']} matched, {doc['fp']} unmatched predictions, "
        f"{doc['fn']} gold constraints missed"
    )
    return doc


def _validated_matches(doc: Any, gold: Sequence[str], pred: Sequence[str]) -> list[dict]:
    if not isinstance(doc, Mapping) or not isinstance(doc.get("matches"), list):
        raise JudgeError("judge output carries no matches array")
    matches = []
    for entry in doc["matches"]:
        if not isinstance(entry, Mapping):
            raise JudgeError(f"bad match entry: {entry!r:.80}")
        idx = entry.get("matched_gold_idx")
        if idx is not None:
            if not isinstance(idx, int) or not 0 <= idx < len(gold):
                raise JudgeError(f"matched_gold_idx out of range: {idx!r}")
        matches.append(
            {
                "pred": str(entry.get("pred", "")),
                "matched_gold_idx": idx,
                "brief_reason": str(entry.get("brief_reason", "")),
            }
        )
    if len(matches) != len(pred):
        raise JudgeError(
            f"judge returned {len(matches)} matches for {len(pred)} predictions"
        )
    return matches


def judge(
    config,
    gold: Sequence[str],
    pred: Sequence[str],
    dsl_block: Optional[str] = None,
) -> dict:
    gold = [str(t) for t in gold]
    pred = [str(t) for t in pred]
    if config.engine == "echo":
        return exact_match_judgment(gold, pred)

    if dsl_block is None:
        dsl_block = load_template_text("pkg:dsl_reference.txt", config.base_dir)
    template = config.template_text("judge")
    prompt = render(
        template,
        {
            "dsl_block": dsl_block,
            "gold_json": json.dumps(gold, ensure_ascii=False),
            "pred_json": json.dumps(pred, ensure_ascii=False),
        },
    )
    engine = make_engine(config)
    text = engine.complete(prompt, {})
    parsed = extract_json_block(text)
    matches = _validated_matches(parsed, gold, pred)
    doc = {"matches": matches}
    doc.update(counts_from_matches(matches, len(gold)))
    summary = parsed.get("summary") if isinstance(parsed, Mapping) else None
    doc["summary"] = (
        summary
        if isinstance(summary, str) and summary
        else f"{doc['tp']} matched, {doc['fp']} unmatched predictions, "
        f"{doc['fn']} gold constraints missed"
    )
    return doc


__all__ = [
    "JudgeError",
    "EngineError",
    "TemplateError",
    "counts_from_matches",
    "exact_match_judgment",
    "judge",
]
