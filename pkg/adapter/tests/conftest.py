import json
from importlib import resources

import pytest

from llm_adapter import AdapterConfig

QUERY_DOC = {
    "id": "q1",
    "text": "Three days in Halst for two people, thai food one night.",
    "origin": "Arden",
    "destinations": ["Halst"],
    "dates": ["2026-05-01", "2026-05-02", "2026-05-03"],
    "people": 2,
    "profile": "tp-like",
}

CONSTRAINTS = [
    "days(plan) == 3",
    "people_number(plan) == 2",
    "'thai' in cuisines(plan)",
]

PLAN_DOC = {
    "format": 1,
    "query_id": "q1",
    "days": [
        {
            "date": "2026-05-01",
            "items": [
                {"kind": "attraction", "poi_id": "att-1", "unit_cost": 900, "quantity": 2}
            ],
        }
    ],
}

FINDINGS = [{"category": "cuisine", "constraint": "'thai' in cuisines(plan)"}]

CONTEXT_DOC = {
    "level": "minimal",
    "records": [
        {"id": "att-1", "kind": "attraction", "city": "Halst", "name": "Old Fort"}
    ],
}

TOOLS_DOC = [
    {
        "name": "FlightSearch",
        "params": [
            {"name": "origin", "type": "str"},
            {"name": "destination", "type": "str"},
            {"name": "date", "type": "str"},
        ],
        "result_kind": "flight",
    }
]

GOLD_BY_SUBTASK = {
    "extraction": {"constraints": CONSTRAINTS},
    "tool_use": {
        "calls": [
            {
                "tool": "FlightSearch",
                "arguments": [
                    {"name": "origin", "value": "Arden"},
                    {"name": "destination", "value": "Halst"},
                    {"name": "date", "value": "2026-05-01"},
                ],
            }
        ]
    },
    "plan_gen": {"plan": PLAN_DOC},
    "identification": {"findings": FINDINGS},
    "correction": {"plan": PLAN_DOC},
}


def make_request(subtask, *, profile="tp-like", with_gold=True):
    query = dict(QUERY_DOC, profile=profile)
    inputs = {"query": query}
    if subtask in ("plan_gen", "identification", "correction"):
        inputs["constraints"] = list(CONSTRAINTS)
        inputs["context"] = json.loads(json.dumps(CONTEXT_DOC))
    if subtask == "tool_use":
        inputs["tools"] = json.loads(json.dumps(TOOLS_DOC))
    if subtask in ("identification", "correction"):
        inputs["plan"] = json.loads(json.dumps(PLAN_DOC))
    if subtask == "correction":
        inputs["findings"] = json.loads(json.dumps(FINDINGS))
    request = {
        "protocol": 1,
        "case_id": f"q1.{subtask}",
        "subtask": subtask,
        "inputs": inputs,
    }
    if with_gold:
        request["gold"] = json.loads(json.dumps(GOLD_BY_SUBTASK[subtask]))
    return request


def echo_config_path() -> str:
    return str(resources.files("llm_adapter").joinpath("configs", "echo.ini"))


@pytest.fixture(scope="session")
def echo_cfg():
    return AdapterConfig.load(echo_config_path())
