"""Reference agent for the tripdiag wire protocol.

Renders per-subtask prompt templates from case inputs, calls a model API
(or the no-API echo engine), parses the model text back into the wire
output schemas, and ships the constraint equivalence judge. Never imports
the harness package: the only coupling is the JSON protocol itself.
"""

from .config import AdapterConfig, ConfigError, SUBTASKS
from .engines import EchoEngine, EngineError, HttpEngine, make_engine
from .judge import exact_match_judgment, judge
from .parsing import output_for, validate_response
from .serve import respond, serve_stdio
from .templates import TemplateError, context_for, render

__all__ = [
    "AdapterConfig",
    "ConfigError",
    "SUBTASKS",
    "EchoEngine",
    "EngineError",
    "HttpEngine",
    "make_engine",
    "exact_match_judgment",
    "judge",
    "output_for",
    "validate_response",
    "respond",
    "serve_stdio",
    "TemplateError",
    "context_for",
    "render",
]
