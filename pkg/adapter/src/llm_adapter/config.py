"""Adapter configuration: one INI file, documented in the README.

Two sections. ``[model]`` picks the engine and its parameters; ``[templates]``
maps each enabled subtask (and optionally ``judge``) to a prompt template.
A template value is either a path relative to the config file or
``pkg:NAME`` for a template shipped inside this package. The marker
``{profile}`` inside a value is replaced per request with the query's
sandbox profile, so one entry can fan out to per-profile files.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .templates import TemplateError, load_template_text

SUBTASKS = ("extraction", "tool_use", "plan_gen", "identification", "correction")
KNOWN_PROFILES = ("tp-like", "tc-like", "ct-like")
ENGINES = ("echo", "http")


class ConfigError(Exception):
    """The config file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class AdapterConfig:
    engine: str
    model: str
    api_base: Optional[str]
    api_key_env: Optional[str]
    temperature: float
    reasoning: bool
    retries: int
    templates: Mapping[str, str]
    base_dir: Path = field(default_factory=Path)

    @property
    def enabled_subtasks(self) -> tuple[str, ...]:
        return tuple(s for s in SUBTASKS if s in self.templates)

    def template_text(self, name: str, profile: Optional[str] = None) -> str:
        """The template body for a subtask (or ``judge``), profile-expanded."""
        ref = self.templates.get(name)
        if ref is None:
            raise ConfigError(f"no template configured for {name!r}")
        if "{profile}" in ref:
            if not profile:
                raise TemplateError(
                    f"template for {name!r} is per-profile but the request "
                    f"names no profile"
                )
            ref = ref.replace("{profile}", profile)
        return load_template_text(ref, self.base_dir)


def load_config(path) -> AdapterConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if "model" not in parser:
        raise ConfigError(f"{path}: missing [model] section")

    model_sec = parser["model"]
    engine = model_sec.get("engine", "").strip()
    if engine not in ENGINES:
        raise ConfigError(
            f"{path}: engine must be one of {', '.join(ENGINES)}, got {engine!r}"
        )
    try:
        temperature = model_sec.getfloat("temperature", fallback=0.0)
        reasoning = model_sec.getboolean("reasoning", fallback=False)
        retries = model_sec.getint("retries", fallback=0)
    except ValueError as exc:
        raise ConfigError(f"{path}: [model] has a non-numeric field: {exc}") from exc
    if temperature < 0:
        raise ConfigError(f"{path}: temperature must be >= 0")
    if retries < 0:
        raise ConfigError(f"{path}: retries must be >= 0")

    api_base = model_sec.get("api_base", fallback=None)
    api_key_env = model_sec.get("api_key_env", fallback=None)
    if engine == "http":
        if not api_base:
            raise ConfigError(f"{path}: engine http requires api_base")
        if not api_key_env:
            raise ConfigError(f"{path}: engine http requires api_key_env")

    templates: dict[str, str] = {}
    if "templates" in parser:
        for key, ref in parser["templates"].items():
            if key not in SUBTASKS and key != "judge":
                raise ConfigError(f"{path}: unknown template key {key!r}")
            templates[key] = ref.strip()
    if not any(s in templates for s in SUBTASKS):
        raise ConfigError(f"{path}: [templates] enables no subtask")

    config = AdapterConfig(
        engine=engine,
        model=model_sec.get("name", engine).strip(),
        api_base=api_base,
        api_key_env=api_key_env,
        temperature=temperature,
        reasoning=reasoning,
        retries=retries,
        templates=templates,
        base_dir=path.parent,
    )
    # every enabled subtask must resolve to a readable template right now,
    # not on the first request that needs it
    for name, ref in templates.items():
        probes = (
            [ref.replace("{profile}", p) for p in KNOWN_PROFILES]
            if "{profile}" in ref
            else [ref]
        )
        for probe in probes:
            try:
                load_template_text(probe, config.base_dir)
            except TemplateError as exc:
                raise ConfigError(f"{path}: template {name!r}: {exc}") from exc
    return config


# dataclass-style alias so callers can write AdapterConfig.load(path)
AdapterConfig.load = staticmethod(load_config)
