"""Experiment configuration files and dotted-path overrides.

Config files are YAML mappings whose keys mirror :class:`ExperimentConfig`
(with a nested ``scenario`` mapping mirroring :class:`ScenarioConfig`).
Unknown keys are rejected with the offending line number.
"""

from __future__ import annotations

import copy
import dataclasses
from pathlib import Path

import yaml

from .errors import ConfigError, InvalidInputError
from .harness import ExperimentConfig
from .scenario import ScenarioConfig

SCENARIO_KEYS = {f.name for f in dataclasses.fields(ScenarioConfig)}
EXPERIMENT_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def default_dict() -> dict:
    return dataclasses.asdict(ExperimentConfig())


def _key_lines(node, prefix: str = "") -> dict[str, int]:
    lines: dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}{k.value}"
            lines[path] = k.start_mark.line + 1
            lines.update(_key_lines(v, path + "."))
    return lines


def _check_keys(data: dict, lines: dict[str, int], source: str) -> None:
    for key, val in data.items():
        if key not in EXPERIMENT_KEYS:
            raise ConfigError(f"{source}:{lines.get(key, '?')}: unknown key '{key}'")
        if key == "scenario":
            if not isinstance(val, dict):
                raise ConfigError(f"{source}:{lines.get(key, '?')}: 'scenario' must be a mapping")
            for sk in val:
                if sk not in SCENARIO_KEYS:
                    path = f"scenario.{sk}"
                    raise ConfigError(f"{source}:{lines.get(path, '?')}: unknown key '{path}'")


def read_config_file(path: str | Path) -> dict:
    """Parse a config file into a plain dict, validating key names only."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigError(f"{where}: {getattr(exc, 'problem', exc)}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _check_keys(data, _key_lines(node), str(path))
    return data


def merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = v
    return out


def apply_override(data: dict, override: str) -> dict:
    """Apply one ``dotted.key=value`` override; the value is parsed as YAML."""
    if "=" not in override:
        raise ConfigError(f"override '{override}' is not of the form key=value")
    key, raw = override.split("=", 1)
    key = key.strip()
    parts = key.split(".")
    if parts[0] not in EXPERIMENT_KEYS or (
        parts[0] == "scenario" and (len(parts) != 2 or parts[1] not in SCENARIO_KEYS)
    ) or (parts[0] != "scenario" and len(parts) != 1):
        raise ConfigError(f"override references unknown key '{key}'")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override '{key}': cannot parse value {raw!r}") from exc
    out = copy.deepcopy(data)
    target = out
    for p in parts[:-1]:
        target = target.setdefault(p, {})
    target[parts[-1]] = value
    return out


def build_config(data: dict) -> ExperimentConfig:
    """Instantiate and validate an :class:`ExperimentConfig` from a dict."""
    data = copy.deepcopy(data)
    try:
        scen = ScenarioConfig(**data.pop("scenario", {}))
        return ExperimentConfig(scenario=scen, **data)
    except (InvalidInputError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None = None, overrides=(), base: dict | None = None) -> ExperimentConfig:
    data = default_dict() if base is None else base
    if path is not None:
        data = merge(data, read_config_file(path))
    for ov in overrides:
        data = apply_override(data, ov)
    return build_config(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(dataclasses.asdict(cfg), sort_keys=False)
