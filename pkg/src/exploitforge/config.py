"""Run configuration: one flat JSON file, dotted key names, environment
overrides only for credentials."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

DETERMINISTIC_TIMESTAMP = "1970-01-01T00:00:00Z"


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    budget: int = 20
    extraction_cap: int = 12
    timeout_sec: float = 30.0
    llm_provider: str = "scripted"  # "scripted" | "http"
    llm_transcript: str | None = None  # file, or directory of <package>.json
    llm_endpoint: str = ""
    llm_model: str = ""
    price_input_per_k: Decimal = field(default_factory=lambda: Decimal("0.00082"))
    price_output_per_k: Decimal = field(default_factory=lambda: Decimal("0.00329"))
    taint_spec_path: str | None = None
    deterministic: bool = False
    oracle_from_traces: str | None = None  # replay dir: <package>/attempt-N.json
    shim_path: str | None = None
    parallel: int = 1

    def validate(self) -> None:
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.extraction_cap < 1:
            raise ConfigError("extractionCap must be >= 1")
        if self.deterministic and self.llm_provider != "scripted":
            raise ConfigError("deterministic mode forces the scripted provider")
        if self.llm_provider not in ("scripted", "http"):
            raise ConfigError(f"unknown llm.provider {self.llm_provider!r}")


_KEYS = {
    "budget": ("budget", int),
    "extractionCap": ("extraction_cap", int),
    "timeoutSec": ("timeout_sec", float),
    "deterministic": ("deterministic", bool),
    "taintSpecPath": ("taint_spec_path", str),
    "oracleFromTraces": ("oracle_from_traces", str),
    "shimPath": ("shim_path", str),
    "parallel": ("parallel", int),
    "llm.provider": ("llm_provider", str),
    "llm.transcript": ("llm_transcript", str),
    "llm.endpoint": ("llm_endpoint", str),
    "llm.model": ("llm_model", str),
    "llm.pricing.inputPerK": ("price_input_per_k", Decimal),
    "llm.pricing.outputPerK": ("price_output_per_k", Decimal),
}


def load_config(path: str | Path | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    for key, value in data.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        attr, conv = _KEYS[key]
        try:
            setattr(cfg, attr, conv(str(value)) if conv is Decimal else conv(value))
        except (ValueError, TypeError) as e:
            raise ConfigError(f"bad value for {key!r}: {e}") from None
    cfg.validate()
    return cfg
