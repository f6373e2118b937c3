"""Source/sink/sanitizer configuration.

Sources are fixed by rule (entry-point parameters). Sinks and sanitizers are
loaded from a JSON file; a default configuration ships with the package.

Pattern matching is exact-name based, no regular expressions:
  - a dotted pattern ("child_process.exec") matches the canonical resolved
    callee path or the textual dotted callee path;
  - a bare pattern ("toInt") matches the final identifier of the callee.

The pseudo-callee ``__computed_property_write__`` marks the prototype
pollution sink: a computed property write whose key and value are both
tainted. It is matched structurally, not as a call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

VULN_TYPES = ("CmdInj", "CodeInj", "Path", "Proto")
RESERVED_VULN_TYPES = ("JNDI",)  # declared, unimplemented on this runtime

PROTO_WRITE_MARKER = "__computed_property_write__"


@dataclass(frozen=True)
class SinkPattern:
    vuln_type: str
    callee: str
    arg_index: int

    def matches(self, canonical: str | None, dotted: str | None, bare: str | None) -> bool:
        if "." in self.callee:
            return self.callee in (canonical, dotted)
        return self.callee == bare or self.callee in (canonical, dotted)


@dataclass
class TaintSpec:
    sinks: list[SinkPattern] = field(default_factory=list)
    sanitizers: list[str] = field(default_factory=list)
    sources_rule: str = "parameters of entry points"

    @property
    def vuln_types(self) -> list[str]:
        seen: list[str] = []
        for s in self.sinks:
            if s.vuln_type not in seen:
                seen.append(s.vuln_type)
        return seen

    def proto_enabled(self) -> bool:
        return any(
            s.vuln_type == "Proto" and s.callee == PROTO_WRITE_MARKER for s in self.sinks
        )

    def is_sanitizer(self, canonical: str | None, dotted: str | None, bare: str | None) -> bool:
        for pat in self.sanitizers:
            if "." in pat:
                if pat in (canonical, dotted):
                    return True
            elif pat == bare or pat in (canonical, dotted):
                return True
        return False

    def restricted_to(self, vuln_types: list[str]) -> "TaintSpec":
        return TaintSpec(
            sinks=[s for s in self.sinks if s.vuln_type in vuln_types],
            sanitizers=list(self.sanitizers),
        )


def _spec_from_dict(data: dict) -> TaintSpec:
    sinks: list[SinkPattern] = []
    for entry in data.get("vulnTypes", []):
        vt = entry["vulnType"]
        if vt in RESERVED_VULN_TYPES:
            continue  # schema placeholder, no runtime support
        if vt not in VULN_TYPES:
            raise ValueError(f"unknown vulnType {vt!r} in taint spec")
        for sink in entry.get("sinks", []):
            sinks.append(SinkPattern(vt, sink["callee"], int(sink.get("argIndex", 0))))
    return TaintSpec(sinks=sinks, sanitizers=list(data.get("sanitizers", [])))


def load_taint_spec(path: str | Path) -> TaintSpec:
    with open(path, encoding="utf-8") as fh:
        return _spec_from_dict(json.load(fh))


def default_taint_spec() -> TaintSpec:
    text = resources.files("exploitforge.resources").joinpath("taint-spec.json").read_text("utf-8")
    return _spec_from_dict(json.loads(text))
