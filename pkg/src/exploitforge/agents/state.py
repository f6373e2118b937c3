"""Domain state carried through one supervisor run."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..alerts import AlertInfo
from ..validator.types import ExecutionInfo, OracleResult

FP_CATEGORIES = ("SanitizerPresent", "StaticImprecision")


@dataclass(frozen=True)
class ConstraintItem:
    text: str
    origin: str  # "extraction" | "reflection"
    round: int

    def to_json(self) -> dict:
        return {"text": self.text, "origin": self.origin, "round": self.round}


@dataclass
class ConstraintSet:
    """Append-only conjunction of natural-language constraints.

    An empty set is the initial "anything goes" state; items only ever grow
    across rounds.
    """

    items: list[ConstraintItem] = field(default_factory=list)

    def extend(self, texts: list[str], origin: str, round_no: int) -> None:
        for t in texts:
            t = t.strip()
            if t:
                self.items.append(ConstraintItem(t, origin, round_no))

    def render_numbered(self) -> str:
        if not self.items:
            return "(no constraints yet: any input that reaches the sink)"
        return "\n".join(f"{i + 1}. {c.text}" for i, c in enumerate(self.items))

    def to_json(self) -> list:
        return [c.to_json() for c in self.items]

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class ExploitCandidate:
    source: str
    vuln_type: str
    attempt_index: int  # 1-based
    syntax_status: str = "unchecked"  # "unchecked" | "ok" | "failed"
    syntax_diagnostics: list[str] = field(default_factory=list)
    voided: bool = False  # anti-cheat rejected

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "vulnType": self.vuln_type,
            "attemptIndex": self.attempt_index,
            "syntaxStatus": self.syntax_status,
        }


@dataclass(frozen=True)
class FpReason:
    category: str  # one of FP_CATEGORIES
    explanation: str

    def to_json(self) -> dict:
        return {"category": self.category, "explanation": self.explanation}


@dataclass
class Verdict:
    outcome: str  # ExploitConfirmed | PoEOnly | FalsePositive | Exhausted
    exploit: ExploitCandidate | None = None
    oracle_evidence: str | None = None
    fp_reason: FpReason | None = None
    attempts_used: int = 0
    aborted: bool = False

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "exploit": self.exploit.to_json() if self.exploit else None,
            "oracleEvidence": self.oracle_evidence,
            "fpReason": self.fp_reason.to_json() if self.fp_reason else None,
            "attemptsUsed": self.attempts_used,
            "aborted": self.aborted,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Verdict":
        exploit = None
        if d.get("exploit"):
            e = d["exploit"]
            exploit = ExploitCandidate(e["source"], e["vulnType"], e["attemptIndex"],
                                       e.get("syntaxStatus", "unchecked"))
        fp = None
        if d.get("fpReason"):
            fp = FpReason(d["fpReason"]["category"], d["fpReason"]["explanation"])
        return cls(
            outcome=d["outcome"],
            exploit=exploit,
            oracle_evidence=d.get("oracleEvidence"),
            fp_reason=fp,
            attempts_used=int(d.get("attemptsUsed", 0)),
            aborted=bool(d.get("aborted", False)),
        )


@dataclass
class SupervisorState:
    alert: AlertInfo
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    candidates: list[ExploitCandidate] = field(default_factory=list)
    candidate: ExploitCandidate | None = None
    last_execution: ExecutionInfo | None = None
    last_oracle: OracleResult | None = None
    attempts: int = 0
    transcript: list[dict] = field(default_factory=list)
    pending_validation: bool = False  # a syntactically-ok candidate awaits validation
    poe_candidate: ExploitCandidate | None = None  # best sink-reaching attempt so far
    poe_evidence: str | None = None
    failed_validations: int = 0
    constraint_rounds: int = 0  # one per extraction round or reflection event

    def record(self, thought: str, action: str, observation: str) -> None:
        self.transcript.append(
            {"thought": thought, "action": action, "observation": observation})
