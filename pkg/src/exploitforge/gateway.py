"""Chat-completion boundary: HTTP provider, deterministic scripted provider,
and token/cost accounting.

The scripted provider is the test double the whole agent suite runs on: it
consumes a transcript of expected steps strictly in order, asserts that the
prompt really is the one the step expects (agent tag + required substrings),
and replies with canned text. Any divergence fails loudly.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal

import requests

API_KEY_ENV = "EXPLOITFORGE_API_KEY"

DEFAULT_TEMPERATURE = 0.0
DEFAULT_SEED = 1234


class GatewayError(Exception):
    pass


class TransportError(GatewayError):
    pass


class ScriptMismatch(GatewayError):
    pass


class ScriptExhausted(GatewayError):
    pass


@dataclass
class ChatRequest:
    messages: list[dict]  # {"role": "system"|"user"|"assistant", "content": str}
    temperature: float = DEFAULT_TEMPERATURE
    seed: int = DEFAULT_SEED
    max_output_tokens: int = 4096
    model_id: str = ""
    agent_tag: str = ""  # which sub-agent is asking; used by ledger and scripts

    def prompt_text(self) -> str:
        return "\n".join(m["content"] for m in self.messages)


@dataclass
class ChatResponse:
    content: str
    input_tokens: int
    output_tokens: int


@dataclass
class UsageLedger:
    per_call: list[tuple[str, int, int]] = field(default_factory=list)
    price_per_k_input: Decimal = Decimal("0")
    price_per_k_output: Decimal = Decimal("0")

    def record(self, agent_tag: str, input_tokens: int, output_tokens: int) -> None:
        self.per_call.append((agent_tag, int(input_tokens), int(output_tokens)))

    @property
    def total_input(self) -> int:
        return sum(c[1] for c in self.per_call)

    @property
    def total_output(self) -> int:
        return sum(c[2] for c in self.per_call)

    def merged(self, other: "UsageLedger") -> "UsageLedger":
        out = UsageLedger(price_per_k_input=self.price_per_k_input,
                          price_per_k_output=self.price_per_k_output)
        out.per_call = list(self.per_call) + list(other.per_call)
        return out

    def to_json(self) -> dict:
        return {
            "perCall": [
                {"agentTag": t, "inputTokens": i, "outputTokens": o}
                for t, i, o in self.per_call
            ],
            "totals": {"inputTokens": self.total_input, "outputTokens": self.total_output},
            "pricing": {
                "inputPerK": str(self.price_per_k_input),
                "outputPerK": str(self.price_per_k_output),
            },
        }

    @classmethod
    def from_json(cls, d: dict) -> "UsageLedger":
        ledger = cls(
            price_per_k_input=Decimal(d["pricing"]["inputPerK"]),
            price_per_k_output=Decimal(d["pricing"]["outputPerK"]),
        )
        for c in d["perCall"]:
            ledger.record(c["agentTag"], c["inputTokens"], c["outputTokens"])
        return ledger


def compute_cost(ledger: UsageLedger) -> Decimal:
    """input/1000 * pricePerKInput + output/1000 * pricePerKOutput,
    rounded half-even to 4 decimal places."""
    cost = (
        Decimal(ledger.total_input) / 1000 * ledger.price_per_k_input
        + Decimal(ledger.total_output) / 1000 * ledger.price_per_k_output
    )
    return cost.quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN)


# --- providers ---------------------------------------------------------------


class HttpChatProvider:
    """One HTTP round trip per chat() against a chat-completion endpoint,
    with bounded retries on transient failures."""

    RETRIES = 3
    BACKOFF_BASE = 1.0  # seconds, doubles per attempt

    def __init__(self, endpoint: str, model: str, api_key: str | None = None,
                 timeout: float = 120.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout

    def chat(self, request: ChatRequest) -> ChatResponse:
        payload = {
            "model": request.model_id or self.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "seed": request.seed,
            "max_tokens": request.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.RETRIES):
            try:
                resp = requests.post(self.endpoint, json=payload, headers=headers,
                                     timeout=self.timeout)
            except requests.RequestException as e:
                last_error = e
            else:
                if resp.status_code == 200:
                    body = resp.json()
                    usage = body.get("usage", {})
                    return ChatResponse(
                        content=body["choices"][0]["message"]["content"],
                        input_tokens=int(usage.get("prompt_tokens", 0)),
                        output_tokens=int(usage.get("completion_tokens", 0)),
                    )
                if resp.status_code not in (429,) and resp.status_code < 500:
                    raise TransportError(f"HTTP {resp.status_code}: {resp.text[:300]}")
                last_error = TransportError(f"HTTP {resp.status_code}")
            if attempt < self.RETRIES - 1:
                time.sleep(self.BACKOFF_BASE * (2 ** attempt))
        raise TransportError(f"chat endpoint unreachable after {self.RETRIES} attempts: {last_error}")


def _synthetic_tokens(text: str) -> int:
    # deterministic synthetic count for scripted runs: ceil(chars / 4)
    return math.ceil(len(text) / 4)


class ScriptedChatProvider:
    """Deterministic provider driven by a transcript of steps.

    Each step: {"expectAgentTag": str, "expectSubstrings": [str], "reply": str,
    "times": int (optional, default 1)}. Steps are consumed strictly in order;
    a step only matches when the request's agent tag equals expectAgentTag and
    every expected substring occurs in the rendered prompt.
    """

    def __init__(self, steps: list[dict]):
        self._steps: list[dict] = []
        for s in steps:
            times = int(s.get("times", 1))
            self._steps.extend([s] * times)
        self._index = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path) -> "ScriptedChatProvider":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @property
    def remaining(self) -> int:
        return len(self._steps) - self._index

    def chat(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            if self._index >= len(self._steps):
                raise ScriptExhausted(
                    f"transcript exhausted after {len(self._steps)} steps "
                    f"(next call was tagged {request.agent_tag!r})")
            step = self._steps[self._index]
            expect_tag = step.get("expectAgentTag", "")
            prompt = request.prompt_text()
            if expect_tag and expect_tag != request.agent_tag:
                raise ScriptMismatch(
                    f"step {self._index}: expected agent tag {expect_tag!r}, "
                    f"got {request.agent_tag!r}")
            for sub in step.get("expectSubstrings", []):
                if sub not in prompt:
                    raise ScriptMismatch(
                        f"step {self._index} (tag {expect_tag!r}): prompt lacks "
                        f"expected substring {sub!r}")
            self._index += 1
            reply = step["reply"]
            return ChatResponse(
                content=reply,
                input_tokens=_synthetic_tokens(prompt),
                output_tokens=_synthetic_tokens(reply),
            )
