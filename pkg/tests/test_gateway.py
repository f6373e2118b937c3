import json
from decimal import Decimal

import pytest

from exploitforge.gateway import (
    ChatRequest,
    HttpChatProvider,
    ScriptExhausted,
    ScriptMismatch,
    ScriptedChatProvider,
    TransportError,
    UsageLedger,
    compute_cost,
)

PRICING = dict(price_per_k_input=Decimal("0.00082"), price_per_k_output=Decimal("0.00329"))


def _req(tag: str, content: str) -> ChatRequest:
    return ChatRequest(messages=[{"role": "user", "content": content}], agent_tag=tag)


class TestScriptedProvider:
    def test_matching_step_returns_reply_with_usage(self):
        p = ScriptedChatProvider([
            {"expectAgentTag": "generate_exploit", "expectSubstrings": ["finalConstraints"],
             "reply": "ok"}])
        resp = p.chat(_req("generate_exploit", "... finalConstraints: ..."))
        assert resp.content == "ok"
        assert resp.input_tokens == -(-len("... finalConstraints: ...") // 4)
        assert resp.output_tokens == 1

    def test_missing_substring_is_mismatch(self):
        p = ScriptedChatProvider([
            {"expectAgentTag": "generate_exploit", "expectSubstrings": ["finalConstraints"],
             "reply": "ok"}])
        with pytest.raises(ScriptMismatch):
            p.chat(_req("generate_exploit", "prompt without the section"))

    def test_wrong_tag_is_mismatch(self):
        p = ScriptedChatProvider([{"expectAgentTag": "supervisor", "reply": "x"}])
        with pytest.raises(ScriptMismatch):
            p.chat(_req("generate_exploit", "anything"))

    def test_exhaustion_after_last_step(self):
        steps = [{"expectAgentTag": "supervisor", "reply": f"r{i}"} for i in range(3)]
        p = ScriptedChatProvider(steps)
        for i in range(3):
            assert p.chat(_req("supervisor", "p")).content == f"r{i}"
        with pytest.raises(ScriptExhausted):
            p.chat(_req("supervisor", "p"))

    def test_bit_identical_across_instances(self, tmp_path):
        steps = [{"expectAgentTag": "supervisor", "expectSubstrings": [], "reply": "alpha"},
                 {"expectAgentTag": "supervisor", "reply": "beta"}]
        path = tmp_path / "script.json"
        path.write_text(json.dumps(steps))
        prompts = ["first prompt", "second prompt"]
        runs = []
        for _ in range(2):
            p = ScriptedChatProvider.from_file(path)
            runs.append([(r.content, r.input_tokens, r.output_tokens)
                         for r in (p.chat(_req("supervisor", q)) for q in prompts)])
        assert runs[0] == runs[1]

    def test_times_expansion(self):
        p = ScriptedChatProvider([{"expectAgentTag": "supervisor", "reply": "x", "times": 3}])
        assert p.remaining == 3


class TestLedger:
    def test_totals_are_exact_sums(self):
        ledger = UsageLedger(**PRICING)
        calls = [("supervisor", 10, 2), ("generate_exploit", 1000, 300), ("validate", 7, 0)]
        for c in calls:
            ledger.record(*c)
        assert ledger.total_input == 1017
        assert ledger.total_output == 302
        assert ledger.per_call == calls

    def test_cost_linearity_under_merge(self):
        def exact(ledger):  # the cost before terminal rounding
            return (Decimal(ledger.total_input) / 1000 * ledger.price_per_k_input
                    + Decimal(ledger.total_output) / 1000 * ledger.price_per_k_output)

        a = UsageLedger(**PRICING)
        b = UsageLedger(**PRICING)
        a.record("x", 996165, 46412)
        b.record("y", 553877, 21674)
        merged = a.merged(b)
        assert merged.total_input == a.total_input + b.total_input
        assert merged.total_output == a.total_output + b.total_output
        assert exact(a) + exact(b) == exact(merged)  # linear before rounding
        assert compute_cost(merged) == exact(merged).quantize(Decimal("0.0001"))

    def test_round_trip(self):
        ledger = UsageLedger(**PRICING)
        ledger.record("supervisor", 5, 6)
        again = UsageLedger.from_json(ledger.to_json())
        assert again.per_call == ledger.per_call
        assert again.price_per_k_input == ledger.price_per_k_input


class TestComputeCost:
    def test_reported_totals_all_row(self):
        ledger = UsageLedger(**PRICING)
        ledger.record("all", 996165, 46412)
        assert compute_cost(ledger) == Decimal("0.9696")

    def test_reported_totals_success_row(self):
        ledger = UsageLedger(**PRICING)
        ledger.record("succ", 553877, 21674)
        assert compute_cost(ledger) == Decimal("0.5255")

    def test_zero(self):
        assert compute_cost(UsageLedger(**PRICING)) == Decimal("0.0000")

    def test_half_even_rounding(self):
        ledger = UsageLedger(price_per_k_input=Decimal("0.001"),
                             price_per_k_output=Decimal("0"))
        ledger.record("x", 50, 0)  # 0.00005 -> ties to even -> 0.0000
        assert compute_cost(ledger) == Decimal("0.0000")
        ledger.record("x", 100, 0)  # 0.00015 -> ties to even -> 0.0002
        assert compute_cost(ledger) == Decimal("0.0002")


class TestHttpProvider:
    def test_retries_then_succeeds(self, monkeypatch):
        calls = []

        class FakeResponse:
            def __init__(self, status, body=None):
                self.status_code = status
                self.text = "err"
                self._body = body

            def json(self):
                return self._body

        def fake_post(url, json=None, headers=None, timeout=None):
            calls.append(url)
            if len(calls) < 3:
                return FakeResponse(500)
            return FakeResponse(200, {
                "choices": [{"message": {"content": "hello"}}],
                "usage": {"prompt_tokens": 11, "completion_tokens": 7},
            })

        monkeypatch.setattr("exploitforge.gateway.requests.post", fake_post)
        monkeypatch.setattr("exploitforge.gateway.time.sleep", lambda s: None)
        provider = HttpChatProvider("http://llm.test/v1/chat", "m1", api_key="k")
        resp = provider.chat(_req("supervisor", "hi"))
        assert resp.content == "hello"
        assert (resp.input_tokens, resp.output_tokens) == (11, 7)
        assert len(calls) == 3

    def test_gives_up_after_three_attempts(self, monkeypatch):
        monkeypatch.setattr("exploitforge.gateway.requests.post",
                            lambda *a, **k: (_ for _ in ()).throw(
                                __import__("requests").RequestException("down")))
        monkeypatch.setattr("exploitforge.gateway.time.sleep", lambda s: None)
        provider = HttpChatProvider("http://llm.test", "m1", api_key="k")
        with pytest.raises(TransportError):
            provider.chat(_req("supervisor", "hi"))

    def test_client_errors_do_not_retry(self, monkeypatch):
        calls = []

        class FakeResponse:
            status_code = 403
            text = "forbidden"

        def fake_post(*a, **k):
            calls.append(1)
            return FakeResponse()

        monkeypatch.setattr("exploitforge.gateway.requests.post", fake_post)
        provider = HttpChatProvider("http://llm.test", "m1", api_key="k")
        with pytest.raises(TransportError):
            provider.chat(_req("supervisor", "hi"))
        assert len(calls) == 1
