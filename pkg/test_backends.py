"""Backends: mock, record/replay, OpenAI-compatible HTTP, and the token ledger."""

import json
import threading

import httpx
import pytest

from mtp.backends import (
    BACKEND_REGISTRY, CompletionRequest, CompletionResult, HttpBackend, MockBackend, RecordingBackend,
    ReplayBackend, TokenLedger, estimate_tokens, get_backend, get_backend_info, mock_backend, recording_backend,
    replay_backend,
)
from mtp.backends.replay import load_recording
from mtp.errors import (
    BackendConfigError, ProviderError, ReplayExhausted, ReplayMismatch, ScriptExhausted, TransportError,
)
from mtp.prompt import Prompt


def request(user="calculate age\ncur_year: int = 2024", model="gpt-4o-mini", site="m:1:1", **hyperparams):
    return CompletionRequest(Prompt("system text", user), model, hyperparams, site)


# -------------------- base types --------------------
def test_request_needs_a_model_name():
    with pytest.raises(ValueError):
        CompletionRequest(Prompt("s", "u"), "")


def test_result_rejects_negative_counts():
    with pytest.raises(ValueError):
        CompletionResult("x", -1, 0)


def test_estimate_tokens():
    assert estimate_tokens("one two  three\nfour") == 4
    assert estimate_tokens("") == 0


# -------------------- mock --------------------
def test_mock_answers_in_order():
    backend = mock_backend(["145", "146"])
    assert backend.complete(request()).text == "145"
    assert backend.complete(request()).text == "146"
    assert backend.calls == 2
    assert backend.remaining == 0


def test_mock_exhausted():
    backend = mock_backend(["145"])
    backend.complete(request())
    with pytest.raises(ScriptExhausted) as info:
        backend.complete(request())
    assert info.value.calls == 1


def test_mock_token_estimates():
    result = mock_backend(["a b c"]).complete(request(user="one two"))
    assert result.prompt_tokens == estimate_tokens("system text") + 2
    assert result.completion_tokens == 3


def test_mock_rules_take_precedence():
    backend = mock_backend(["from script"], rules=[("translate", '"Bonjour"'), (lambda r: r.site_id == "x:1:1", "7")])
    assert backend.complete(request(user="please translate this")).text == '"Bonjour"'
    assert backend.complete(request(site="x:1:1")).text == "7"
    assert backend.complete(request()).text == "from script"


def test_mock_records_requests():
    backend = mock_backend(["1"])
    backend.complete(request(temperature=0.2))
    assert backend.requests[0].hyperparams == {"temperature": 0.2}


# -------------------- record / replay --------------------
def test_record_then_replay(tmp_path):
    path = tmp_path / "run.jsonl"
    recorder = recording_backend(mock_backend(["145", '"Bonjour"']), path)
    first = recorder.complete(request(user="first"))
    second = recorder.complete(request(user="second", temperature=0.7))

    exchanges = load_recording(path)
    assert len(exchanges) == 2
    assert exchanges[1].request.hyperparams == {"temperature": 0.7}

    replay = replay_backend(path)
    assert replay.complete(request(user="first")) == first
    assert replay.complete(request(user="second")) == second
    assert replay.consumed == 2


def test_recording_lines_are_sorted_json(tmp_path):
    path = tmp_path / "run.jsonl"
    recording_backend(mock_backend(["145"]), path).complete(request())
    line = path.read_text(encoding="utf-8").splitlines()[0]
    assert list(json.loads(line)) == ["request", "result"]


def test_recorder_truncates_existing_file(tmp_path):
    path = tmp_path / "run.jsonl"
    path.write_text("stale\n", encoding="utf-8")
    RecordingBackend(mock_backend(), path)
    assert path.read_text(encoding="utf-8") == ""


def test_replay_mismatch(tmp_path):
    path = tmp_path / "run.jsonl"
    recording_backend(mock_backend(["145"]), path).complete(request(user="cur_year: int = 2024"))
    with pytest.raises(ReplayMismatch) as info:
        replay_backend(path).complete(request(user="cur_year: int = 2025"))
    assert info.value.index == 0
    assert "-cur_year: int = 2024" in info.value.diff_summary
    assert "+cur_year: int = 2025" in info.value.diff_summary


def test_replay_exhausted(tmp_path):
    path = tmp_path / "run.jsonl"
    recording_backend(mock_backend(["145"]), path).complete(request())
    replay = replay_backend(path)
    replay.complete(request())
    with pytest.raises(ReplayExhausted) as info:
        replay.complete(request())
    assert info.value.recorded == 1


def test_replay_missing_or_malformed(tmp_path):
    with pytest.raises(BackendConfigError):
        replay_backend(tmp_path / "absent.jsonl")
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"request": {}}\n', encoding="utf-8")
    with pytest.raises(BackendConfigError):
        replay_backend(bad)


def test_empty_recording_replays_nothing(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ReplayExhausted):
        ReplayBackend(load_recording(path)).complete(request())


# -------------------- http --------------------
def completion_body(text="145", prompt_tokens=812, completion_tokens=77):
    return {
        "id": "chatcmpl-1",
        "object": "chat.completion",
        "created": 0,
        "model": "gpt-4o-mini",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        "usage": {
            "prompt_tokens": prompt_tokens,
            "completion_tokens": completion_tokens,
            "total_tokens": prompt_tokens + completion_tokens,
        },
    }


class Recorder:
    """httpx handler replying with queued responses and keeping every request."""

    def __init__(self, *responses):
        self.responses = list(responses)
        self.requests = []

    def __call__(self, http_request: httpx.Request) -> httpx.Response:
        self.requests.append(http_request)
        response = self.responses.pop(0)
        if isinstance(response, Exception):
            raise response
        return response

    @property
    def bodies(self):
        return [json.loads(r.content) for r in self.requests]


def http(handler, transport_retries=0, **kwargs):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpBackend("https://llm.test/v1", "test-key", transport_retries=transport_retries,
                       http_client=client, **kwargs)


def test_http_success():
    handler = Recorder(httpx.Response(200, json=completion_body()))
    result = http(handler).complete(request(temperature=0.2, max_tokens=64))
    assert result == CompletionResult("145", 812, 77)

    sent = handler.requests[0]
    assert sent.url.path == "/v1/chat/completions"
    assert sent.headers["authorization"] == "Bearer test-key"
    body = handler.bodies[0]
    assert body["model"] == "gpt-4o-mini"
    assert body["temperature"] == 0.2
    # newer ChatOpenAI releases send max_tokens as max_completion_tokens
    assert body.get("max_completion_tokens", body.get("max_tokens")) == 64
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert body["messages"][1]["content"] == "calculate age\ncur_year: int = 2024"


def test_http_unknown_hyperparams_go_in_the_body():
    handler = Recorder(httpx.Response(200, json=completion_body()))
    http(handler).complete(request(top_k=5))
    assert handler.bodies[0]["top_k"] == 5


def test_http_request_hyperparams_override_backend_defaults():
    handler = Recorder(httpx.Response(200, json=completion_body()))
    http(handler, defaults={"temperature": 0.0, "seed": 7}).complete(request(temperature=0.9))
    assert handler.bodies[0]["temperature"] == 0.9
    assert handler.bodies[0]["seed"] == 7


def test_http_auth_failure_is_a_provider_error():
    handler = Recorder(httpx.Response(401, json={"error": {"message": "bad key", "type": "invalid_request_error"}}))
    with pytest.raises(ProviderError) as info:
        http(handler).complete(request())
    assert info.value.status == 401
    assert "bad key" in info.value.body_excerpt
    assert len(handler.requests) == 1


def test_http_server_error_without_retries():
    handler = Recorder(httpx.Response(503, json={"error": {"message": "overloaded"}}))
    with pytest.raises(TransportError):
        http(handler, transport_retries=0).complete(request())
    assert len(handler.requests) == 1


def test_http_retries_rate_limits():
    handler = Recorder(
        httpx.Response(429, headers={"retry-after-ms": "1"}, json={"error": {"message": "slow down"}}),
        httpx.Response(200, json=completion_body("146")),
    )
    result = http(handler, transport_retries=1).complete(request())
    assert result.text == "146"
    assert len(handler.requests) == 2


def test_http_connection_failure():
    handler = Recorder(httpx.ConnectError("refused"))
    with pytest.raises(TransportError):
        http(handler).complete(request())


# -------------------- factory --------------------
def test_get_backend_mock(tmp_path):
    script = tmp_path / "answers.script"
    script.write_text("145\n", encoding="utf-8")
    backend = get_backend("mock", mock_script=script)
    assert isinstance(backend, MockBackend)
    assert backend.remaining == 1


def test_get_backend_mock_with_recording(tmp_path):
    script = tmp_path / "answers.script"
    script.write_text("145\n", encoding="utf-8")
    backend = get_backend("mock", mock_script=script, record_path=tmp_path / "out.jsonl")
    assert isinstance(backend, RecordingBackend)
    assert backend.name == "record(mock)"


@pytest.mark.parametrize("kwargs", [
    {"kind": "mock"},
    {"kind": "mock", "mock_script": "/nonexistent/answers.script"},
    {"kind": "replay"},
    {"kind": "replay", "replay_path": "x.jsonl", "record_path": "y.jsonl"},
    {"kind": "carrier-pigeon"},
])
def test_get_backend_configuration_errors(kwargs):
    with pytest.raises(BackendConfigError):
        get_backend(**kwargs)


def test_http_backend_needs_a_key(monkeypatch):
    monkeypatch.delenv("MTP_API_KEY", raising=False)
    with pytest.raises(BackendConfigError) as info:
        get_backend("http")
    assert "MTP_API_KEY" in str(info.value)


def test_http_backend_rejects_bad_url(monkeypatch):
    monkeypatch.setenv("MTP_API_KEY", "test-key")
    monkeypatch.setenv("MTP_BASE_URL", "ftp://llm.test")
    with pytest.raises(BackendConfigError):
        get_backend("http")


def test_http_backend_from_environment(monkeypatch):
    monkeypatch.setenv("MTP_API_KEY", "test-key")
    monkeypatch.delenv("MTP_BASE_URL", raising=False)
    backend = get_backend("http", model="gpt-4o")
    assert isinstance(backend, HttpBackend)
    assert backend.default_model == "gpt-4o"


def test_backend_registry():
    assert set(BACKEND_REGISTRY) == {"mock", "replay", "http"}
    assert get_backend_info("mock").needs == ["--mock-script"]
    assert get_backend_info("nothing") is None


# -------------------- ledger --------------------
def test_ledger_sums_over_sites():
    ledger = TokenLedger()
    ledger.record("b:1:1", CompletionResult("x", 10, 2), "gpt-4o-mini")
    ledger.record("a:1:1", CompletionResult("x", 5, 1), "gpt-4o-mini")
    ledger.record("b:1:1", CompletionResult("x", 7, 3), "gpt-4o-mini")

    assert list(ledger.sites) == ["a:1:1", "b:1:1"]
    assert ledger.sites["b:1:1"].calls == 2
    assert (ledger.prompt_tokens, ledger.completion_tokens, ledger.calls) == (22, 6, 3)
    totals = ledger.to_dict()["total"]
    assert (totals["prompt_tokens"], totals["completion_tokens"], totals["calls"]) == (22, 6, 3)


def test_ledger_cost_estimate():
    ledger = TokenLedger()
    ledger.record("a:1:1", CompletionResult("x", 1000, 2000), "gpt-4o-mini")
    assert ledger.estimated_cost == pytest.approx(0.00135)
    ledger.record("b:1:1", CompletionResult("x", 1, 1), "mock-model")
    assert ledger.estimated_cost is None


def test_ledger_text_has_a_total_row():
    ledger = TokenLedger()
    ledger.record("m:1:1", CompletionResult("x", 12, 3))
    lines = ledger.render_text().splitlines()
    assert lines[0].split() == ["site", "calls", "prompt", "completion"]
    assert lines[-1].split() == ["total", "1", "12", "3"]


def test_empty_ledger():
    ledger = TokenLedger()
    assert ledger.to_dict() == {
        "sites": {},
        "total": {"prompt_tokens": 0, "completion_tokens": 0, "calls": 0, "estimated_cost_usd": None},
    }


def test_ledger_is_thread_safe():
    ledger = TokenLedger()

    def worker():
        for _ in range(200):
            ledger.record("m:1:1", CompletionResult("x", 2, 1))

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert (ledger.calls, ledger.prompt_tokens, ledger.completion_tokens) == (1600, 3200, 1600)
