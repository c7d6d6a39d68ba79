import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from codetutor.errors import (
    ConfigError,
    HttpStatusError,
    MalformedResponseError,
    ScriptExhaustedError,
    TransportFailure,
)
from codetutor.gateway import (
    BackendConfig,
    RemoteBackend,
    ScriptedBackend,
    make_backend,
    serialize_request,
    with_retry,
)
from codetutor.prompts import RenderedPrompt

PROMPT = RenderedPrompt(messages=[("system", "role"), ("user", "What is a heap?")])


# -- scripted ----------------------------------------------------------------

def test_scripted_pops_in_order():
    backend = ScriptedBackend(["one", "two"])
    assert backend.complete(PROMPT).text == "one"
    assert backend.complete(PROMPT).text == "two"
    assert backend.cursor == 2
    assert len(backend.calls) == 2


def test_scripted_strict_exhaustion():
    backend = ScriptedBackend(["only"])
    backend.complete(PROMPT)
    with pytest.raises(ScriptExhaustedError):
        backend.complete(PROMPT)


def test_scripted_non_strict_repeats_last():
    backend = ScriptedBackend(["a", "b"], strict=False)
    backend.complete(PROMPT)
    backend.complete(PROMPT)
    assert backend.complete(PROMPT).text == "b"
    assert backend.complete(PROMPT).text == "b"


def test_scripted_empty_script_always_raises():
    backend = ScriptedBackend([], strict=False)
    with pytest.raises(ScriptExhaustedError):
        backend.complete(PROMPT)


def test_scripted_rejects_empty_prompt():
    with pytest.raises(ValueError):
        ScriptedBackend(["x"]).complete(RenderedPrompt(messages=[]))


def test_scripted_from_file(tmp_path):
    path = tmp_path / "script.json"
    path.write_text(json.dumps({"responses": ["r1", "r2"], "strict": False}))
    backend = ScriptedBackend.from_file(path)
    assert backend.script == ["r1", "r2"]
    assert backend.strict is False


# -- config / serialization --------------------------------------------------

def test_backend_config_validation():
    with pytest.raises(ConfigError):
        BackendConfig(kind="Psychic").validate()
    with pytest.raises(ConfigError):
        BackendConfig(kind="Remote", base_url="", model_name="m").validate()
    with pytest.raises(ConfigError):
        BackendConfig(temperature=-1).validate()
    BackendConfig(kind="Remote", base_url="http://x", model_name="m").validate()


def test_serialize_request_wire_shape():
    config = BackendConfig(kind="Remote", base_url="http://x", model_name="m", temperature=0.5)
    body = serialize_request(config, PROMPT)
    assert body == {
        "model": "m",
        "messages": [
            {"role": "system", "content": "role"},
            {"role": "user", "content": "What is a heap?"},
        ],
        "temperature": 0.5,
    }
    # round-trips through JSON unchanged
    assert json.loads(json.dumps(body)) == body


def test_make_backend_dispatch():
    assert isinstance(make_backend(BackendConfig(), ["x"]), ScriptedBackend)
    remote = make_backend(BackendConfig(kind="Remote", base_url="http://x", model_name="m"))
    assert isinstance(remote, RemoteBackend)


# -- remote, against a local stub server -------------------------------------

class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        plan = self.server.plan
        step = plan[min(self.server.hits, len(plan) - 1)]
        self.server.hits += 1
        length = int(self.headers.get("Content-Length", 0))
        self.server.requests.append(json.loads(self.rfile.read(length)))
        status, body = step
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body.encode())

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    servers = []

    def start(plan):
        server = HTTPServer(("127.0.0.1", 0), _StubHandler)
        server.plan = plan
        server.hits = 0
        server.requests = []
        threading.Thread(target=server.serve_forever, daemon=True).start()
        servers.append(server)
        return server, f"http://127.0.0.1:{server.server_address[1]}"

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()


def _ok_body(text="hello"):
    return json.dumps(
        {"choices": [{"message": {"role": "assistant", "content": text}}],
         "usage": {"total_tokens": 7}}
    )


def _remote(base_url, **kw):
    return RemoteBackend(
        BackendConfig(kind="Remote", base_url=base_url, model_name="m", **kw)
    )


def test_remote_success(stub_server):
    server, url = stub_server([(200, _ok_body("echo"))])
    completion = _remote(url).complete(PROMPT)
    assert completion.text == "echo"
    assert completion.usage == {"total_tokens": 7}
    sent = server.requests[0]
    assert sent["messages"][1]["content"] == "What is a heap?"


def test_remote_http_error(stub_server):
    _, url = stub_server([(400, '{"error": "bad request"}')])
    with pytest.raises(HttpStatusError) as excinfo:
        _remote(url).complete(PROMPT)
    assert excinfo.value.status == 400


def test_remote_malformed_body(stub_server):
    _, url = stub_server([(200, '{"choices": []}')])
    with pytest.raises(MalformedResponseError):
        _remote(url).complete(PROMPT)


def test_remote_non_json_body(stub_server):
    _, url = stub_server([(200, "not json")])
    with pytest.raises(MalformedResponseError):
        _remote(url).complete(PROMPT)


def test_remote_connection_refused():
    backend = _remote("http://127.0.0.1:9", timeout=1)
    with pytest.raises(TransportFailure):
        backend.complete(PROMPT)


def test_remote_sends_api_key(stub_server, monkeypatch):
    received = {}

    class _AuthHandler(_StubHandler):
        def do_POST(self):
            received["auth"] = self.headers.get("Authorization")
            super().do_POST()

    server = HTTPServer(("127.0.0.1", 0), _AuthHandler)
    server.plan = [(200, _ok_body())]
    server.hits = 0
    server.requests = []
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        monkeypatch.setenv("CODETUTOR_API_KEY", "sk-test")
        url = f"http://127.0.0.1:{server.server_address[1]}"
        _remote(url).complete(PROMPT)
        assert received["auth"] == "Bearer sk-test"
    finally:
        server.shutdown()
        server.server_close()


# -- retry policy ------------------------------------------------------------

def test_retry_recovers_after_two_503s(stub_server):
    server, url = stub_server([(503, "down"), (503, "down"), (200, _ok_body("up"))])
    slept = []
    completion = with_retry(
        _remote(url), PROMPT, max_retries=3, rng=random.Random(0), sleep=slept.append
    )
    assert completion.text == "up"
    assert completion.attempts == 3
    assert server.hits == 3
    assert len(slept) == 2
    assert all(0 <= s <= 2.0 for s in slept)


def test_retry_backoff_window_grows():
    failing = ScriptedBackend([], strict=True)

    class Always503:
        def complete(self, prompt):
            raise HttpStatusError(503, "down")

    slept = []
    with pytest.raises(HttpStatusError):
        with_retry(Always503(), PROMPT, max_retries=4, base_delay=0.5,
                   rng=random.Random(1), sleep=slept.append)
    assert len(slept) == 4
    for i, s in enumerate(slept):
        assert 0 <= s <= 0.5 * 2 ** i


def test_retry_does_not_retry_400(stub_server):
    server, url = stub_server([(400, "bad"), (200, _ok_body())])
    with pytest.raises(HttpStatusError):
        with_retry(_remote(url), PROMPT, max_retries=3, sleep=lambda s: None)
    assert server.hits == 1


def test_retry_zero_budget(stub_server):
    server, url = stub_server([(503, "down"), (200, _ok_body())])
    with pytest.raises(HttpStatusError):
        with_retry(_remote(url), PROMPT, max_retries=0, sleep=lambda s: None)
    assert server.hits == 1


def test_retry_429_is_retryable(stub_server):
    server, url = stub_server([(429, "slow down"), (200, _ok_body("ok"))])
    completion = with_retry(_remote(url), PROMPT, max_retries=2, sleep=lambda s: None)
    assert completion.text == "ok"
    assert server.hits == 2


def test_retry_parse_errors_not_retried():
    class Malformed:
        def __init__(self):
            self.hits = 0

        def complete(self, prompt):
            self.hits += 1
            raise MalformedResponseError("nonsense")

    backend = Malformed()
    with pytest.raises(MalformedResponseError):
        with_retry(backend, PROMPT, max_retries=3, sleep=lambda s: None)
    assert backend.hits == 1
