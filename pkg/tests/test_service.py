import json
import threading
import urllib.error
import urllib.request

import pytest

from conftest import PAPER_QUERY, TABLE2
from piqos.data import EXAMPLE_SECRETS
from piqos.gateway.cli import main
from piqos.gateway.service import QosService, ServiceConfig, serve_in_thread
from piqos.registry import read_registry_file

PAPER_BODY = {"origin": "1", "destination": "6", "command": PAPER_QUERY, "deadline": 60}
# keys that only appear on individual offerings in the registry document
FORBIDDEN_KEYS = {"values", "from", "to", "label", "updated_at"}


def bearer(domain):
    return {"Authorization": f"Bearer {EXAMPLE_SECRETS[domain]}"}


@pytest.fixture
def service(registry_file):
    return QosService.from_config(ServiceConfig(str(registry_file), domain_credentials=EXAMPLE_SECRETS))


@pytest.fixture
def http(service):
    server, base = serve_in_thread(service)
    yield base
    server.shutdown()
    server.server_close()


def call(base, method, path, body=None, headers=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(base + path, data=data, method=method, headers=headers or {})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def walk_keys(obj):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield k
            yield from walk_keys(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from walk_keys(v)


def test_query_matches_table(http):
    status, body = call(http, "POST", "/query", PAPER_BODY)
    assert status == 200 and body["registry_version"] == 0
    rows = body["candidates"]
    assert [(r["score"], r["path"][1:], r["x"][:2], r["allowed"]) for r in rows] == \
        [(sc, list(p), [c, e], ok) for _, sc, p, c, e, _, ok in TABLE2]


def test_query_payload_has_no_offering_values(http):
    for extra in ({}, {"obfuscate": True}):
        _, body = call(http, "POST", "/query", {**PAPER_BODY, **extra})
        assert not FORBIDDEN_KEYS & set(walk_keys(body))


def test_read_back_is_owner_only(http):
    status, body = call(http, "GET", "/offerings?domain=2", headers=bearer("2"))
    assert status == 200
    assert body["offerings"] and {o["from"] for o in body["offerings"]} == {"2"}
    status, _ = call(http, "GET", "/offerings?domain=2", headers=bearer("3"))
    assert status == 401
    assert call(http, "GET", "/offerings?domain=2")[0] == 401


def test_register_dominated_is_409(http, registry_file):
    before = registry_file.read_bytes()
    status, body = call(http, "POST", "/offerings",
                        {"from": "3", "to": "5", "values": [80, 95, {"mean": 20, "var": 8}]}, bearer("3"))
    assert status == 409 and body["status"] == "pruned-dominated" and body["registry_version"] == 0
    assert registry_file.read_bytes() == before
    assert call(http, "GET", "/health")[1]["registry_version"] == 0


def test_register_query_remove_cycle(http, registry_file):
    status, body = call(http, "POST", "/offerings",
                        {"id": "4-6-fast", "from": "4", "to": "6", "label": "rail",
                         "values": [60, 70, {"mean": 21, "var": 3}]}, bearer("4"))
    assert status == 201 and body == {"status": "accepted", "id": "4-6-fast", "registry_version": 1,
                                      "replaced": []}
    assert read_registry_file(registry_file).version == 1
    _, q = call(http, "POST", "/query", PAPER_BODY)
    assert q["registry_version"] == 1 and len(q["candidates"]) == 20
    status, body = call(http, "DELETE", "/offerings/4-6-fast", headers=bearer("3"))
    assert status == 401
    status, body = call(http, "DELETE", "/offerings/4-6-fast", headers=bearer("4"))
    assert status == 200 and body["registry_version"] == 2
    assert call(http, "DELETE", "/offerings/4-6-fast", headers=bearer("4"))[0] == 404
    _, q = call(http, "POST", "/query", PAPER_BODY)
    assert q["registry_version"] == 2 and len(q["candidates"]) == 16


@pytest.mark.parametrize("body, status", [
    ({"origin": "1"}, 400),
    ({**PAPER_BODY, "command": "(w=)"}, 400),
    ({**PAPER_BODY, "deadline": None}, 400),
    ({**PAPER_BODY, "max_hops": 0}, 400),
    ({**PAPER_BODY, "destination": "99"}, 400),
])
def test_query_errors(service, body, status):
    code, payload = service.handle("POST", "/query", {}, json.dumps(body).encode())
    assert code == status and "error" in payload and "registry_version" in payload


def test_bad_json_and_routes(service):
    assert service.handle("POST", "/query", {}, b"{nope")[0] == 400
    assert service.handle("GET", "/nowhere")[0] == 404
    assert service.handle("POST", "/offerings", bearer("2"),
                          json.dumps({"from": "2", "to": "6", "values": [1, 1, {"mean": 1, "var": 1}]}).encode()
                          )[0] == 404


def test_graph_and_health(http):
    status, body = call(http, "GET", "/graph")
    assert status == 200 and len(body["edges"]) == 8 and body["domains"] == ["1", "2", "3", "4", "5", "6"]
    assert not FORBIDDEN_KEYS & set(walk_keys(body))
    status, body = call(http, "GET", "/health")
    assert status == 200 and body["status"] == "ok" and body["registry_version"] == 0


def test_cli_and_service_agree(http, registry_file, capsys):
    _, body = call(http, "POST", "/query", PAPER_BODY)
    main(["--registry", str(registry_file), "--format", "json", "query", "--origin", "1", "--dest", "6",
          "--command", PAPER_QUERY, "--deadline", "60", "--all"])
    cli = json.loads(capsys.readouterr().out)
    assert cli == body


def test_concurrent_queries_and_writes(service):
    errors = []

    def reader():
        for _ in range(20):
            code, body = service.handle("POST", "/query", {}, json.dumps(PAPER_BODY).encode())
            if code != 200 or len(body["candidates"]) not in (16, 18, 20):
                errors.append(body)

    def writer():
        for i in range(5):
            service.handle("POST", "/offerings", bearer("5"),
                           json.dumps({"id": f"w{i}", "from": "5", "to": "6",
                                       "values": [70 - i, 39 - i, {"mean": 17, "var": 4}]}).encode())

    threads = [threading.Thread(target=reader) for _ in range(4)] + [threading.Thread(target=writer)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert service.registry.version == 5


def test_serve_subcommand(registry_file, credentials_file, tmp_path):
    import socket
    import subprocess
    import sys
    import time

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    config = tmp_path / "service.json"
    config.write_text(json.dumps({"registry_path": str(registry_file), "listen_address": f"127.0.0.1:{port}",
                                  "domain_credentials": EXAMPLE_SECRETS}))
    proc = subprocess.Popen([sys.executable, "-m", "piqos", "serve", "--config", str(config)],
                            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        base = f"http://127.0.0.1:{port}"
        for _ in range(100):
            try:
                status, body = call(base, "GET", "/health")
                break
            except urllib.error.URLError:
                time.sleep(0.05)
        else:
            pytest.fail("service did not start")
        assert status == 200 and body["registry_version"] == 0
        status, body = call(base, "POST", "/query", PAPER_BODY)
        assert status == 200 and len(body["candidates"]) == 16
    finally:
        proc.terminate()
        proc.wait(timeout=5)
