"""Single-node HTTP service exposing the registry and the QoS processor.

Endpoints (JSON bodies, registry document value conventions):

    POST   /offerings            register (credentialed)
    DELETE /offerings/{id}       remove (credentialed)
    GET    /offerings?domain=D   owner's read-back (credentialed)
    POST   /query                rank; no raw offering values in the response
    GET    /graph                domains and edges
    GET    /health               service and registry version

Credentials travel as ``Authorization: Bearer <domain secret>``.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, unquote, urlsplit

from piqos import __version__
from piqos.errors import (
    CommandError,
    DuplicateOffering,
    GraphError,
    MissingBinding,
    OfferingNotFound,
    QosError,
    SchemaViolation,
    Unauthorized,
    UnknownSegment,
)
from piqos.gateway.render import offerings_to_dict, result_to_dict
from piqos.model import SlaOffering
from piqos.processor import DEFAULT_MAX_HOPS, QosCache, Query
from piqos.registry import PRUNED_DOMINATED, Registry, file_backed_registry, value_from_json

logger = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    registry_path: str
    listen_address: str = "127.0.0.1:8080"
    default_max_hops: int = DEFAULT_MAX_HOPS
    obfuscate_default: bool = False
    domain_credentials: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.default_max_hops < 1:
            raise ValueError("default_max_hops must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> ServiceConfig:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**raw)

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen_address.rpartition(":")
        return host or "127.0.0.1", int(port)


class HttpError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


_STATUS = [
    (Unauthorized, 401),
    (OfferingNotFound, 404),
    (UnknownSegment, 404),
    (DuplicateOffering, 409),
    (CommandError, 400),
    (MissingBinding, 400),
    (SchemaViolation, 400),
    (GraphError, 400),
    (QosError, 400),
]


def _bool(v: Any, name: str) -> bool:
    if not isinstance(v, bool):
        raise HttpError(400, f"{name!r} must be a boolean")
    return v


class QosService:
    """Transport-independent request handling; ``handle`` returns (status, payload)."""

    def __init__(self, registry: Registry, max_hops: int = DEFAULT_MAX_HOPS, obfuscate: bool = False,
                 cache: QosCache | None = None):
        self.registry = registry
        self.max_hops = max_hops
        self.obfuscate = obfuscate
        self.cache = cache if cache is not None else QosCache()

    @classmethod
    def from_config(cls, config: ServiceConfig) -> QosService:
        reg = file_backed_registry(config.registry_path, config.domain_credentials)
        return cls(reg, config.default_max_hops, config.obfuscate_default)

    def handle(self, method: str, target: str, headers: dict[str, str] | None = None,
               body: bytes | None = None) -> tuple[int, dict]:
        headers = {k.lower(): v for k, v in (headers or {}).items()}
        url = urlsplit(target)
        parts = [unquote(p) for p in url.path.strip("/").split("/") if p]
        params = {k: v[-1] for k, v in parse_qs(url.query).items()}
        try:
            return self._route(method.upper(), parts, params, headers, body)
        except HttpError as exc:
            return exc.status, self._error(exc)
        except QosError as exc:
            status = next(code for kind, code in _STATUS if isinstance(exc, kind))
            return status, self._error(exc)

    def _error(self, exc: Exception) -> dict:
        return {"error": str(exc), "registry_version": self.registry.version}

    @staticmethod
    def _secret(headers: dict[str, str]) -> str | None:
        auth = headers.get("authorization", "")
        if auth.lower().startswith("bearer "):
            return auth[7:].strip()
        return None

    @staticmethod
    def _json(body: bytes | None) -> dict:
        try:
            data = json.loads(body or b"")
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise HttpError(400, f"malformed JSON body: {exc}") from exc
        if not isinstance(data, dict):
            raise HttpError(400, "JSON body must be an object")
        return data

    def _route(self, method, parts, params, headers, body) -> tuple[int, dict]:
        if parts == ["health"] and method == "GET":
            return 200, {"status": "ok", "version": __version__, "registry_version": self.registry.version}
        if parts == ["graph"] and method == "GET":
            snap = self.registry.snapshot()
            return 200, {"registry_version": snap.version, "domains": sorted(snap.graph.domains),
                         "edges": [list(e) for e in sorted(snap.graph.edges)]}
        if parts == ["query"] and method == "POST":
            return self.query(self._json(body))
        if parts == ["offerings"] and method == "POST":
            return self.register(self._json(body), self._secret(headers))
        if parts == ["offerings"] and method == "GET":
            domain = params.get("domain")
            if not domain:
                raise HttpError(400, "query parameter 'domain' is required")
            snap_version = self.registry.version
            own = self.registry.read_back(domain, self._secret(headers))
            return 200, {"domain": domain, **offerings_to_dict(own, snap_version)}
        if len(parts) == 2 and parts[0] == "offerings" and method == "DELETE":
            out = self.registry.remove_offering(parts[1], self._secret(headers))
            self.cache.invalidate(out.segment)
            return 200, {"status": "removed", "id": out.offering_id, "registry_version": out.version}
        raise HttpError(404, f"no route for {method} /{'/'.join(parts)}")

    def query(self, data: dict) -> tuple[int, dict]:
        for k in ("origin", "destination", "command"):
            if not isinstance(data.get(k), str):
                raise HttpError(400, f"{k!r} is required and must be a string")
        deadline = data.get("deadline")
        if deadline is not None and (isinstance(deadline, bool) or not isinstance(deadline, (int, float))):
            raise HttpError(400, "'deadline' must be a number")
        max_hops = data.get("max_hops", self.max_hops)
        if isinstance(max_hops, bool) or not isinstance(max_hops, int) or max_hops < 1:
            raise HttpError(400, "'max_hops' must be a positive integer")
        q = Query(data["origin"], data["destination"], data["command"],
                  float(deadline) if deadline is not None else None, max_hops,
                  _bool(data.get("include_disallowed", True), "include_disallowed"),
                  _bool(data.get("obfuscate", self.obfuscate), "obfuscate"))
        result = self.cache.cached_rank(q, self.registry)
        return 200, result_to_dict(result, self.registry.snapshot().schema)

    def register(self, data: dict, secret: str | None) -> tuple[int, dict]:
        snap = self.registry.snapshot()
        try:
            frm, to, raw_values = data["from"], data["to"], data["values"]
        except KeyError as exc:
            raise HttpError(400, f"missing field {exc.args[0]!r}") from None
        if not (isinstance(frm, str) and isinstance(to, str)):
            raise HttpError(400, "'from' and 'to' must be strings")
        if not isinstance(raw_values, list) or len(raw_values) != len(snap.schema):
            raise HttpError(400, f"'values' must be a list of {len(snap.schema)} entries")
        try:
            values = tuple(value_from_json(v, d) for v, d in zip(raw_values, snap.schema))
        except ValueError as exc:
            raise HttpError(400, str(exc)) from None
        oid = data.get("id") or self.registry.new_offering_id(frm, to)
        offering = SlaOffering(str(oid), frm, to, values, label=str(data.get("label", "")))
        out = self.registry.register_offering(offering, secret)
        payload = {"status": out.status, "id": out.offering_id, "registry_version": out.version,
                   "replaced": list(out.replaced)}
        if out.status == PRUNED_DOMINATED:
            payload["dominated_by"] = list(out.dominated_by)
            return 409, payload
        self.cache.invalidate(offering.segment)
        return 201, payload


def make_handler(service: QosService) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        server_version = f"piqos/{__version__}"

        def _dispatch(self) -> None:
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else None
            status, payload = service.handle(self.command, self.path, dict(self.headers.items()), body)
            data = json.dumps(payload, sort_keys=True).encode("utf-8")
            self.send_response(status, HTTPStatus(status).phrase)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        do_GET = do_POST = do_DELETE = _dispatch

        def log_message(self, fmt: str, *args) -> None:
            logger.info("%s - %s", self.address_string(), fmt % args)

    return Handler


def make_server(service: QosService, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), make_handler(service))
    server.daemon_threads = True
    return server


def serve(config: ServiceConfig) -> None:
    service = QosService.from_config(config)
    server = make_server(service, *config.host_port)
    host, port = server.server_address[:2]
    logger.info("serving on http://%s:%s (registry version %d)", host, port, service.registry.version)
    try:
        server.serve_forever()
    finally:
        server.server_close()


def serve_in_thread(service: QosService, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns (server, base_url)."""
    server = make_server(service, host, port)
    t = threading.Thread(target=server.serve_forever, daemon=True)
    t.start()
    h, p = server.server_address[:2]
    return server, f"http://{h}:{p}"
