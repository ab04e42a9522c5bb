"""JSON-over-HTTP service for one workspace.

The service is the dashboard's only doorway into the engine; it exposes
the same operations as the command line and nothing more.  Every
response carries ``X-Workspace-Version``, and every POST must present
that version back in ``If-Match``: a stale client gets 409 and reloads
instead of acting on a workspace it has not seen.

Reads never lock (the store's journal overlay keeps them consistent);
mutations serialize through the workspace writer lock.  Each request is
handled independently, so the server holds no session state.
"""

from __future__ import annotations

import json
import mimetypes
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any

from .engine import Engine, EngineError, reports_document
from .model import RiskValue, SeverityClass
from .rates import as_fraction, format_rate, fraction_str
from .store import (
    HAZARD_LOG_PATH,
    SPEC_PATH,
    StoreError,
    ValidationFailedError,
    Workspace,
    WorkspaceLockedError,
)
from .treatment import ResidualModel, TreatmentError, predicted_residual

_FALLBACK_PAGE = """<!doctype html>
<title>riskcore</title>
<h1>riskcore API</h1>
<p>No dashboard assets are configured. The JSON API is live:</p>
<ul>
<li>GET /api/hazard-log</li>
<li>GET /api/reports</li>
<li>GET /api/spec</li>
<li>GET /api/verdicts</li>
<li>POST /api/measures (If-Match required)</li>
<li>POST /api/iterate (If-Match required)</li>
<li>POST /api/whatif (If-Match required)</li>
</ul>
"""


class ApiError(Exception):
    def __init__(self, status: int, body: dict[str, Any]):
        super().__init__(body.get("error", ""))
        self.status = status
        self.body = body


def _bad_request(message: str) -> ApiError:
    return ApiError(400, {"error": message})


def _unprocessable(body: dict[str, Any]) -> ApiError:
    return ApiError(422, body)


class _Handler(BaseHTTPRequestHandler):
    # set by make_server on the generated subclass
    workspace_root: Path
    static_dir: Path | None
    quiet: bool

    server_version = "riskcore"
    protocol_version = "HTTP/1.1"

    # ---- plumbing ----

    def log_message(self, format, *args):  # noqa: A002 (stdlib signature)
        if not self.quiet:
            super().log_message(format, *args)

    def _workspace(self) -> Workspace:
        return Workspace(self.workspace_root)

    def _engine(self) -> Engine:
        return Engine(self._workspace())

    def _send_json(self, status: int, body: Any, version: int | None = None) -> None:
        payload = json.dumps(body, indent=2, sort_keys=True).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(payload)))
        if version is None:
            try:
                version = self._workspace().version()
            except StoreError:
                version = 0
        self.send_header("X-Workspace-Version", str(version))
        self.end_headers()
        self.wfile.write(payload)

    def _read_body(self) -> dict[str, Any]:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as err:
            raise _bad_request(f"body is not valid JSON: {err}") from err
        if not isinstance(body, dict):
            raise _bad_request("body must be a JSON object")
        return body

    def _check_if_match(self) -> None:
        presented = self.headers.get("If-Match")
        current = str(self._workspace().version())
        if presented is None:
            raise ApiError(
                409,
                {
                    "error": "If-Match header required on mutating requests",
                    "workspace_version": current,
                },
            )
        if presented.strip('"') != current:
            raise ApiError(
                409,
                {
                    "error": (
                        f"workspace is at version {current}, "
                        f"request expected {presented}"
                    ),
                    "workspace_version": current,
                },
            )

    # ---- routing ----

    def do_GET(self):  # noqa: N802 (stdlib casing)
        try:
            path = self.path.split("?", 1)[0]
            if path == "/api/hazard-log":
                self._send_json(200, self._hazard_log())
            elif path == "/api/reports":
                self._send_json(200, reports_document(self._workspace()))
            elif path == "/api/spec":
                self._send_json(200, self._spec())
            elif path == "/api/verdicts":
                self._send_json(200, self._verdicts())
            elif path.startswith("/api/"):
                self._send_json(404, {"error": f"unknown endpoint {path}"})
            else:
                self._send_static(path)
        except ApiError as err:
            self._send_json(err.status, err.body)
        except StoreError as err:
            self._send_json(422, {"error": str(err)})

    def do_POST(self):  # noqa: N802 (stdlib casing)
        try:
            path = self.path.split("?", 1)[0]
            if path not in ("/api/measures", "/api/iterate", "/api/whatif"):
                raise ApiError(404, {"error": f"unknown endpoint {path}"})
            body = self._read_body()
            self._check_if_match()
            if path == "/api/measures":
                response = self._post_measures(body)
            elif path == "/api/iterate":
                response = self._post_iterate(body)
            else:
                response = self._post_whatif(body)
            self._send_json(200, response)
        except ApiError as err:
            self._send_json(err.status, err.body)
        except WorkspaceLockedError as err:
            self._send_json(409, {"error": str(err)})
        except ValidationFailedError as err:
            self._send_json(
                422,
                {"error": str(err), "violations": [str(v) for v in err.report.violations]},
            )
        except EngineError as err:
            self._send_json(422, {"error": str(err)})
        except StoreError as err:
            self._send_json(422, {"error": str(err)})

    def do_PUT(self):  # noqa: N802
        self._method_not_allowed()

    def do_DELETE(self):  # noqa: N802
        self._method_not_allowed()

    def _method_not_allowed(self):
        self._send_json(405, {"error": "method not allowed"})

    # ---- GET endpoints ----

    def _hazard_log(self) -> list[dict[str, Any]]:
        log = self._workspace().read_document(HAZARD_LOG_PATH) or {}
        events_by_id = {event["id"]: event for event in log.get("events", [])}
        entries = []
        for entry in log.get("entries", []):
            entries.append(
                {
                    **entry,
                    "events": [
                        events_by_id[eid]
                        for eid in entry.get("hazardous_event_ids", [])
                        if eid in events_by_id
                    ],
                }
            )
        return entries

    def _spec(self) -> dict[str, Any]:
        workspace = self._workspace()
        text = workspace.read_text(SPEC_PATH) or ""
        revision = None
        try:
            model = workspace.model()
            if model.spec is not None:
                revision = model.spec.version
        except StoreError:
            pass
        return {
            "workspace_version": workspace.version(),
            "text": text,
            "revision": revision,
        }

    def _verdicts(self) -> dict[str, Any]:
        engine = self._engine()
        state = engine.state()
        report = (
            engine.workspace.read_document(state.last_report)
            if state.last_report
            else None
        )
        return {
            "workspace_version": engine.workspace.version(),
            "phase": state.phase,
            "iteration": state.iteration,
            "converged": state.phase == "done",
            "report_path": state.last_report,
            "summary": report["summary"] if report else "no evaluation yet",
            "verdicts": report.get("verdicts", []) if report else [],
            "aggregates": report.get("aggregates", []) if report else [],
        }

    # ---- POST endpoints ----

    def _post_measures(self, body: dict[str, Any]) -> dict[str, Any]:
        apply_now = bool(body.pop("apply", False))
        engine = self._engine()
        submitted = engine.submit_measure(body)
        if submitted.status == "blocked":
            raise _unprocessable({"error": submitted.summary, "result": submitted.to_doc()})
        applied = None
        if apply_now:
            applied = engine.treat()
            if applied.status == "blocked":
                raise _unprocessable({"error": applied.summary, "result": applied.to_doc()})
        return {
            "submitted": submitted.to_doc(),
            "applied": applied.to_doc() if applied else None,
            "workspace_version": engine.workspace.version(),
        }

    def _post_iterate(self, body: dict[str, Any]) -> dict[str, Any]:
        engine = self._engine()
        if body.get("run"):
            max_iterations = body.get("max_iterations", 8)
            if not isinstance(max_iterations, int) or max_iterations < 1:
                raise _bad_request("max_iterations must be a positive integer")
            result = engine.run(max_iterations=max_iterations)
        else:
            result = engine.iterate()
        if result.status == "blocked":
            raise _unprocessable({"error": result.summary, "result": result.to_doc()})
        return {
            "result": result.to_doc(),
            "workspace_version": engine.workspace.version(),
        }

    def _post_whatif(self, body: dict[str, Any]) -> dict[str, Any]:
        if "kind" in body:
            return self._engine().whatif(body)
        if "initial" in body:
            return self._closed_form_residual(body)
        raise _bad_request(
            "whatif needs either a measure document (kind, payload, ...) "
            "or residual parameters (initial, effectiveness, integrity, ...)"
        )

    def _closed_form_residual(self, body: dict[str, Any]) -> dict[str, Any]:
        try:
            model = ResidualModel(
                initial=RiskValue(
                    as_fraction(body["initial"]),
                    SeverityClass(body.get("severity_class", "S3")),
                ),
                minimum_achievable_rate=as_fraction(body.get("min", 0)),
                reduction_effectiveness=as_fraction(body.get("effectiveness", 1)),
                integrity=as_fraction(body.get("integrity", 1)),
                corrupt_risk_rate=as_fraction(body.get("corrupt", 0)),
            )
        except TreatmentError as err:
            raise _unprocessable({"error": str(err)}) from err
        except (ValueError, KeyError, TypeError) as err:
            raise _bad_request(f"bad residual parameters: {err}") from err
        try:
            residual = predicted_residual(model)
        except TreatmentError as err:
            raise _unprocessable({"error": str(err)}) from err
        tolerable = body.get("tolerable")
        response = {
            "residual": fraction_str(residual.rate),
            "residual_display": format_rate(residual.rate),
            "severity_class": residual.severity_class.value,
        }
        if tolerable is not None:
            tolerable_rate = as_fraction(tolerable)
            response["tolerable_display"] = format_rate(tolerable_rate)
            response["would_accept"] = residual.rate < tolerable_rate
        return response

    # ---- static assets ----

    def _send_static(self, path: str) -> None:
        if self.static_dir is None:
            if path in ("/", "/index.html"):
                payload = _FALLBACK_PAGE.encode()
                self.send_response(200)
                self.send_header("Content-Type", "text/html; charset=utf-8")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)
                return
            self._send_json(404, {"error": f"no such path {path}"})
            return

        relative = path.lstrip("/") or "index.html"
        target = (self.static_dir / relative).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": f"no such path {path}"})
            return
        content_type = (
            mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        )
        payload = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


def make_server(
    workspace_root: str | Path,
    host: str = "127.0.0.1",
    port: int = 0,
    *,
    static_dir: str | Path | None = None,
    quiet: bool = True,
) -> ThreadingHTTPServer:
    """Build (but do not start) the service; port 0 picks a free port."""
    handler = type(
        "WorkspaceHandler",
        (_Handler,),
        {
            "workspace_root": Path(workspace_root),
            "static_dir": Path(static_dir) if static_dir else None,
            "quiet": quiet,
        },
    )
    return ThreadingHTTPServer((host, port), handler)
