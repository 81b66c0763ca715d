"""HTTP surface of the provider: a thin JSON-over-TCP wrapper.

Endpoints (bodies are JSON unless noted; ids, keys, and signatures are
hex, blobs are base64):

    PUT    /content                   {"blob_b64", "submitter_pubkey_hex"}
                                      -> 200 manifest JSON
    GET    /content/{id}/manifest     -> 200 manifest JSON
    GET    /content/{id}/chunk/{n}    -> 200 application/octet-stream
    DELETE /content/{id}              {"requester_pubkey_hex", "signature_hex"}
                                      -> 200 {"deleted": true}

Errors come back as {"error": <code>, "detail": <text>} with a status
that distinguishes them: 404 not_found, 403 unauthorized, 400
bad_request / empty_blob, 416 index_out_of_range, 507 storage_full.
``HttpProviderClient`` maps the codes back to the same exceptions the
in-process store raises, so callers cannot tell the transports apart.
"""

from __future__ import annotations

import base64
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import requests

from .errors import (
    EmptyBlob,
    IndexOutOfRange,
    NotFound,
    PaiDataError,
    ProviderError,
    ProviderUnavailable,
    StorageFull,
    Unauthorized,
)
from .provider import ContentManifest, ProviderStore

_ERROR_STATUS = {
    "not_found": 404,
    "unauthorized": 403,
    "empty_blob": 400,
    "storage_full": 507,
    "index_out_of_range": 416,
    "bad_request": 400,
}

_ERROR_CLASS = {
    "not_found": NotFound,
    "unauthorized": Unauthorized,
    "empty_blob": EmptyBlob,
    "storage_full": StorageFull,
    "index_out_of_range": IndexOutOfRange,
}

_EXCEPTION_CODE = {
    NotFound: "not_found",
    Unauthorized: "unauthorized",
    EmptyBlob: "empty_blob",
    StorageFull: "storage_full",
    IndexOutOfRange: "index_out_of_range",
}

_MANIFEST_RE = re.compile(r"^/content/([0-9a-fA-F]{64})/manifest$")
_CHUNK_RE = re.compile(r"^/content/([0-9a-fA-F]{64})/chunk/(\d+)$")
_CONTENT_RE = re.compile(r"^/content/([0-9a-fA-F]{64})$")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "ProviderHTTPServer"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    # -- helpers --

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        try:
            doc = json.loads(raw or b"{}")
        except json.JSONDecodeError as exc:
            raise _BadRequest(f"body is not JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise _BadRequest("body must be a JSON object")
        return doc

    def _send_json(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_doc(self, code: str, detail: str) -> None:
        self._send_json(_ERROR_STATUS[code], {"error": code, "detail": detail})

    def _dispatch(self, fn) -> None:
        try:
            fn()
        except _BadRequest as exc:
            self._send_error_doc("bad_request", str(exc))
        except PaiDataError as exc:
            code = _EXCEPTION_CODE.get(type(exc), "bad_request")
            self._send_error_doc(code, str(exc))
        except Exception as exc:  # never let the socket die silently
            self._send_json(500, {"error": "internal", "detail": str(exc)})

    # -- verbs --

    def do_PUT(self):
        def handle():
            if self.path.rstrip("/") != "/content":
                raise _BadRequest(f"unknown path {self.path}")
            doc = self._read_json()
            try:
                blob = base64.b64decode(doc["blob_b64"], validate=True)
                pubkey = bytes.fromhex(doc["submitter_pubkey_hex"])
            except (KeyError, ValueError) as exc:
                raise _BadRequest(f"bad upload body: {exc}") from exc
            manifest = self.server.store.upload(blob, pubkey)
            self._send_json(200, manifest.to_json())

        self._dispatch(handle)

    def do_GET(self):
        def handle():
            m = _MANIFEST_RE.match(self.path)
            if m:
                manifest = self.server.store.get_manifest(bytes.fromhex(m.group(1)))
                self._send_json(200, manifest.to_json())
                return
            m = _CHUNK_RE.match(self.path)
            if m:
                chunk = self.server.store.get_chunk(
                    bytes.fromhex(m.group(1)), int(m.group(2))
                )
                self.send_response(200)
                self.send_header("Content-Type", "application/octet-stream")
                self.send_header("Content-Length", str(len(chunk)))
                self.end_headers()
                self.wfile.write(chunk)
                return
            raise _BadRequest(f"unknown path {self.path}")

        self._dispatch(handle)

    def do_DELETE(self):
        def handle():
            m = _CONTENT_RE.match(self.path)
            if not m:
                raise _BadRequest(f"unknown path {self.path}")
            doc = self._read_json()
            try:
                pubkey = bytes.fromhex(doc["requester_pubkey_hex"])
                signature = bytes.fromhex(doc["signature_hex"])
            except (KeyError, ValueError) as exc:
                raise _BadRequest(f"bad delete body: {exc}") from exc
            self.server.store.delete_content(bytes.fromhex(m.group(1)), pubkey, signature)
            self._send_json(200, {"deleted": True})

        self._dispatch(handle)


class _BadRequest(Exception):
    pass


class ProviderHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, store: ProviderStore, host: str = "127.0.0.1", port: int = 0):
        self.store = store
        super().__init__((host, port), _Handler)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def start_in_thread(store: ProviderStore, host: str = "127.0.0.1",
                    port: int = 0) -> tuple[ProviderHTTPServer, threading.Thread]:
    """Serve in a daemon thread; returns (server, thread). Caller shuts down."""
    server = ProviderHTTPServer(store, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread


class HttpProviderClient:
    """Talks to a remote provider; raises the same errors as ProviderStore."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()

    @property
    def location(self) -> str:
        return self.base_url

    def _raise_for(self, response: requests.Response) -> None:
        if response.ok:
            return
        try:
            doc = response.json()
        except ValueError:
            doc = {}
        code = doc.get("error", "bad_request")
        detail = doc.get("detail", response.reason)
        exc_class = _ERROR_CLASS.get(code)
        if exc_class is None:
            raise ProviderError(f"{code}: {detail}")
        raise exc_class(detail)

    def _request(self, method: str, path: str, **kwargs) -> requests.Response:
        try:
            response = self._session.request(
                method, self.base_url + path, timeout=self.timeout, **kwargs
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"{self.base_url}: {exc}") from exc
        self._raise_for(response)
        return response

    def upload(self, blob: bytes, submitter_pubkey: bytes) -> ContentManifest:
        response = self._request(
            "PUT",
            "/content",
            json={
                "blob_b64": base64.b64encode(blob).decode(),
                "submitter_pubkey_hex": submitter_pubkey.hex(),
            },
        )
        return ContentManifest.from_json(response.json())

    def get_manifest(self, content_id: bytes) -> ContentManifest:
        response = self._request("GET", f"/content/{content_id.hex()}/manifest")
        return ContentManifest.from_json(response.json())

    def get_chunk(self, content_id: bytes, index: int) -> bytes:
        response = self._request("GET", f"/content/{content_id.hex()}/chunk/{index}")
        return response.content

    def delete_content(self, content_id: bytes, requester_pubkey: bytes,
                       signature: bytes) -> bool:
        self._request(
            "DELETE",
            f"/content/{content_id.hex()}",
            json={
                "requester_pubkey_hex": requester_pubkey.hex(),
                "signature_hex": signature.hex(),
            },
        )
        return True
