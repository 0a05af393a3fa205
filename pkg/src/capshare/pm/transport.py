"""PM file distribution: HTTP file server, file-ready notification, retrieval.

The producer stores each finished PM file on an embedded HTTP server and
posts a small JSON notification (location, size, timestamp) to the
consumer's callback endpoint; the consumer then fetches the file from the
given location.  Files are immutable once announced.  Retrieval is plain
HTTP here, isolated behind this module so an SFTP-style backend could be
swapped in.
"""
from __future__ import annotations

import json
import logging
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

log = logging.getLogger(__name__)

DEFAULT_FILE_PORT = 8301
FILE_ROUTE = "/files/"


class MissingFileError(Exception):
    """The requested PM file does not exist on the server."""


class IntegrityError(Exception):
    """Fetched content does not match the announced file size."""


@dataclass(frozen=True)
class FileReadyNotification:
    """Announcement that a PM file is available for retrieval.

    ``ready_time`` stays a plain ISO-8601 string; the authoritative
    collection timestamp lives inside the PM file itself.
    """

    file_location: str
    file_size: int
    ready_time: str

    def to_json(self) -> bytes:
        return json.dumps(
            {
                "file_location": self.file_location,
                "file_size": self.file_size,
                "ready_time": self.ready_time,
            }
        ).encode()

    @classmethod
    def from_json(cls, data: bytes) -> "FileReadyNotification":
        try:
            payload = json.loads(data)
            note = cls(
                file_location=str(payload["file_location"]),
                file_size=int(payload["file_size"]),
                ready_time=str(payload["ready_time"]),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"bad file-ready notification: {exc}") from exc
        if note.file_size < 0:
            raise ValueError(f"bad file-ready notification: negative size {note.file_size}")
        if not note.file_location:
            raise ValueError("bad file-ready notification: empty file_location")
        return note


class PmFileServer:
    """Serves immutable PM files over HTTP GET."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_FILE_PORT):
        self.host = host
        self.port = port
        self._files: dict[str, bytes] = {}
        self._lock = threading.Lock()
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    def start(self):
        files = self._files
        lock = self._lock

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                if not self.path.startswith(FILE_ROUTE):
                    self.send_error(404)
                    return
                name = self.path[len(FILE_ROUTE):]
                with lock:
                    data = files.get(name)
                if data is None:
                    self.send_error(404)
                    return
                self.send_response(200)
                self.send_header("Content-Type", "application/xml; charset=utf-8")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, fmt, *args):
                log.debug("pm-file-server: " + fmt, *args)

        self._httpd = ThreadingHTTPServer((self.host, self.port), Handler)
        self.port = self._httpd.server_address[1]
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="pm-file-server", daemon=True
        )
        self._thread.start()
        log.info("pm file server on %s:%d", self.host, self.port)

    def stop(self):
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}{FILE_ROUTE}"

    def publish(self, name: str, data: bytes) -> FileReadyNotification:
        """Store a file and return the notification to send for it.

        Re-publishing identical content is idempotent; publishing different
        content under an already announced name is an error.
        """
        with self._lock:
            existing = self._files.get(name)
            if existing is not None and existing != data:
                raise ValueError(f"file {name!r} already published with different content")
            self._files[name] = data
        return FileReadyNotification(
            file_location=self.base_url + name,
            file_size=len(data),
            ready_time=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        )


def notify_file_ready(
    client_endpoint: str, notification: FileReadyNotification, timeout: float = 5.0
) -> bool:
    """POST the notification to the consumer callback; True on a 2xx response."""
    request = urllib.request.Request(
        client_endpoint,
        data=notification.to_json(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            ok = 200 <= response.status < 300
    except (urllib.error.URLError, OSError) as exc:
        log.warning("file-ready notification to %s failed: %s", client_endpoint, exc)
        return False
    if not ok:
        log.warning("file-ready notification rejected with status %d", response.status)
    return ok


def fetch_pm_file(location: str, expected_size: int | None = None, timeout: float = 10.0) -> bytes:
    """Retrieve a PM file; verifies the announced size when given."""
    try:
        with urllib.request.urlopen(location, timeout=timeout) as response:
            data = response.read()
    except urllib.error.HTTPError as exc:
        if exc.code == 404:
            raise MissingFileError(f"no PM file at {location}") from exc
        raise
    if expected_size is not None and len(data) != expected_size:
        raise IntegrityError(
            f"fetched {len(data)} bytes from {location}, notification announced {expected_size}"
        )
    return data
