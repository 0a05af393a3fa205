"""HTTP callback endpoint receiving file-ready notifications.

The producer posts one JSON notification per PM file; the listener queues
them for the inference loop.  Duplicate notifications for a location that
is still waiting to be processed collapse into a single work item.
"""
from __future__ import annotations

import logging
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from capshare.pm.transport import FileReadyNotification

log = logging.getLogger(__name__)

DEFAULT_CALLBACK_PORT = 8302
CALLBACK_ROUTE = "/file-ready"


class NotificationListener:
    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_CALLBACK_PORT):
        self.host = host
        self.port = port
        self._queue: queue.Queue[FileReadyNotification] = queue.Queue()
        self._pending_locations: set[str] = set()
        self._lock = threading.Lock()
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    def start(self):
        listener = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                if self.path != CALLBACK_ROUTE:
                    self.send_error(404)
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length)
                try:
                    notification = FileReadyNotification.from_json(body)
                except ValueError as exc:
                    log.warning("dropping malformed notification: %s", exc)
                    self.send_error(400, explain=str(exc))
                    return
                listener._enqueue(notification)
                self.send_response(204)
                self.end_headers()

            def log_message(self, fmt, *args):
                log.debug("callback: " + fmt, *args)

        self._httpd = ThreadingHTTPServer((self.host, self.port), Handler)
        self.port = self._httpd.server_address[1]
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="pm-callback", daemon=True
        )
        self._thread.start()
        log.info("notification callback on %s", self.endpoint)

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
    def endpoint(self) -> str:
        return f"http://{self.host}:{self.port}{CALLBACK_ROUTE}"

    def _enqueue(self, notification: FileReadyNotification):
        with self._lock:
            if notification.file_location in self._pending_locations:
                log.debug("coalescing duplicate notification for %s", notification.file_location)
                return
            self._pending_locations.add(notification.file_location)
        self._queue.put(notification)

    def take(self, timeout: float | None = None) -> FileReadyNotification | None:
        """Next pending notification, or None when the wait times out."""
        try:
            notification = self._queue.get(timeout=timeout)
        except queue.Empty:
            return None
        with self._lock:
            self._pending_locations.discard(notification.file_location)
        return notification

    @property
    def pending(self) -> int:
        return self._queue.qsize()
