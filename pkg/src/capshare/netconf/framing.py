"""NETCONF message framing (RFC 6242).

Two mechanisms are supported: the end-of-message delimiter ``]]>]]>`` used
by the base:1.0 protocol and for the initial hello exchange, and the
chunked framing of base:1.1 where each message is carried as one or more
``\\n#<len>\\n<data>`` chunks terminated by ``\\n##\\n``.
"""
from __future__ import annotations

EOM_DELIMITER = b"]]>]]>"
MAX_CHUNK_SIZE = 4294967295  # largest chunk length RFC 6242 allows
_HEADER_LIMIT = 13  # b"\n#" + 10 digits + b"\n"


class FramingError(Exception):
    """Malformed frame on the wire; the session must be torn down."""


def encode_chunked(message: bytes, chunk_size: int = MAX_CHUNK_SIZE) -> bytes:
    """Frame one message as base:1.1 chunks.

    The whole message goes into a single chunk unless it exceeds
    ``chunk_size``, in which case it is split.
    """
    if not message:
        raise ValueError("cannot frame an empty message")
    if not 1 <= chunk_size <= MAX_CHUNK_SIZE:
        raise ValueError(f"chunk size out of range: {chunk_size}")
    parts = []
    for start in range(0, len(message), chunk_size):
        data = message[start : start + chunk_size]
        parts.append(b"\n#%d\n" % len(data))
        parts.append(data)
    parts.append(b"\n##\n")
    return b"".join(parts)


def encode_eom(message: bytes) -> bytes:
    """Frame one message with the base:1.0 end-of-message delimiter."""
    if not message:
        raise ValueError("cannot frame an empty message")
    return message + EOM_DELIMITER


class ChunkedDecoder:
    """Incremental decoder for chunk-framed byte streams.

    Feed arbitrary slices of the stream; complete messages come out in
    order and partial trailing data is retained for the next feed.
    """

    def __init__(self):
        self._buffer = bytearray()
        self._chunks: list[bytes] = []

    def residual(self) -> bytes:
        """Bytes received but not yet part of a complete message."""
        return bytes(self._buffer)

    def feed(self, data: bytes) -> list[bytes]:
        self._buffer.extend(data)
        messages = []
        while True:
            message = self._try_extract()
            if message is None:
                return messages
            messages.append(message)

    def _try_extract(self):
        # Each iteration consumes one chunk header (or the end-of-chunks
        # marker) from the front of the buffer.
        while True:
            buf = self._buffer
            if len(buf) < 3:
                return None
            if not buf.startswith(b"\n#"):
                raise FramingError(f"expected chunk header, got {bytes(buf[:8])!r}")
            if buf.startswith(b"\n##\n"):
                del self._buffer[:4]
                message = b"".join(self._chunks)
                self._chunks = []
                if not message:
                    raise FramingError("end-of-chunks with no preceding chunk data")
                return message
            end = buf.find(b"\n", 2)
            if end == -1:
                if len(buf) > _HEADER_LIMIT:
                    raise FramingError("unterminated chunk header")
                return None  # header still incomplete
            header = bytes(buf[2:end])
            if not header.isdigit():
                raise FramingError(f"bad chunk length {header!r}")
            size = int(header)
            if not 1 <= size <= MAX_CHUNK_SIZE:
                raise FramingError(f"chunk length {size} out of range")
            if len(buf) < end + 1 + size:
                return None  # chunk data incomplete
            self._chunks.append(bytes(buf[end + 1 : end + 1 + size]))
            del self._buffer[: end + 1 + size]


class EomDecoder:
    """Incremental decoder for ``]]>]]>``-delimited streams."""

    def __init__(self):
        self._buffer = bytearray()

    def residual(self) -> bytes:
        """Bytes received but not yet part of a complete message."""
        return bytes(self._buffer)

    def feed(self, data: bytes) -> list[bytes]:
        self._buffer.extend(data)
        messages = []
        while True:
            idx = self._buffer.find(EOM_DELIMITER)
            if idx == -1:
                return messages
            messages.append(bytes(self._buffer[:idx]))
            del self._buffer[: idx + len(EOM_DELIMITER)]


def decode_chunked(stream: bytes) -> list[bytes]:
    """Decode a complete chunk-framed byte string into its messages.

    Trailing partial data is an error here; use ChunkedDecoder for
    incremental reads from a socket.
    """
    decoder = ChunkedDecoder()
    messages = decoder.feed(stream)
    if decoder._buffer:
        raise FramingError(f"{len(decoder._buffer)} trailing bytes after last frame")
    return messages
