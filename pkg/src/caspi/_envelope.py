"""Shared binary container used by every on-disk format.

Layout: a 4-character ASCII magic plus newline, an ASCII decimal byte
count plus newline, a JSON header of exactly that many bytes, then a raw
payload. Headers may carry extra keys (provenance, config digests);
readers ignore what they do not know.
"""

from __future__ import annotations

import json
from typing import BinaryIO

from .errors import FormatError

_LENGTH_LINE_MAX = 20


def write_envelope(sink: BinaryIO, magic: str, header: dict, payload: bytes) -> int:
    """Write one container; returns the total number of bytes written."""
    if len(magic) != 4:
        raise ValueError(f"magic must be 4 characters, got {magic!r}")
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("ascii")
    out = magic.encode("ascii") + b"\n" + str(len(head)).encode("ascii") + b"\n"
    sink.write(out)
    sink.write(head)
    sink.write(payload)
    return len(out) + len(head) + len(payload)


def read_envelope(source: BinaryIO, magic: str) -> tuple[dict, bytes]:
    """Read one container, checking the magic; returns (header, payload)."""
    lead = source.read(5)
    if lead != magic.encode("ascii") + b"\n":
        raise FormatError(f"bad magic: expected {magic!r}, got {lead!r}")
    digits = b""
    while True:
        c = source.read(1)
        if c == b"\n":
            break
        if not c or not c.isdigit() or len(digits) > _LENGTH_LINE_MAX:
            raise FormatError("malformed header length line")
        digits += c
    if not digits:
        raise FormatError("empty header length line")
    n = int(digits)
    head = source.read(n)
    if len(head) != n:
        raise FormatError("truncated header")
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise FormatError("header is not a JSON object")
    payload = source.read()
    return header, payload


def expect_payload(payload: bytes, nbytes: int, what: str) -> bytes:
    if len(payload) < nbytes:
        raise FormatError(f"truncated payload: {what} needs {nbytes} bytes, "
                          f"got {len(payload)}")
    return payload[:nbytes]
