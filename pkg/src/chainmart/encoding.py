"""Canonical byte encodings shared across the ledger and the wire formats.

Two forms live here:

* canonical JSON: UTF-8, object keys sorted bytewise, no insignificant
  whitespace, integers in decimal, booleans as literals, standard string
  escaping.  This is the byte form that gets hashed, signed, and encrypted,
  so it must be stable down to the last byte.
* length-prefixed binary packing: 4-byte big-endian length followed by the
  raw bytes, used by transaction and header serialization so variable-size
  fields (keys, payloads) can never be confused with their neighbours.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import UnsupportedValue

U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1


def _check_value(value: Any) -> None:
    if isinstance(value, bool):
        return
    if isinstance(value, int):
        return
    if isinstance(value, str):
        return
    if isinstance(value, dict):
        for k, v in value.items():
            if not isinstance(k, str):
                raise UnsupportedValue(f"object keys must be strings, got {type(k).__name__}")
            _check_value(v)
        return
    if isinstance(value, (list, tuple)):
        for v in value:
            _check_value(v)
        return
    raise UnsupportedValue(f"cannot canonically encode {type(value).__name__}")


def canonical_json_bytes(value: Any) -> bytes:
    """Encode to the canonical JSON byte form.

    Rejects floats, None, and any non-JSON type: every value that reaches a
    digest or a signature must have exactly one byte representation.
    """
    _check_value(value)
    text = json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return text.encode("utf-8")


def parse_canonical_json(data: bytes) -> Any:
    return json.loads(data.decode("utf-8"))


def u64_be(n: int) -> bytes:
    if not 0 <= n <= U64_MAX:
        raise ValueError(f"u64 out of range: {n}")
    return n.to_bytes(8, "big")


def lp(data: bytes) -> bytes:
    """Length-prefix: 4-byte big-endian length, then the bytes."""
    if len(data) > U32_MAX:
        raise ValueError("field too long for a u32 length prefix")
    return len(data).to_bytes(4, "big") + data


class ByteReader:
    """Sequential reader for the length-prefixed binary form."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise ValueError("truncated input")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def take_u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def take_lp(self) -> bytes:
        n = int.from_bytes(self.take(4), "big")
        return self.take(n)

    def done(self) -> bool:
        return self._pos == len(self._data)
