"""Byte-level stream primitives: LEB128 varints and a bounds-checked reader.

Everything in the container is byte aligned; entropy-coded payloads are opaque
byte strings whose lengths are written as varints ahead of them.
"""

from __future__ import annotations

from .errors import TruncationError


def write_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varints are unsigned")
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


class ByteReader:
    """Sequential reader that raises TruncationError instead of under-reading."""

    def __init__(self, data: bytes, context: str = "stream"):
        self.data = data
        self.pos = 0
        self.context = context

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def read_bytes(self, n: int) -> bytes:
        if self.remaining() < n:
            raise TruncationError(
                f"{self.context} truncated: needed {n} bytes at offset {self.pos}, "
                f"{self.remaining()} left"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def read_u8(self) -> int:
        return self.read_bytes(1)[0]

    def read_varint(self) -> int:
        value = 0
        shift = 0
        while True:
            b = self.read_u8()
            value |= (b & 0x7F) << shift
            if not b & 0x80:
                return value
            shift += 7
            if shift > 63:
                raise TruncationError(f"{self.context}: varint too long at offset {self.pos}")
