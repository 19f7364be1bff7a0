"""Fiat-Shamir transcript over SHA-512.

Every absorbed message is framed as ``len(label) | label | len(data) | data``
so that no two distinct absorption sequences share a byte stream.
Challenges are 64-byte digests reduced mod ``L`` and are fed back into the
state, so consecutive challenges are independent.
"""
from __future__ import annotations

import hashlib

from .group import L, Point, scalar_to_bytes

PROTOCOL = b"padl/transcript/v1"


class Transcript:
    def __init__(self, label: bytes | str = b""):
        if isinstance(label, str):
            label = label.encode()
        self._h = hashlib.sha512()
        self._absorb(b"protocol", PROTOCOL)
        self._absorb(b"domain", label)

    def _absorb(self, label: bytes, data: bytes) -> None:
        self._h.update(len(label).to_bytes(4, "little"))
        self._h.update(label)
        self._h.update(len(data).to_bytes(8, "little"))
        self._h.update(data)

    def append(self, label: bytes | str, data: bytes | str | int | Point) -> "Transcript":
        if isinstance(label, str):
            label = label.encode()
        if isinstance(data, Point):
            data = data.encode()
        elif isinstance(data, str):
            data = data.encode()
        elif isinstance(data, int):
            data = data.to_bytes(8, "little", signed=True)
        self._absorb(label, bytes(data))
        return self

    def append_points(self, label: bytes | str, points) -> "Transcript":
        for p in points:
            self.append(label, p)
        return self

    def append_scalar(self, label: bytes | str, x: int) -> "Transcript":
        return self.append(label, scalar_to_bytes(x))

    def challenge(self, label: bytes | str = b"challenge") -> int:
        if isinstance(label, str):
            label = label.encode()
        h = self._h.copy()
        h.update(b"squeeze")
        h.update(label)
        c = int.from_bytes(h.digest(), "little") % L
        self._absorb(b"challenge:" + label, scalar_to_bytes(c))
        return c

    def fork(self, label: bytes | str) -> "Transcript":
        """Copy of the current state with ``label`` absorbed; self is untouched."""
        t = Transcript.__new__(Transcript)
        t._h = self._h.copy()
        t.append(b"fork", label)
        return t

    def digest(self) -> bytes:
        return self._h.copy().digest()


def cell_transcript(txid: bytes, asset: str, participant: int, purpose: str) -> Transcript:
    """Transcript bound to one (transaction, asset, participant) cell."""
    return (
        Transcript(b"padl/cell")
        .append(b"txid", txid)
        .append(b"asset", asset)
        .append(b"participant", participant)
        .append(b"purpose", purpose)
    )
