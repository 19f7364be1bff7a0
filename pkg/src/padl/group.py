"""Prime-order group, Pedersen commitments, account keys and audit tokens.

The group is Ristretto255 (order ``L``), written additively: a commitment to
``v`` with blinding ``r`` is ``v*G + r*H`` and a token is ``r*pk``.  Scalars
are plain Python ints kept in ``[0, L)``; points are immutable wrappers around
their canonical 32-byte encoding.
"""
from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import _sodium

L = 2**252 + 27742317777372353535851937790883648493
SCALAR_BYTES = 32
POINT_BYTES = 32


class DecodeError(ValueError):
    """Raised when bytes are not a canonical encoding."""


def scalar(x: int) -> int:
    return x % L


def scalar_to_bytes(x: int) -> bytes:
    return (x % L).to_bytes(SCALAR_BYTES, "little")


def scalar_from_bytes(data: bytes) -> int:
    if len(data) != SCALAR_BYTES:
        raise DecodeError(f"scalar needs {SCALAR_BYTES} bytes, got {len(data)}")
    x = int.from_bytes(data, "little")
    if x >= L:
        raise DecodeError("non-canonical scalar")
    return x


def inverse(x: int) -> int:
    x %= L
    if x == 0:
        raise ZeroDivisionError("zero has no inverse mod L")
    return pow(x, -1, L)


def signed(x: int) -> int:
    """Map a scalar back to the signed integer it most plausibly encodes."""
    x %= L
    return x - L if x > L // 2 else x


class Point:
    __slots__ = ("_b",)

    def __init__(self, encoding: bytes):
        # trusted constructor; untrusted input goes through Point.decode
        self._b = bytes(encoding)

    @classmethod
    def decode(cls, data: bytes) -> "Point":
        data = bytes(data)
        if len(data) != POINT_BYTES:
            raise DecodeError(f"point needs {POINT_BYTES} bytes, got {len(data)}")
        if not _sodium.is_valid_point(data):
            raise DecodeError("non-canonical ristretto255 encoding")
        return cls(data)

    def encode(self) -> bytes:
        return self._b

    def hex(self) -> str:
        return self._b.hex()

    @property
    def is_identity(self) -> bool:
        return self._b == _ZERO

    def __add__(self, other: "Point") -> "Point":
        if self._b == _ZERO:
            return other
        if other._b == _ZERO:
            return self
        return Point(_sodium.add(self._b, other._b))

    def __sub__(self, other: "Point") -> "Point":
        if other._b == _ZERO:
            return self
        return Point(_sodium.sub(self._b, other._b))

    def __neg__(self) -> "Point":
        return Point(_sodium.sub(_ZERO, self._b))

    def __mul__(self, k: int) -> "Point":
        k %= L
        if k == 0 or self._b == _ZERO:
            return IDENTITY
        if k == 1:
            return self
        kb = k.to_bytes(SCALAR_BYTES, "little")
        if self._b == _BASE:
            return Point(_sodium.scalarmult_base(kb))
        return Point(_sodium.scalarmult(kb, self._b))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Point) and self._b == other._b

    def __hash__(self) -> int:
        return hash(self._b)

    def __repr__(self) -> str:
        return f"Point({self._b.hex()[:16]}…)"


_ZERO = bytes(32)
IDENTITY = Point(_ZERO)
_BASE = _sodium.scalarmult_base((1).to_bytes(32, "little"))
G = Point(_BASE)


def hash_to_point(*parts: bytes) -> Point:
    """Hash labelled byte strings to a group element with unknown dlog."""
    h = hashlib.sha512()
    for part in parts:
        h.update(len(part).to_bytes(8, "little"))
        h.update(part)
    return Point(_sodium.from_hash(h.digest()))


def msm(scalars: Iterable[int], points: Iterable[Point]) -> Point:
    acc = IDENTITY
    for k, p in zip(scalars, points):
        acc = acc + p * k
    return acc


def point_sum(points: Iterable[Point]) -> Point:
    acc = IDENTITY
    for p in points:
        acc = acc + p
    return acc


class Rng:
    """Scalar source; deterministic when seeded, OS entropy otherwise.

    Seeded streams are SHAKE-256 over (seed, counter) so a fixed seed gives
    byte-identical proofs and ledgers across runs.
    """

    def __init__(self, seed: bytes | str | int | None = None):
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "little", signed=True)
        elif isinstance(seed, str):
            seed = seed.encode()
        self._seed = seed
        self._counter = 0

    @property
    def deterministic(self) -> bool:
        return self._seed is not None

    def bytes(self, n: int) -> bytes:
        if self._seed is None:
            return secrets.token_bytes(n)
        h = hashlib.shake_256()
        h.update(b"padl/rng")
        h.update(self._seed)
        h.update(self._counter.to_bytes(8, "little"))
        self._counter += 1
        return h.digest(n)

    def scalar(self) -> int:
        # 64 bytes reduced mod L: bias below 2^-250
        return int.from_bytes(self.bytes(64), "little") % L

    def nonzero_scalar(self) -> int:
        while True:
            x = self.scalar()
            if x:
                return x

    def child(self, label: str | bytes) -> "Rng":
        """Independent deterministic stream, or a fresh OS-entropy stream."""
        if self._seed is None:
            return Rng()
        if isinstance(label, str):
            label = label.encode()
        return Rng(hashlib.sha256(b"padl/rng/child" + self._seed + label).digest())


def default_rng(rng: Rng | None) -> Rng:
    return rng if rng is not None else Rng()


# -- commitment key -------------------------------------------------------

SETUP_TAG = b"padl/setup/h/v1"


@dataclass(frozen=True)
class CommitKey:
    g: Point
    h: Point

    def __post_init__(self):
        if self.g.is_identity or self.h.is_identity:
            raise ValueError("commitment bases must not be the identity")
        if self.g == self.h:
            raise ValueError("commitment bases must differ")

    def commit(self, v: int, r: int) -> Point:
        return self.g * v + self.h * r

    def encode(self) -> bytes:
        return self.g.encode() + self.h.encode()

    @classmethod
    def decode(cls, data: bytes) -> "CommitKey":
        if len(data) != 64:
            raise DecodeError("commit key needs 64 bytes")
        return cls(Point.decode(data[:32]), Point.decode(data[32:]))


def combine_contributions(points: Sequence[Point]) -> Point:
    return point_sum(points)


def setup(contributions: Sequence[int]) -> CommitKey:
    """Derive the commitment key from per-party scalar contributions.

    Each party publishes ``r_p*G``; the published points are summed and the
    sum is hashed to the group to obtain ``h``.  Nobody, including the
    contributors, learns ``log_G h``.
    """
    if not contributions:
        raise ValueError("setup needs at least one contribution")
    return setup_from_points([G * c for c in contributions])


def setup_from_points(published: Sequence[Point]) -> CommitKey:
    if not published:
        raise ValueError("setup needs at least one contribution")
    combined = combine_contributions(published)
    h = hash_to_point(SETUP_TAG, len(published).to_bytes(4, "little"), combined.encode())
    return CommitKey(G, h)


# -- accounts -------------------------------------------------------------

@dataclass(frozen=True)
class KeyPair:
    sk: int = field(repr=False)
    pk: Point

    def check(self, ck: CommitKey) -> bool:
        return ck.h * self.sk == self.pk


def keygen(ck: CommitKey, rng: Rng | None = None) -> KeyPair:
    sk = default_rng(rng).nonzero_scalar()
    return KeyPair(sk, ck.h * sk)


def commit(ck: CommitKey, v: int, r: int) -> Point:
    return ck.commit(v, r)


def token(r: int, pk: Point) -> Point:
    if pk.is_identity:
        raise ValueError("identity is not a valid account key")
    return pk * r
