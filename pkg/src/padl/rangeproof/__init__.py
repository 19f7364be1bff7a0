"""Range proofs behind one interface, plus the composed proof of asset.

Two backends are registered:

``bulletproof``  logarithmic size, batch verification (the default)
``bits``         bit decomposition with per-bit OR-proofs, linear size

Serialized form is ``tag (1 byte) | n (1 byte) | backend bytes``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

from ..group import CommitKey, Point, Rng
from ..transcript import Transcript
from . import bits, bulletproofs


class RangeError(ValueError):
    """The value cannot be proven to lie in the requested range."""


class _Backend(NamedTuple):
    tag: int
    prove: Callable
    verify: Callable
    verify_batch: Callable | None
    proof_size: Callable[[int], int]


BACKENDS: dict[str, _Backend] = {
    "bulletproof": _Backend(1, bulletproofs.prove, bulletproofs.verify,
                            bulletproofs.verify_batch, bulletproofs.proof_size),
    "bits": _Backend(2, bits.prove, bits.verify, None, bits.proof_size),
}
_BY_TAG = {b.tag: name for name, b in BACKENDS.items()}
DEFAULT_BACKEND = "bulletproof"


def backend(name: str) -> _Backend:
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown range-proof backend {name!r}; have {sorted(BACKENDS)}") from None


@dataclass(frozen=True)
class RangeProof:
    backend: str
    n: int
    data: bytes

    def to_bytes(self) -> bytes:
        return bytes([BACKENDS[self.backend].tag, self.n]) + self.data

    @classmethod
    def from_bytes(cls, raw: bytes) -> "RangeProof":
        if len(raw) < 2 or raw[0] not in _BY_TAG:
            raise ValueError("malformed range proof header")
        return cls(_BY_TAG[raw[0]], raw[1], bytes(raw[2:]))

    def __len__(self) -> int:
        return 2 + len(self.data)


def serialized_size(name: str, n: int) -> int:
    return 2 + backend(name).proof_size(n)


def prove_range(ck: CommitKey, v: int, r: int, n: int, transcript: Transcript,
                rng: Rng | None = None, backend_name: str = DEFAULT_BACKEND) -> RangeProof:
    if not 0 <= v < 2**n:
        raise RangeError(f"value {v} is outside [0, 2^{n})")
    b = backend(backend_name)
    return RangeProof(backend_name, n, b.prove(ck, v, r, n, transcript, rng))


def verify_range(ck: CommitKey, cm: Point, n: int, proof: RangeProof,
                 transcript: Transcript) -> bool:
    if proof.n != n or proof.backend not in BACKENDS:
        return False
    try:
        return BACKENDS[proof.backend].verify(ck, cm, n, proof.data, transcript)
    except ValueError:
        return False


def verify_range_batch(ck: CommitKey, items) -> bool:
    """Verify ``(cm, n, proof, transcript)`` items; batched where the backend allows."""
    groups: dict[str, list] = {}
    for cm, n, proof, transcript in items:
        if proof.n != n or proof.backend not in BACKENDS:
            return False
        groups.setdefault(proof.backend, []).append((cm, n, proof.data, transcript))
    for name, group in groups.items():
        b = BACKENDS[name]
        try:
            if b.verify_batch is not None:
                if not b.verify_batch(ck, group):
                    return False
            elif not all(b.verify(ck, *item) for item in group):
                return False
        except ValueError:
            return False
    return True


from .asset import AssetProof, prove_asset, verify_asset, asset_statement  # noqa: E402

__all__ = [
    "RangeError", "RangeProof", "BACKENDS", "DEFAULT_BACKEND", "serialized_size",
    "prove_range", "verify_range", "verify_range_batch",
    "AssetProof", "prove_asset", "verify_asset", "asset_statement",
]
