"""Sigma-protocol NIZKs made non-interactive with :class:`Transcript`.

All proofs here are one generic protocol: proof of knowledge of a preimage
``w`` under a group homomorphism ``phi(w) = (sum_j B[i][j] * w[j])_i``.
The prover sends ``t = phi(k)``, derives ``c`` from the transcript and answers
``s = k + c*w``; the verifier checks ``phi(s) == t + c*phi(w)`` row by row.

Instances:

* consistency   ``phi(v, r) = (v*G + r*H, r*pk)``
* equivalence   ``phi(x) = x*b`` with ``b = cm - cm'`` and image ``a = tk - tk'``
* dlog equality ``phi(x) = (x*B1, x*B2)``
* schnorr       ``phi(x) = x*B``
"""
from __future__ import annotations

from dataclasses import dataclass

from .group import (
    IDENTITY, L, CommitKey, DecodeError, Point, Rng, default_rng, msm,
    scalar_from_bytes, scalar_to_bytes,
)
from .transcript import Transcript


def _prove_preimage(bases, witness, transcript: Transcript, rng: Rng | None):
    rng = default_rng(rng)
    ks = [rng.scalar() for _ in witness]
    ts = [msm(ks, row) for row in bases]
    transcript.append_points(b"t", ts)
    c = transcript.challenge(b"c")
    return ts, [(k + c * w) % L for k, w in zip(ks, witness)]


def _verify_preimage(bases, images, ts, ss, transcript: Transcript) -> bool:
    if len(ts) != len(bases) or len(ss) != len(bases[0]):
        return False
    transcript.append_points(b"t", ts)
    c = transcript.challenge(b"c")
    return all(msm(ss, row) == t + y * c for row, y, t in zip(bases, images, ts))


def _split(data: bytes, n_points: int, n_scalars: int):
    expected = 32 * (n_points + n_scalars)
    if len(data) != expected:
        raise DecodeError(f"expected {expected} proof bytes, got {len(data)}")
    pts = [Point.decode(data[32 * i: 32 * i + 32]) for i in range(n_points)]
    off = 32 * n_points
    scs = [scalar_from_bytes(data[off + 32 * i: off + 32 * i + 32]) for i in range(n_scalars)]
    return pts, scs


@dataclass(frozen=True)
class ConsistencyProof:
    t1: Point
    t2: Point
    s1: int
    s2: int

    SIZE = 128

    def to_bytes(self) -> bytes:
        return (self.t1.encode() + self.t2.encode()
                + scalar_to_bytes(self.s1) + scalar_to_bytes(self.s2))

    @classmethod
    def from_bytes(cls, data: bytes) -> "ConsistencyProof":
        (t1, t2), (s1, s2) = _split(data, 2, 2)
        return cls(t1, t2, s1, s2)


@dataclass(frozen=True)
class SchnorrProof:
    t: Point
    s: int

    SIZE = 64

    def to_bytes(self) -> bytes:
        return self.t.encode() + scalar_to_bytes(self.s)

    @classmethod
    def from_bytes(cls, data: bytes):
        (t,), (s,) = _split(data, 1, 1)
        return cls(t, s)


class EquivalenceProof(SchnorrProof):
    pass


@dataclass(frozen=True)
class DlogEqualityProof:
    t_a: Point
    t_b: Point
    s: int

    SIZE = 96

    def to_bytes(self) -> bytes:
        return self.t_a.encode() + self.t_b.encode() + scalar_to_bytes(self.s)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DlogEqualityProof":
        (ta, tb), (s,) = _split(data, 2, 1)
        return cls(ta, tb, s)


# -- consistency ----------------------------------------------------------

def _consistency_statement(ck, cm, tk, pk, transcript):
    transcript.append(b"proof", b"consistency")
    transcript.append_points(b"stmt", [ck.g, ck.h, pk, cm, tk])
    return [[ck.g, ck.h], [IDENTITY, pk]], [cm, tk]


def prove_consistency(ck: CommitKey, cm: Point, tk: Point, pk: Point, v: int, r: int,
                      transcript: Transcript, rng: Rng | None = None) -> ConsistencyProof:
    """Prove that one blinding factor ``r`` opens both ``cm`` and ``tk = r*pk``."""
    bases, _ = _consistency_statement(ck, cm, tk, pk, transcript)
    (t1, t2), (s1, s2) = _prove_preimage(bases, [v % L, r % L], transcript, rng)
    return ConsistencyProof(t1, t2, s1, s2)


def verify_consistency(ck: CommitKey, cm: Point, tk: Point, pk: Point,
                       proof: ConsistencyProof, transcript: Transcript) -> bool:
    # token equation uses pk as base: t2 + c*tk == s2*pk
    if pk.is_identity:
        return False
    bases, images = _consistency_statement(ck, cm, tk, pk, transcript)
    return _verify_preimage(bases, images, [proof.t1, proof.t2], [proof.s1, proof.s2], transcript)


# -- equivalence ----------------------------------------------------------

def _equivalence_statement(ck, cm, cm_c, tk, tk_c, transcript):
    transcript.append(b"proof", b"equivalence")
    transcript.append_points(b"stmt", [ck.g, ck.h, cm, tk, cm_c, tk_c])
    return cm - cm_c, tk - tk_c


def prove_equivalence(ck: CommitKey, cm: Point, cm_c: Point, tk: Point, tk_c: Point, sk: int,
                      transcript: Transcript, rng: Rng | None = None) -> EquivalenceProof:
    """Prove ``cm`` and ``cm_c`` commit to the same value, witnessed by ``sk``.

    With equal values ``cm - cm_c = (r - r')*H`` and ``tk - tk_c = sk*(cm - cm_c)``.
    """
    b, _ = _equivalence_statement(ck, cm, cm_c, tk, tk_c, transcript)
    if b.is_identity:
        raise ValueError("degenerate equivalence: both commitments use the same blinding")
    (t,), (s,) = _prove_preimage([[b]], [sk % L], transcript, rng)
    return EquivalenceProof(t, s)


def verify_equivalence(ck: CommitKey, cm: Point, cm_c: Point, tk: Point, tk_c: Point,
                       proof: SchnorrProof, transcript: Transcript) -> bool:
    b, a = _equivalence_statement(ck, cm, cm_c, tk, tk_c, transcript)
    if b.is_identity:
        return False
    return _verify_preimage([[b]], [a], [proof.t], [proof.s], transcript)


# -- dlog equality --------------------------------------------------------

def _dleq_statement(base1, elem1, base2, elem2, transcript):
    transcript.append(b"proof", b"dlog-equality")
    transcript.append_points(b"stmt", [base1, elem1, base2, elem2])
    return [[base1], [base2]], [elem1, elem2]


def prove_dlog_equality(base1: Point, elem1: Point, base2: Point, elem2: Point, x: int,
                        transcript: Transcript, rng: Rng | None = None) -> DlogEqualityProof:
    """Prove ``elem1 = x*base1`` and ``elem2 = x*base2`` for the same ``x``."""
    if base1.is_identity or base2.is_identity:
        raise ValueError("dlog equality needs non-identity bases")
    bases, _ = _dleq_statement(base1, elem1, base2, elem2, transcript)
    (ta, tb), (s,) = _prove_preimage(bases, [x % L], transcript, rng)
    return DlogEqualityProof(ta, tb, s)


def verify_dlog_equality(base1: Point, elem1: Point, base2: Point, elem2: Point,
                         proof: DlogEqualityProof, transcript: Transcript) -> bool:
    if base1.is_identity or base2.is_identity:
        return False
    bases, images = _dleq_statement(base1, elem1, base2, elem2, transcript)
    return _verify_preimage(bases, images, [proof.t_a, proof.t_b], [proof.s], transcript)


# -- plain schnorr --------------------------------------------------------

def prove_dlog(base: Point, elem: Point, x: int, transcript: Transcript,
               rng: Rng | None = None) -> SchnorrProof:
    if base.is_identity:
        raise ValueError("schnorr proof needs a non-identity base")
    transcript.append(b"proof", b"schnorr").append_points(b"stmt", [base, elem])
    (t,), (s,) = _prove_preimage([[base]], [x % L], transcript, rng)
    return SchnorrProof(t, s)


def verify_dlog(base: Point, elem: Point, proof: SchnorrProof, transcript: Transcript) -> bool:
    if base.is_identity:
        return False
    transcript.append(b"proof", b"schnorr").append_points(b"stmt", [base, elem])
    return _verify_preimage([[base]], [elem], [proof.t], [proof.s], transcript)


__all__ = [
    "ConsistencyProof", "EquivalenceProof", "DlogEqualityProof", "SchnorrProof",
    "prove_consistency", "verify_consistency", "prove_equivalence", "verify_equivalence",
    "prove_dlog_equality", "verify_dlog_equality", "prove_dlog", "verify_dlog",
]
