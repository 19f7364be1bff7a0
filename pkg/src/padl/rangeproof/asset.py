"""Proof of asset: the account's running balance is a non-negative number.

The verifier aggregates the account's on-ledger cells for one asset together
with the new cell::

    cm_sum = sum(history cm) + cm        tk_sum = sum(history tk) + tk

The owner re-commits to the balance under a fresh blinding ``r'`` as
``cm' = v*G + r'*H`` with token ``tk' = r'*pk`` and sends a consistency proof
for ``(cm', tk')``, an equivalence proof between ``(cm_sum, tk_sum)`` and
``(cm', tk')`` under ``sk``, and a range proof on ``cm'``.

The consistency proof on ``(cm', tk')`` is what pins ``tk'`` to ``r'*pk``; the
equivalence relation alone can be met by any ``tk'`` the key holder chooses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..group import CommitKey, DecodeError, Point, Rng, default_rng, point_sum
from ..sigma import (
    ConsistencyProof, EquivalenceProof, prove_consistency, prove_equivalence,
    verify_consistency, verify_equivalence,
)
from ..transcript import Transcript
from . import RangeError, RangeProof, prove_range, verify_range, DEFAULT_BACKEND


@dataclass(frozen=True)
class AssetProof:
    cm_c: Point
    tk_c: Point
    consistency: ConsistencyProof
    equivalence: EquivalenceProof
    range: RangeProof

    def to_bytes(self) -> bytes:
        return (self.cm_c.encode() + self.tk_c.encode() + self.consistency.to_bytes()
                + self.equivalence.to_bytes() + self.range.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "AssetProof":
        head = 64 + ConsistencyProof.SIZE + EquivalenceProof.SIZE
        if len(data) < head + 2:
            raise DecodeError("asset proof too short")
        cm_c = Point.decode(data[:32])
        tk_c = Point.decode(data[32:64])
        cons = ConsistencyProof.from_bytes(data[64:64 + ConsistencyProof.SIZE])
        eq = EquivalenceProof.from_bytes(data[64 + ConsistencyProof.SIZE:head])
        try:
            rp = RangeProof.from_bytes(data[head:])
        except ValueError as exc:
            raise DecodeError(str(exc)) from None
        return cls(cm_c, tk_c, cons, eq, rp)

    def __len__(self) -> int:
        return 64 + ConsistencyProof.SIZE + EquivalenceProof.SIZE + len(self.range)


def asset_statement(history_cms: Sequence[Point], history_tks: Sequence[Point],
                    cm: Point, tk: Point) -> tuple[Point, Point]:
    """Aggregate ``(cm_sum, tk_sum)`` over history plus the current cell."""
    if len(history_cms) != len(history_tks):
        raise ValueError("history commitments and tokens differ in length")
    return point_sum(history_cms) + cm, point_sum(history_tks) + tk


def prove_asset(ck: CommitKey, history_cms: Sequence[Point], history_tks: Sequence[Point],
                cm: Point, tk: Point, balance: int, sk: int, pk: Point, n: int,
                transcript: Transcript, rng: Rng | None = None,
                backend: str = DEFAULT_BACKEND) -> AssetProof:
    if not 0 <= balance < 2**n:
        raise RangeError(f"resulting balance {balance} is outside [0, 2^{n})")
    rng = default_rng(rng)
    cm_sum, tk_sum = asset_statement(history_cms, history_tks, cm, tk)
    r_c = rng.nonzero_scalar()
    cm_c = ck.commit(balance, r_c)
    tk_c = pk * r_c
    cons = prove_consistency(ck, cm_c, tk_c, pk, balance, r_c, transcript.fork("asset/consistency"), rng)
    eq = prove_equivalence(ck, cm_sum, cm_c, tk_sum, tk_c, sk, transcript.fork("asset/equivalence"), rng)
    rp = prove_range(ck, balance, r_c, n, transcript.fork("asset/range"), rng, backend)
    return AssetProof(cm_c, tk_c, cons, eq, rp)


def verify_asset(ck: CommitKey, history_cms: Sequence[Point], history_tks: Sequence[Point],
                 cm: Point, tk: Point, pk: Point, proof: AssetProof, n: int,
                 transcript: Transcript, *, check_range: bool = True) -> bool:
    """Check the asset proof.  ``check_range=False`` leaves the range proof to a batch."""
    try:
        cm_sum, tk_sum = asset_statement(history_cms, history_tks, cm, tk)
    except ValueError:
        return False
    if not verify_consistency(ck, proof.cm_c, proof.tk_c, pk, proof.consistency,
                              transcript.fork("asset/consistency")):
        return False
    if not verify_equivalence(ck, cm_sum, proof.cm_c, tk_sum, proof.tk_c, proof.equivalence,
                              transcript.fork("asset/equivalence")):
        return False
    if check_range:
        return verify_range(ck, proof.cm_c, n, proof.range, transcript.fork("asset/range"))
    return True


def range_item(proof: AssetProof, n: int, transcript: Transcript):
    """Item tuple for :func:`verify_range_batch`."""
    return proof.cm_c, n, proof.range, transcript.fork("asset/range")
