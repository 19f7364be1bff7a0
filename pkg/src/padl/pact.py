"""Transactions: cells, spending, endorsement, extraction and verification.

A transaction row is an asset-major matrix of :class:`Cell`.  The spender
fills every cell with ``cm = v*G + r*H``, ``tk = r*pk`` and a consistency
proof, with the blinding factors of each asset summing to zero.  Each
participant then extracts its own amount, applies its policy and endorses by
adding a complementary commitment, its proofs and a proof of asset.

The ledger object passed around as ``view`` is duck-typed; it must provide
``ck``, ``config``, ``height``, ``rows``, ``pk(p)``, ``issuer_pk(asset)``,
``asset_ids``, ``n_participants`` and ``sums(p, asset)``.
"""
from __future__ import annotations

import hashlib
import struct
import threading
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from .group import (
    G, IDENTITY, L, CommitKey, DecodeError, KeyPair, Point, Rng, default_rng,
    inverse, keygen, point_sum,
)
from .rangeproof import verify_range_batch
from .rangeproof.asset import AssetProof, prove_asset, range_item, verify_asset
from .sigma import (
    ConsistencyProof, EquivalenceProof, SchnorrProof, prove_consistency, prove_dlog,
    prove_equivalence, verify_consistency, verify_dlog, verify_equivalence,
)
from .transcript import Transcript, cell_transcript

TXID_TAG = b"padl/txid/v1"
DEFAULT_MAX_MAGNITUDE = 2**20


class PactError(Exception):
    pass


class ExtractionError(PactError):
    """No amount within the search range matches; wrong key or value too large."""


class EndorsementRefused(PactError):
    def __init__(self, refusals):
        self.refusals = list(refusals)
        desc = ", ".join(f"participant {r.participant} asset {r.asset}: {r.reason}" for r in self.refusals)
        super().__init__(f"endorsement refused ({desc})")


class EndorsementTimeout(PactError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"no endorsement from participants {self.missing}")


class ApprovalRefused(PactError):
    pass


# -- extraction -----------------------------------------------------------

BABY_BITS = 14
_tables: dict[bytes, dict[bytes, int]] = {}
_table_lock = threading.Lock()


def _baby_table(g: Point) -> dict[bytes, int]:
    """``{encode(j*g): j}`` for ``j`` in ``[-2^13, 2^13)``."""
    key = g.encode()
    with _table_lock:
        table = _tables.get(key)
        if table is None:
            half = 1 << (BABY_BITS - 1)
            table = {IDENTITY.encode(): 0}
            up = down = IDENTITY
            for j in range(1, half + 1):
                up = up + g
                down = down - g
                table[down.encode()] = -j
                if j < half:
                    table[up.encode()] = j
            _tables[key] = table
    return table


def solve_small_dlog(y: Point, g: Point = G, max_magnitude: int = DEFAULT_MAX_MAGNITUDE) -> int:
    """Find ``v`` with ``v*g == y`` and ``|v| <= max_magnitude`` (baby-step giant-step)."""
    table = _baby_table(g)
    m = 1 << BABY_BITS
    step = g * m
    limit = (max_magnitude + m // 2) // m + 1
    hit = table.get(y.encode())
    if hit is not None and abs(hit) <= max_magnitude:
        return hit
    up = down = y
    for i in range(1, limit + 1):
        # y - i*m*g and y + i*m*g, outward from zero
        up = up - step
        j = table.get(up.encode())
        if j is not None and abs(i * m + j) <= max_magnitude:
            return i * m + j
        down = down + step
        j = table.get(down.encode())
        if j is not None and abs(-i * m + j) <= max_magnitude:
            return -i * m + j
    raise ExtractionError(f"no amount with magnitude <= {max_magnitude}")


def extract(ck: CommitKey, cm: Point, tk: Point, sk: int,
            max_magnitude: int = DEFAULT_MAX_MAGNITUDE) -> int:
    """Recover ``v`` from ``cm = v*G + r*H`` and ``tk = r*sk*H``."""
    y = cm - tk * inverse(sk)
    return solve_small_dlog(y, ck.g, max_magnitude)


def mint(ck: CommitKey, v: int, rng: Rng | None = None, range_bits: int = 32) -> tuple[Point, int]:
    if abs(v) >= 2**range_bits:
        raise ValueError(f"|{v}| must be below 2^{range_bits}")
    r = default_rng(rng).scalar()
    return ck.commit(v, r), r


# -- cells and transactions -----------------------------------------------

_F_CONS, _F_END, _F_ISSUER = 1, 2, 4


@dataclass(frozen=True)
class Cell:
    cm: Point
    tk: Point
    consistency: ConsistencyProof | None = None
    cm_c: Point | None = None
    tk_c: Point | None = None
    consistency_c: ConsistencyProof | None = None
    equivalence: EquivalenceProof | None = None
    asset_proof: AssetProof | None = None
    issuer_tk: Point | None = None
    issuer_consistency: ConsistencyProof | None = None

    @property
    def endorsed(self) -> bool:
        return self.asset_proof is not None

    def to_bytes(self) -> bytes:
        flags = ((_F_CONS if self.consistency else 0) | (_F_END if self.endorsed else 0)
                 | (_F_ISSUER if self.issuer_tk is not None else 0))
        out = self.cm.encode() + self.tk.encode() + bytes([flags])
        if self.consistency:
            out += self.consistency.to_bytes()
        if self.endorsed:
            ap = self.asset_proof.to_bytes()
            out += (self.cm_c.encode() + self.tk_c.encode() + self.consistency_c.to_bytes()
                    + self.equivalence.to_bytes() + struct.pack("<I", len(ap)) + ap)
        if self.issuer_tk is not None:
            out += self.issuer_tk.encode() + self.issuer_consistency.to_bytes()
        return out

    @classmethod
    def from_bytes(cls, data: bytes) -> "Cell":
        r = _Reader(data)
        cm, tk = r.point(), r.point()
        flags = r.take(1)[0]
        if flags & ~(_F_CONS | _F_END | _F_ISSUER):
            raise DecodeError("unknown cell flags")
        kw = {}
        if flags & _F_CONS:
            kw["consistency"] = ConsistencyProof.from_bytes(r.take(ConsistencyProof.SIZE))
        if flags & _F_END:
            kw["cm_c"], kw["tk_c"] = r.point(), r.point()
            kw["consistency_c"] = ConsistencyProof.from_bytes(r.take(ConsistencyProof.SIZE))
            kw["equivalence"] = EquivalenceProof.from_bytes(r.take(EquivalenceProof.SIZE))
            n = struct.unpack("<I", r.take(4))[0]
            kw["asset_proof"] = AssetProof.from_bytes(r.take(n))
        if flags & _F_ISSUER:
            kw["issuer_tk"] = r.point()
            kw["issuer_consistency"] = ConsistencyProof.from_bytes(r.take(ConsistencyProof.SIZE))
        r.done()
        return cls(cm, tk, **kw)

    def to_json(self) -> dict:
        out = {"cm": self.cm.hex(), "tk": self.tk.hex()}
        for name in ("consistency", "cm_c", "tk_c", "consistency_c", "equivalence",
                     "asset_proof", "issuer_tk", "issuer_consistency"):
            val = getattr(self, name)
            if val is not None:
                out[name] = (val.encode() if isinstance(val, Point) else val.to_bytes()).hex()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Cell":
        decoders = {
            "cm": Point.decode, "tk": Point.decode, "cm_c": Point.decode, "tk_c": Point.decode,
            "issuer_tk": Point.decode,
            "consistency": ConsistencyProof.from_bytes,
            "consistency_c": ConsistencyProof.from_bytes,
            "issuer_consistency": ConsistencyProof.from_bytes,
            "equivalence": EquivalenceProof.from_bytes,
            "asset_proof": AssetProof.from_bytes,
        }
        unknown = set(obj) - set(decoders)
        if unknown:
            raise DecodeError(f"unknown cell fields {sorted(unknown)}")
        try:
            return cls(**{k: decoders[k](bytes.fromhex(v)) for k, v in obj.items()})
        except (TypeError, ValueError) as exc:
            raise DecodeError(str(exc)) from None


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = bytes(data), 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("truncated input")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def point(self) -> Point:
        return Point.decode(self.take(32))

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes")


def compute_txid(height: int, assets: Sequence[str], participants: Sequence[int],
                 cells, genesis: bool = False) -> bytes:
    h = hashlib.sha512()

    def put(b: bytes):
        h.update(len(b).to_bytes(8, "little"))
        h.update(b)

    put(TXID_TAG)
    put(height.to_bytes(8, "little"))
    put(b"\x01" if genesis else b"\x00")
    for a in assets:
        put(a.encode())
    put(b"|")
    for p in participants:
        put(p.to_bytes(4, "little"))
    for row in cells:
        for c in row:
            put(c.cm.encode() + c.tk.encode() + (c.issuer_tk.encode() if c.issuer_tk is not None else b""))
    return h.digest()[:32]


_TX_MAGIC = b"PADLTX1"


@dataclass(frozen=True)
class Transaction:
    height: int
    assets: tuple[str, ...]
    participants: tuple[int, ...]
    cells: tuple[tuple[Cell, ...], ...]
    txid: bytes
    genesis: bool = False
    approval: SchnorrProof | None = None

    def cell(self, asset: str, participant: int) -> Cell:
        return self.cells[self.assets.index(asset)][self.participants.index(participant)]

    def cell_items(self):
        for a, row in zip(self.assets, self.cells):
            for p, c in zip(self.participants, row):
                yield a, p, c

    def recompute_txid(self) -> bytes:
        return compute_txid(self.height, self.assets, self.participants, self.cells, self.genesis)

    @property
    def endorsed(self) -> bool:
        return all(c.endorsed for _, _, c in self.cell_items())

    def to_bytes(self) -> bytes:
        flags = (1 if self.genesis else 0) | (2 if self.approval is not None else 0)
        out = bytearray(_TX_MAGIC)
        out += struct.pack("<QBH", self.height, flags, len(self.assets))
        for a in self.assets:
            enc = a.encode()
            out += struct.pack("<H", len(enc)) + enc
        out += struct.pack("<H", len(self.participants))
        for p in self.participants:
            out += struct.pack("<I", p)
        out += self.txid
        for row in self.cells:
            for c in row:
                cb = c.to_bytes()
                out += struct.pack("<I", len(cb)) + cb
        if self.approval is not None:
            out += self.approval.to_bytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Transaction":
        r = _Reader(data)
        if r.take(len(_TX_MAGIC)) != _TX_MAGIC:
            raise DecodeError("not a transaction")
        height, flags, n_assets = struct.unpack("<QBH", r.take(11))
        assets = []
        for _ in range(n_assets):
            (n,) = struct.unpack("<H", r.take(2))
            try:
                assets.append(r.take(n).decode())
            except UnicodeDecodeError:
                raise DecodeError("asset id is not utf-8") from None
        (n_parts,) = struct.unpack("<H", r.take(2))
        parts = tuple(struct.unpack("<I", r.take(4))[0] for _ in range(n_parts))
        txid = r.take(32)
        cells = []
        for _ in assets:
            row = []
            for _ in parts:
                (n,) = struct.unpack("<I", r.take(4))
                row.append(Cell.from_bytes(r.take(n)))
            cells.append(tuple(row))
        approval = SchnorrProof.from_bytes(r.take(SchnorrProof.SIZE)) if flags & 2 else None
        r.done()
        return cls(height, tuple(assets), parts, tuple(cells), txid, bool(flags & 1), approval)

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "genesis": self.genesis,
            "assets": list(self.assets),
            "participants": list(self.participants),
            "txid": self.txid.hex(),
            "cells": [[c.to_json() for c in row] for row in self.cells],
            "approval": self.approval.to_bytes().hex() if self.approval else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Transaction":
        try:
            approval = obj.get("approval")
            return cls(
                int(obj["height"]), tuple(obj["assets"]), tuple(int(p) for p in obj["participants"]),
                tuple(tuple(Cell.from_json(c) for c in row) for row in obj["cells"]),
                bytes.fromhex(obj["txid"]), bool(obj.get("genesis", False)),
                SchnorrProof.from_bytes(bytes.fromhex(approval)) if approval else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"malformed transaction: {exc}") from None


# -- spending -------------------------------------------------------------

@dataclass
class Draft:
    """Pre-endorsement transaction together with the spender's openings."""
    tx: Transaction
    openings: dict  # (asset, participant) -> (v, r)
    sender: int | None = None

    def values(self) -> dict:
        out: dict = {}
        for (a, p), (v, _) in self.openings.items():
            out.setdefault(a, {})[p] = v
        return out


def _normalize_values(view, values: Mapping[str, Mapping[int, int]], participants, genesis: bool):
    bits = view.config.range_bits
    if participants is None:
        participants = range(view.n_participants)
    participants = tuple(sorted(set(participants)))
    if not participants:
        raise ValueError("transaction needs at least one participant")
    for p in participants:
        if not 0 <= p < view.n_participants:
            raise ValueError(f"unknown participant {p}")
    known = list(view.asset_ids)
    for a in values:
        if a not in known:
            raise ValueError(f"unknown asset {a!r}")
    assets = tuple(a for a in known if a in values)
    if not assets:
        raise ValueError("transaction needs at least one asset")
    table = {}
    for a in assets:
        row = dict(values[a])
        extra = set(row) - set(participants)
        if extra:
            raise ValueError(f"values for participants outside the transaction: {sorted(extra)}")
        for p in participants:
            v = int(row.get(p, 0))
            if abs(v) >= 2**bits:
                raise ValueError(f"amount {v} exceeds 2^{bits}")
            if genesis and v < 0:
                raise ValueError("initial values must be non-negative")
            table[(a, p)] = v
        if not genesis and sum(table[(a, p)] for p in participants) != 0:
            raise ValueError(f"amounts for asset {a!r} do not sum to zero")
    return assets, participants, table


def _build(view, height, assets, participants, openings, genesis, rng) -> Transaction:
    ck = view.ck
    issuer_tokens = view.config.issuer_tokens
    pre = []
    for a in assets:
        ipk = view.issuer_pk(a) if issuer_tokens else None
        row = []
        for p in participants:
            v, r = openings[(a, p)]
            row.append(Cell(ck.commit(v, r), view.pk(p) * r,
                            issuer_tk=ipk * r if ipk is not None else None))
        pre.append(row)
    txid = compute_txid(height, assets, participants, pre, genesis)
    cells = []
    for a, row in zip(assets, pre):
        ipk = view.issuer_pk(a) if issuer_tokens else None
        out = []
        for p, c in zip(participants, row):
            v, r = openings[(a, p)]
            cons = prove_consistency(ck, c.cm, c.tk, view.pk(p), v, r,
                                     cell_transcript(txid, a, p, "consistency"), rng)
            icons = None
            if ipk is not None:
                icons = prove_consistency(ck, c.cm, c.issuer_tk, ipk, v, r,
                                          cell_transcript(txid, a, p, "issuer-consistency"), rng)
            out.append(replace(c, consistency=cons, issuer_consistency=icons))
        cells.append(tuple(out))
    return Transaction(height, assets, participants, tuple(cells), txid, genesis)


def build_transaction(view, values: Mapping[str, Mapping[int, int]], rng: Rng | None = None, *,
                      participants: Iterable[int] | None = None, genesis: bool = False,
                      sender: int | None = None) -> Draft:
    """Commit to ``values[asset][participant]`` for the next ledger row.

    Blinding factors of every asset form an additive sharing of zero, the last
    participant taking minus the sum of the others.  Genesis rows use
    independent blinding and are exempt from the zero-sum rule.
    """
    rng = default_rng(rng)
    if genesis and view.height != 0:
        raise ValueError("genesis must be the first row")
    assets, participants, table = _normalize_values(view, values, participants, genesis)
    openings = {}
    for a in assets:
        acc = 0
        for i, p in enumerate(participants):
            if genesis or i < len(participants) - 1:
                r = rng.nonzero_scalar()
                acc += r
            else:
                r = (-acc) % L
            openings[(a, p)] = (table[(a, p)], r)
    tx = _build(view, view.height, assets, participants, openings, genesis, rng)
    return Draft(tx, openings, sender)


def exclude_and_rebalance(view, draft: Draft, excluded: Iterable[int], rng: Rng | None = None) -> Draft:
    """Drop ``excluded`` participants; the sender absorbs their blinding.

    Only sound when the dropped cells commit to zero; otherwise the balance
    check of the resulting row fails.
    """
    excluded = set(excluded)
    if not excluded:
        return draft
    if draft.sender is None:
        raise ValueError("draft has no sender to absorb the blinding")
    if draft.sender in excluded:
        raise ValueError("the sender cannot exclude itself")
    tx = draft.tx
    unknown = excluded - set(tx.participants)
    if unknown:
        raise ValueError(f"participants {sorted(unknown)} are not in the transaction")
    remaining = tuple(p for p in tx.participants if p not in excluded)
    openings = {}
    for a in tx.assets:
        absorbed = sum(draft.openings[(a, p)][1] for p in excluded)
        for p in remaining:
            v, r = draft.openings[(a, p)]
            if p == draft.sender:
                r = (r + absorbed) % L
            openings[(a, p)] = (v, r)
    rebuilt = _build(view, tx.height, tx.assets, remaining, openings, tx.genesis, default_rng(rng))
    return Draft(rebuilt, openings, draft.sender)


def approval_transcript(txid: bytes) -> Transcript:
    return Transcript(b"padl/approval").append(b"txid", txid)


# -- endorsement ----------------------------------------------------------

@dataclass(frozen=True)
class PolicyContext:
    asset: str
    participant: int
    txid: bytes
    cm: Point
    pk: Point
    initiated: bool
    consented: bool = False


Policy = Callable[[int, PolicyContext], bool]


def default_policy(v: int, ctx: PolicyContext) -> bool:
    """Accept incoming amounts; accept outgoing ones only on own transactions."""
    return v >= 0 or ctx.initiated


def consent_policy(v: int, ctx: PolicyContext) -> bool:
    """Default policy plus amounts the owner agreed to in advance."""
    return default_policy(v, ctx) or ctx.consented


@dataclass(frozen=True)
class CellEndorsement:
    cm_c: Point
    tk_c: Point
    consistency_c: ConsistencyProof
    equivalence: EquivalenceProof
    asset_proof: AssetProof


@dataclass(frozen=True)
class Endorsement:
    participant: int
    txid: bytes
    parts: Mapping[str, CellEndorsement]

    def to_json(self) -> dict:
        return {
            "participant": self.participant,
            "txid": self.txid.hex(),
            "parts": {a: {"cm_c": e.cm_c.hex(), "tk_c": e.tk_c.hex(),
                          "consistency_c": e.consistency_c.to_bytes().hex(),
                          "equivalence": e.equivalence.to_bytes().hex(),
                          "asset_proof": e.asset_proof.to_bytes().hex()}
                      for a, e in self.parts.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Endorsement":
        try:
            parts = {}
            for a, e in obj["parts"].items():
                parts[a] = CellEndorsement(
                    Point.decode(bytes.fromhex(e["cm_c"])), Point.decode(bytes.fromhex(e["tk_c"])),
                    ConsistencyProof.from_bytes(bytes.fromhex(e["consistency_c"])),
                    EquivalenceProof.from_bytes(bytes.fromhex(e["equivalence"])),
                    AssetProof.from_bytes(bytes.fromhex(e["asset_proof"])),
                )
            return cls(int(obj["participant"]), bytes.fromhex(obj["txid"]), parts)
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"malformed endorsement: {exc}") from None


@dataclass(frozen=True)
class Refusal:
    participant: int
    asset: str | None
    reason: str  # "policy" | "balance" | "extraction" | "stale"

    def to_json(self) -> dict:
        return {"participant": self.participant, "asset": self.asset, "reason": self.reason}

    @classmethod
    def from_json(cls, obj: dict) -> "Refusal":
        return cls(int(obj["participant"]), obj.get("asset"), str(obj["reason"]))


def finalize(tx: Transaction, endorsements: Mapping[int, Endorsement]) -> Transaction:
    """Merge endorsements into the cells of ``tx``."""
    cells = []
    for a, row in zip(tx.assets, tx.cells):
        out = []
        for p, c in zip(tx.participants, row):
            en = endorsements.get(p)
            if en is None or en.txid != tx.txid or a not in en.parts:
                raise ValueError(f"missing endorsement for participant {p} asset {a!r}")
            e = en.parts[a]
            out.append(replace(c, cm_c=e.cm_c, tk_c=e.tk_c, consistency_c=e.consistency_c,
                               equivalence=e.equivalence, asset_proof=e.asset_proof))
        cells.append(tuple(out))
    return replace(tx, cells=tuple(cells))


class Wallet:
    """One participant's keys, private openings and endorsement logic.

    ``store`` maps ``(txid, asset)`` to ``(v, r')`` for every cell this wallet
    endorsed; liquidity audits need the complementary blinding ``r'``.
    """

    def __init__(self, ck: CommitKey, index: int, keypair: KeyPair | None = None, *,
                 policy: Policy = default_policy, rng: Rng | None = None,
                 name: str | None = None, max_magnitude: int = DEFAULT_MAX_MAGNITUDE):
        self.ck = ck
        self.index = index
        self.rng = default_rng(rng)
        self.keypair = keypair or keygen(ck, self.rng)
        self.policy = policy
        self.name = name or f"p{index}"
        self.max_magnitude = max_magnitude
        self.store: dict[tuple[bytes, str], tuple[int, int]] = {}
        self.initiated: set[bytes] = set()
        self.consents: list[tuple[str, int]] = []
        self.balances: dict[str, int] = {}
        self.row_values: dict[tuple[int, str], int] = {}
        self._synced = 0
        self._lock = threading.RLock()
        self._sk_inv = inverse(self.keypair.sk)
        self._audit_balances: dict[tuple[int, str], int] = {}

    @property
    def pk(self) -> Point:
        return self.keypair.pk

    def consent(self, asset: str, amount: int) -> None:
        """Pre-approve one outgoing ``amount`` of ``asset`` (used once)."""
        with self._lock:
            self.consents.append((asset, amount))

    def extract(self, cm: Point, tk: Point) -> int:
        return solve_small_dlog(cm - tk * self._sk_inv, self.ck.g, self.max_magnitude)

    def sync(self, view) -> None:
        """Catch up on rows appended since the last call."""
        with self._lock:
            rows = view.rows
            for t in range(self._synced, len(rows)):
                tx = rows[t]
                if self.index not in tx.participants:
                    continue
                for a in tx.assets:
                    stored = self.store.get((tx.txid, a))
                    cell = tx.cell(a, self.index)
                    v = stored[0] if stored is not None else self.extract(cell.cm, cell.tk)
                    self.row_values[(t, a)] = v
                    self.balances[a] = self.balances.get(a, 0) + v
            self._synced = len(rows)

    def balance(self, asset: str) -> int:
        return self.balances.get(asset, 0)

    # spender side ----------------------------------------------------

    def draft(self, view, values, *, participants=None) -> Draft:
        d = build_transaction(view, values, self.rng, participants=participants, sender=self.index)
        with self._lock:
            self.initiated.add(d.tx.txid)
        return d

    def rebalance(self, view, draft: Draft, excluded) -> Draft:
        d = exclude_and_rebalance(view, draft, excluded, self.rng)
        with self._lock:
            self.initiated.add(d.tx.txid)
        return d

    def spend(self, view, values, broadcast, *, participants=None,
              drop_unresponsive: bool = True) -> Transaction:
        """Build, collect endorsements (or approval) and return the final row."""
        draft = self.draft(view, values, participants=participants)
        if view.config.reduced:
            return replace(draft.tx, approval=broadcast.approve(draft.tx))
        while True:
            responses = broadcast.collect(draft.tx, draft.tx.participants)
            refusals = [r for resp in responses.values() if isinstance(resp, list) for r in resp]
            if refusals:
                raise EndorsementRefused(refusals)
            missing = [p for p in draft.tx.participants if responses.get(p) is None]
            if not missing:
                return finalize(draft.tx, responses)
            dropped_value = any(draft.openings[(a, p)][0] for a in draft.tx.assets for p in missing)
            if not drop_unresponsive or dropped_value or self.index in missing:
                raise EndorsementTimeout(missing)
            draft = self.rebalance(view, draft, missing)

    # endorser side ---------------------------------------------------

    def endorse(self, tx: Transaction, view) -> Endorsement | list[Refusal]:
        with self._lock:
            self.sync(view)
            if tx.height != view.height:
                return [Refusal(self.index, None, "stale")]
            if self.index not in tx.participants:
                return []
            cfg = view.config
            parts: dict[str, CellEndorsement] = {}
            refusals: list[Refusal] = []
            planned = []
            consents = list(self.consents)
            for a in tx.assets:
                cell = tx.cell(a, self.index)
                try:
                    v = self.extract(cell.cm, cell.tk)
                except ExtractionError:
                    refusals.append(Refusal(self.index, a, "extraction"))
                    continue
                consented = (a, v) in consents
                ctx = PolicyContext(a, self.index, tx.txid, cell.cm, self.pk,
                                    tx.txid in self.initiated, consented)
                if not self.policy(v, ctx):
                    refusals.append(Refusal(self.index, a, "policy"))
                    continue
                if consented and not ctx.initiated and v < 0:
                    consents.remove((a, v))
                new_balance = v if tx.genesis else self.balance(a) + v
                if not 0 <= new_balance < 2**cfg.range_bits:
                    refusals.append(Refusal(self.index, a, "balance"))
                    continue
                planned.append((a, cell, v, new_balance))
            if refusals:
                return refusals
            for a, cell, v, new_balance in planned:
                parts[a] = self._endorse_cell(tx, view, a, cell, v, new_balance)
            self.consents = consents
            return Endorsement(self.index, tx.txid, parts)

    def _endorse_cell(self, tx, view, a, cell, v, new_balance) -> CellEndorsement:
        ck, cfg, p, sk = self.ck, view.config, self.index, self.keypair.sk
        r_c = self.rng.nonzero_scalar()
        cm_c = ck.commit(v, r_c)
        tk_c = self.pk * r_c
        cons_c = prove_consistency(ck, cm_c, tk_c, self.pk, v, r_c,
                                   cell_transcript(tx.txid, a, p, "complementary-consistency"), self.rng)
        eq = prove_equivalence(ck, cell.cm, cm_c, cell.tk, tk_c, sk,
                               cell_transcript(tx.txid, a, p, "equivalence"), self.rng)
        hist_cm, hist_tk = ([], []) if tx.genesis else _history(view, p, a)
        ap = prove_asset(ck, hist_cm, hist_tk, cell.cm, cell.tk, new_balance, sk, self.pk,
                         cfg.range_bits, cell_transcript(tx.txid, a, p, "asset"), self.rng,
                         cfg.backend)
        self.store[(tx.txid, a)] = (v, r_c)
        return CellEndorsement(cm_c, tk_c, cons_c, eq, ap)

    # settlement approver ----------------------------------------------

    def audit_sync(self, view) -> None:
        """Track every account's balance through issuer tokens (approver only)."""
        with self._lock:
            rows = view.rows
            start = getattr(self, "_audit_synced", 0)
            for t in range(start, len(rows)):
                for a, p, c in rows[t].cell_items():
                    v = self._extract_issuer(c)
                    self._audit_balances[(p, a)] = self._audit_balances.get((p, a), 0) + v
            self._audit_synced = len(rows)

    def _extract_issuer(self, cell: Cell) -> int:
        if cell.issuer_tk is None:
            raise ExtractionError("cell carries no issuer token")
        return self.extract(cell.cm, cell.issuer_tk)

    def approve(self, tx: Transaction, view) -> SchnorrProof:
        """Check plaintext balances through issuer tokens, then sign the txid."""
        cfg = view.config
        if not cfg.reduced or cfg.approver is None:
            raise ApprovalRefused("ledger has no designated approver")
        if view.pk(cfg.approver) != self.pk:
            raise ApprovalRefused("only the designated approver can approve")
        with self._lock:
            self.audit_sync(view)
            if tx.height != view.height:
                raise ApprovalRefused("stale transaction")
            if tx.recompute_txid() != tx.txid:
                raise ApprovalRefused("txid mismatch")
            for a in tx.assets:
                if view.issuer_pk(a) != self.pk:
                    raise ApprovalRefused(f"approver is not the issuer of {a!r}")
                total = 0
                for p in tx.participants:
                    c = tx.cell(a, p)
                    if not verify_consistency(self.ck, c.cm, c.issuer_tk, self.pk, c.issuer_consistency,
                                              cell_transcript(tx.txid, a, p, "issuer-consistency")):
                        raise ApprovalRefused(f"bad issuer token for participant {p} asset {a!r}")
                    try:
                        v = self._extract_issuer(c)
                    except ExtractionError:
                        raise ApprovalRefused(f"cannot read participant {p} asset {a!r}") from None
                    total += v
                    after = v if tx.genesis else self._audit_balances.get((p, a), 0) + v
                    if not 0 <= after < 2**cfg.range_bits:
                        raise ApprovalRefused(f"participant {p} would hold {after} of {a!r}")
                if not tx.genesis and total != 0:
                    raise ApprovalRefused(f"asset {a!r} does not balance")
            return prove_dlog(self.ck.h, self.pk, self.keypair.sk, approval_transcript(tx.txid), self.rng)


def _history(view, p: int, a: str):
    cm, tk = view.sums(p, a)
    return [cm], [tk]


class LocalBroadcast:
    """In-process fan-out of a pre-endorsement transaction to wallets.

    Wallets in ``offline`` never answer; with ``timeout`` set, slow ones are
    reported as missing.
    """

    def __init__(self, wallets: Mapping[int, Wallet], view, *, timeout: float | None = None,
                 offline: Iterable[int] = (), max_workers: int | None = None):
        self.wallets = dict(wallets)
        self.view = view
        self.timeout = timeout
        self.offline = set(offline)
        self.max_workers = max_workers

    def collect(self, tx: Transaction, participants: Sequence[int]):
        targets = [p for p in participants if p in self.wallets and p not in self.offline]
        out: dict[int, object] = {p: None for p in participants}
        if not targets:
            return out
        pool = ThreadPoolExecutor(max_workers=self.max_workers or len(targets))
        try:
            futures = {pool.submit(self.wallets[p].endorse, tx, self.view): p for p in targets}
            done, _ = wait(futures, timeout=self.timeout)
            for f in done:
                out[futures[f]] = f.result()
        finally:
            pool.shutdown(wait=self.timeout is None, cancel_futures=True)
        return out

    def approve(self, tx: Transaction) -> SchnorrProof:
        approver = self.view.config.approver
        if approver is None or approver not in self.wallets:
            raise ApprovalRefused("approver is not reachable")
        return self.wallets[approver].approve(tx, self.view)


# -- verification ---------------------------------------------------------

@dataclass
class VerifyReport:
    failures: list = field(default_factory=list)  # (asset, participant, check)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, asset, participant, check) -> None:
        self.failures.append((asset, participant, check))

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> list:
        return [{"asset": a, "participant": p, "check": c} for a, p, c in self.failures]


def verify_transaction(view, tx: Transaction) -> VerifyReport:
    """Check ``tx`` as the next row of ``view``; every failure is reported."""
    rep = VerifyReport()
    ck, cfg = view.ck, view.config
    if tx.height != view.height:
        rep.fail(None, None, "height")
        return rep
    if tx.genesis != (tx.height == 0):
        rep.fail(None, None, "genesis-flag")
        return rep
    if not _header_ok(view, tx, rep):
        return rep
    if tx.recompute_txid() != tx.txid:
        rep.fail(None, None, "txid")

    if not tx.genesis:
        for a, row in zip(tx.assets, tx.cells):
            if not point_sum(c.cm for c in row).is_identity:
                rep.fail(a, None, "balance")

    range_items, range_owners = [], []
    for a, p, c in tx.cell_items():
        pk = view.pk(p)
        if c.consistency is None or not verify_consistency(
                ck, c.cm, c.tk, pk, c.consistency, cell_transcript(tx.txid, a, p, "consistency")):
            rep.fail(a, p, "consistency")
        if cfg.issuer_tokens:
            ipk = view.issuer_pk(a)
            if c.issuer_tk is None or c.issuer_consistency is None or not verify_consistency(
                    ck, c.cm, c.issuer_tk, ipk, c.issuer_consistency,
                    cell_transcript(tx.txid, a, p, "issuer-consistency")):
                rep.fail(a, p, "issuer-consistency")
        elif c.issuer_tk is not None or c.issuer_consistency is not None:
            rep.fail(a, p, "unexpected-issuer-token")
        if cfg.reduced:
            if c.endorsed or c.cm_c is not None:
                rep.fail(a, p, "unexpected-endorsement")
            continue
        if not c.endorsed or None in (c.cm_c, c.tk_c, c.consistency_c, c.equivalence):
            rep.fail(a, p, "endorsement-missing")
            continue
        if not verify_consistency(ck, c.cm_c, c.tk_c, pk, c.consistency_c,
                                  cell_transcript(tx.txid, a, p, "complementary-consistency")):
            rep.fail(a, p, "complementary-consistency")
        if not verify_equivalence(ck, c.cm, c.cm_c, c.tk, c.tk_c, c.equivalence,
                                  cell_transcript(tx.txid, a, p, "equivalence")):
            rep.fail(a, p, "equivalence")
        hist_cm, hist_tk = ([], []) if tx.genesis else _history(view, p, a)
        t = cell_transcript(tx.txid, a, p, "asset")
        if not verify_asset(ck, hist_cm, hist_tk, c.cm, c.tk, pk, c.asset_proof,
                            cfg.range_bits, t, check_range=False):
            rep.fail(a, p, "asset")
        elif c.asset_proof.range.backend != cfg.backend:
            rep.fail(a, p, "range-backend")
        else:
            range_items.append(range_item(c.asset_proof, cfg.range_bits, t))
            range_owners.append((a, p, c))

    if range_items and not verify_range_batch(ck, range_items):
        # locate the offending cells; transcripts are single-use, so rebuild them
        for a, p, c in range_owners:
            t = cell_transcript(tx.txid, a, p, "asset")
            if not verify_range_batch(ck, [range_item(c.asset_proof, cfg.range_bits, t)]):
                rep.fail(a, p, "range")
        if rep.ok:
            rep.fail(None, None, "range")

    if cfg.reduced:
        apk = view.pk(cfg.approver)
        if tx.approval is None or not verify_dlog(ck.h, apk, tx.approval, approval_transcript(tx.txid)):
            rep.fail(None, cfg.approver, "approval")
    elif tx.approval is not None:
        rep.fail(None, None, "unexpected-approval")
    return rep


def _header_ok(view, tx: Transaction, rep: VerifyReport) -> bool:
    ok = True
    known = list(view.asset_ids)
    if not tx.assets or len(set(tx.assets)) != len(tx.assets) or any(a not in known for a in tx.assets):
        rep.fail(None, None, "assets")
        ok = False
    elif [known.index(a) for a in tx.assets] != sorted(known.index(a) for a in tx.assets):
        rep.fail(None, None, "asset-order")
        ok = False
    parts = list(tx.participants)
    if not parts or parts != sorted(set(parts)) or parts[-1] >= view.n_participants:
        rep.fail(None, None, "participants")
        ok = False
    if tx.genesis and (len(tx.assets) != len(known) or len(parts) != view.n_participants):
        rep.fail(None, None, "genesis-shape")
        ok = False
    if len(tx.cells) != len(tx.assets) or any(len(r) != len(tx.participants) for r in tx.cells):
        rep.fail(None, None, "shape")
        ok = False
    return ok
