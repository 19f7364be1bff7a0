"""Append-only ledger: registries, verified appends, state hash and persistence."""
from __future__ import annotations

import hashlib
import json
import os
import struct
import threading
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .group import IDENTITY, CommitKey, DecodeError, Point, Rng, default_rng
from .pact import (
    Draft, Transaction, VerifyReport, build_transaction, finalize, verify_transaction,
    DEFAULT_MAX_MAGNITUDE,
)
from .rangeproof import BACKENDS

STATE_TAG = b"padl/state/v1"
_LOG_MAGIC = b"PADLLOG1"


class LedgerError(Exception):
    pass


class ConfigError(LedgerError):
    pass


class StaleTransaction(LedgerError):
    def __init__(self, tx_height: int, ledger_height: int):
        self.tx_height, self.ledger_height = tx_height, ledger_height
        super().__init__(f"transaction built for row {tx_height}, ledger is at row {ledger_height}")


class VerificationFailed(LedgerError):
    def __init__(self, report: VerifyReport):
        self.report = report
        shown = "; ".join(f"{a}/{p}: {c}" for a, p, c in report.failures[:8])
        super().__init__(f"transaction rejected ({shown})")


@dataclass(frozen=True)
class LedgerConfig:
    range_bits: int = 32
    backend: str = "bulletproof"
    issuer_tokens: bool = False
    reduced: bool = False
    approver: int | None = None
    max_magnitude: int = DEFAULT_MAX_MAGNITUDE

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown range-proof backend {self.backend!r}")
        if not 1 <= self.range_bits <= 64:
            raise ConfigError("range_bits must lie in [1, 64]")
        if self.backend == "bulletproof" and self.range_bits & (self.range_bits - 1):
            raise ConfigError("the bulletproof backend needs a power-of-two range_bits")
        if self.reduced and (not self.issuer_tokens or self.approver is None):
            raise ConfigError("reduced cells need issuer tokens and an approver")

    @classmethod
    def from_json(cls, obj: Mapping) -> "LedgerConfig":
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class Participant:
    name: str
    pk: Point


@dataclass(frozen=True)
class Asset:
    id: str
    issuer: int


def _state_step(prev: bytes, tx: Transaction) -> bytes:
    h = hashlib.sha512()
    h.update(STATE_TAG)
    h.update(prev)
    h.update(tx.txid)
    for _, _, c in tx.cell_items():
        h.update(c.cm.encode())
        h.update(c.tk.encode())
    return h.digest()[:32]


def state_chain(anchor: bytes, rows: Sequence[Transaction]) -> list[bytes]:
    out, s = [], anchor
    for tx in rows:
        s = _state_step(s, tx)
        out.append(s)
    return out


class Ledger:
    """The ledger table.  Appends are serialized; readers see immutable rows."""

    def __init__(self, ck: CommitKey, participants: Sequence[Participant], assets: Sequence[Asset],
                 config: LedgerConfig | None = None):
        if not participants:
            raise LedgerError("ledger needs at least one participant")
        if not assets:
            raise LedgerError("ledger needs at least one asset")
        pks = [p.pk for p in participants]
        if len(set(pks)) != len(pks):
            raise LedgerError("duplicate participant key")
        if len({p.name for p in participants}) != len(participants):
            raise LedgerError("duplicate participant name")
        if any(pk.is_identity for pk in pks):
            raise LedgerError("identity is not a valid account key")
        ids = [a.id for a in assets]
        if len(set(ids)) != len(ids):
            raise LedgerError("duplicate asset id")
        for a in assets:
            if a.issuer is None or not 0 <= a.issuer < len(participants):
                raise LedgerError(f"asset {a.id!r} has no valid issuer")
        self.ck = ck
        self.participants = tuple(participants)
        self.assets = tuple(assets)
        self._config = config or LedgerConfig()
        if self._config.approver is not None and not 0 <= self._config.approver < len(participants):
            raise ConfigError("approver is not a participant")
        self._rows: list[Transaction] = []
        self._states: list[bytes] = []
        self._sums: dict[tuple[int, str], tuple[Point, Point]] = {}
        self._lock = threading.Lock()
        self.anchor = self._anchor()

    # -- view interface used by pact ----------------------------------

    @property
    def config(self) -> LedgerConfig:
        return self._config

    @config.setter
    def config(self, value: LedgerConfig) -> None:
        if self._rows:
            raise ConfigError("ledger configuration is fixed once genesis is appended")
        self._config = value
        self.anchor = self._anchor()

    @property
    def rows(self) -> tuple[Transaction, ...]:
        return tuple(self._rows)

    @property
    def height(self) -> int:
        return len(self._rows)

    @property
    def n_participants(self) -> int:
        return len(self.participants)

    @property
    def asset_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.assets)

    def pk(self, p: int) -> Point:
        return self.participants[p].pk

    def issuer_pk(self, asset: str) -> Point:
        return self.participants[self.asset(asset).issuer].pk

    def asset(self, asset_id: str) -> Asset:
        for a in self.assets:
            if a.id == asset_id:
                return a
        raise KeyError(asset_id)

    def index_of(self, name: str) -> int:
        for i, p in enumerate(self.participants):
            if p.name == name:
                return i
        raise KeyError(name)

    def sums(self, p: int, asset: str) -> tuple[Point, Point]:
        """Running ``(sum cm, sum tk)`` over the account's cells for ``asset``."""
        return self._sums.get((p, asset), (IDENTITY, IDENTITY))

    @property
    def state_hash(self) -> bytes:
        return self._states[-1] if self._states else self.anchor

    @property
    def state_hashes(self) -> tuple[bytes, ...]:
        return tuple(self._states)

    def _anchor(self) -> bytes:
        h = hashlib.sha512(STATE_TAG + b"/anchor")
        h.update(self.ck.encode())
        for p in self.participants:
            h.update(len(p.name.encode()).to_bytes(4, "little") + p.name.encode() + p.pk.encode())
        for a in self.assets:
            h.update(len(a.id.encode()).to_bytes(4, "little") + a.id.encode() + a.issuer.to_bytes(4, "little"))
        h.update(json.dumps(asdict(self._config), sort_keys=True).encode())
        return h.digest()[:32]

    # -- appends --------------------------------------------------------

    def verify(self, tx: Transaction) -> VerifyReport:
        return verify_transaction(self, tx)

    def append(self, tx: Transaction) -> bytes:
        """Verify ``tx`` against the current state and append it.

        Raises :class:`StaleTransaction` if the ledger moved on since ``tx``
        was built and :class:`VerificationFailed` on any failed check; the
        ledger is unchanged in both cases.
        """
        with self._lock:
            if tx.height != self.height:
                raise StaleTransaction(tx.height, self.height)
            report = verify_transaction(self, tx)
            if not report.ok:
                raise VerificationFailed(report)
            return self._apply(tx)

    def _apply(self, tx: Transaction) -> bytes:
        for a, p, c in tx.cell_items():
            cm, tk = self.sums(p, a)
            self._sums[(p, a)] = (cm + c.cm, tk + c.tk)
        self._rows.append(tx)
        self._states.append(_state_step(self.state_hash, tx))
        return self._states[-1]

    def recompute_state(self, rows: Sequence[Transaction] | None = None) -> bytes:
        chain = state_chain(self.anchor, self._rows if rows is None else rows)
        return chain[-1] if chain else self.anchor

    # -- persistence ----------------------------------------------------

    def header_json(self) -> dict:
        return {
            "ck": self.ck.encode().hex(),
            "participants": [{"name": p.name, "pk": p.pk.hex()} for p in self.participants],
            "assets": [{"id": a.id, "issuer": a.issuer} for a in self.assets],
            "config": asdict(self._config),
        }

    def to_json(self) -> dict:
        out = self.header_json()
        out["rows"] = [tx.to_json() for tx in self._rows]
        out["state_hash"] = self.state_hash.hex()
        return out

    @classmethod
    def from_header(cls, obj: Mapping) -> "Ledger":
        try:
            ck = CommitKey.decode(bytes.fromhex(obj["ck"]))
            parts = [Participant(p["name"], Point.decode(bytes.fromhex(p["pk"]))) for p in obj["participants"]]
            assets = [Asset(a["id"], int(a["issuer"])) for a in obj["assets"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"malformed ledger header: {exc}") from None
        return cls(ck, parts, assets, LedgerConfig.from_json(obj.get("config", {})))

    @classmethod
    def from_json(cls, obj: Mapping, *, verify: bool = True) -> "Ledger":
        led = cls.from_header(obj)
        for row in obj.get("rows", []):
            led.load_row(Transaction.from_json(row), verify=verify)
        expected = obj.get("state_hash")
        if expected is not None and bytes.fromhex(expected) != led.state_hash:
            raise LedgerError("state hash mismatch after import")
        return led

    def load_row(self, tx: Transaction, *, verify: bool = True) -> bytes:
        if verify:
            return self.append(tx)
        with self._lock:
            if tx.height != self.height:
                raise StaleTransaction(tx.height, self.height)
            return self._apply(tx)

    def log_bytes(self) -> bytes:
        """Binary log: header then length-prefixed transactions."""
        head = json.dumps(self.header_json(), sort_keys=True).encode()
        out = bytearray(_LOG_MAGIC + struct.pack("<I", len(head)) + head)
        for tx in self._rows:
            raw = tx.to_bytes()
            out += struct.pack("<I", len(raw)) + raw
        return bytes(out)

    def save(self, path: str | os.PathLike) -> None:
        """Write the binary log and a JSON index sidecar (``<path>.idx``)."""
        path = Path(path)
        data = self.log_bytes()
        offsets, pos = [], len(_LOG_MAGIC) + 4 + struct.unpack("<I", data[8:12])[0]
        for tx in self._rows:
            n = struct.unpack("<I", data[pos:pos + 4])[0]
            offsets.append({"height": tx.height, "offset": pos, "length": n + 4, "txid": tx.txid.hex()})
            pos += 4 + n
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        idx = {"rows": offsets, "state_hashes": [s.hex() for s in self._states]}
        Path(str(path) + ".idx").write_text(json.dumps(idx, indent=1))

    @classmethod
    def from_log_bytes(cls, data: bytes, *, verify: bool = True) -> "Ledger":
        if data[:8] != _LOG_MAGIC or len(data) < 12:
            raise DecodeError("not a ledger log")
        n = struct.unpack("<I", data[8:12])[0]
        try:
            led = cls.from_header(json.loads(data[12:12 + n]))
        except json.JSONDecodeError as exc:
            raise DecodeError(str(exc)) from None
        pos = 12 + n
        while pos < len(data):
            if pos + 4 > len(data):
                raise DecodeError("truncated log")
            m = struct.unpack("<I", data[pos:pos + 4])[0]
            if pos + 4 + m > len(data):
                raise DecodeError("truncated log")
            led.load_row(Transaction.from_bytes(data[pos + 4:pos + 4 + m]), verify=verify)
            pos += 4 + m
        return led

    @classmethod
    def load(cls, path: str | os.PathLike, *, verify: bool = True) -> "Ledger":
        led = cls.from_log_bytes(Path(path).read_bytes(), verify=verify)
        idx = Path(str(path) + ".idx")
        if idx.exists():
            recorded = json.loads(idx.read_text()).get("state_hashes", [])
            if recorded and bytes.fromhex(recorded[-1]) != led.state_hash:
                raise LedgerError("state hash in index does not match the log")
        return led


def genesis_draft(ledger: Ledger, values: Mapping[str, Mapping[int, int]], rng: Rng | None = None) -> Draft:
    """Minting row: every participant gets a cell for every asset."""
    full = {a: dict(values.get(a, {})) for a in ledger.asset_ids}
    return build_transaction(ledger, full, rng, genesis=True)


def init_ledger(ck: CommitKey, participants: Sequence[Participant], assets: Sequence[Asset],
                initial: Mapping[str, Mapping[int, int]], wallets: Mapping, *,
                config: LedgerConfig | None = None, rng: Rng | None = None,
                broadcast=None) -> Ledger:
    """Create a ledger and append its genesis row.

    ``wallets`` maps participant index to :class:`padl.pact.Wallet`; they
    endorse their minted cells (or, for reduced cells, the approver signs).
    """
    from .pact import EndorsementRefused, LocalBroadcast

    ledger = Ledger(ck, participants, assets, config)
    draft = genesis_draft(ledger, initial, default_rng(rng))
    bc = broadcast or LocalBroadcast(wallets, ledger)
    if ledger.config.reduced:
        tx = replace(draft.tx, approval=bc.approve(draft.tx))
    else:
        responses = bc.collect(draft.tx, draft.tx.participants)
        refusals = [r for v in responses.values() if isinstance(v, list) for r in v]
        if refusals:
            raise EndorsementRefused(refusals)
        missing = [p for p, v in responses.items() if v is None]
        if missing:
            raise LedgerError(f"no genesis endorsement from {missing}")
        tx = finalize(draft.tx, responses)
    ledger.append(tx)
    return ledger
