"""Adversarial harness: plaintext shadow ledger, game oracles, tamper battery.

Everything here is deterministic under a seed so that any accepted tamper
can be replayed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

from .group import IDENTITY, L, Point, Rng, keygen, scalar_to_bytes, setup
from .ledger import Asset, Ledger, LedgerConfig, LedgerError, Participant, init_ledger
from .pact import (
    CellEndorsement, Endorsement, LocalBroadcast,
    PactError, PolicyContext, Transaction, Wallet, _build, build_transaction, consent_policy,
    default_policy, exclude_and_rebalance, finalize,
)
from .rangeproof import RangeProof
from .rangeproof.asset import prove_asset
from .sigma import prove_consistency, prove_dlog, prove_equivalence
from .transcript import cell_transcript
from . import pact as _pact


class OracleError(Exception):
    pass


# -- shadow ledger --------------------------------------------------------

class ShadowLedger:
    """Plaintext mirror of every accepted row."""

    def __init__(self):
        self.balances: dict[tuple[int, str], int] = {}
        self.rows: list[dict] = []

    def apply(self, values: Mapping[str, Mapping[int, int]]) -> None:
        self.rows.append({a: dict(r) for a, r in values.items()})
        for a, row in values.items():
            for p, v in row.items():
                self.balances[(p, a)] = self.balances.get((p, a), 0) + v

    def balance(self, p: int, asset: str) -> int:
        return self.balances.get((p, asset), 0)

    def mismatches(self, ledger: Ledger, wallets: Mapping[int, Wallet]) -> list:
        """``(participant, asset, extracted, shadow)`` for every disagreement."""
        out = []
        for p, w in wallets.items():
            w.sync(ledger)
            for a in ledger.asset_ids:
                got, want = w.balance(a), self.balance(p, a)
                if got != want:
                    out.append((p, a, got, want))
        return out


# -- oracles --------------------------------------------------------------

@dataclass
class OracleState:
    L_T: Ledger | None = None
    L_PK: list = field(default_factory=list)
    L_ACC: dict = field(default_factory=dict)   # pk bytes -> Wallet
    L_C: set = field(default_factory=set)       # corrupted pk bytes
    L_CTX: set = field(default_factory=set)     # challenge txids


BOTTOM = None


class Oracles:
    """Game oracles over one ledger.

    Accounts are registered with :meth:`add_acc` before :meth:`start` mints
    the genesis row; the registry is fixed afterwards.
    """

    def __init__(self, assets: Iterable[str] = ("X", "Y"), *, config: LedgerConfig | None = None,
                 seed: int | bytes = 0):
        self.rng = Rng(seed)
        self.ck = setup([self.rng.nonzero_scalar()])
        self.asset_ids = tuple(assets)
        self.config = config or LedgerConfig()
        self.state = OracleState()
        self.shadow = ShadowLedger()
        self.wallets: dict[int, Wallet] = {}
        self.corrupt_enabled = True

    @property
    def ledger(self) -> Ledger:
        if self.state.L_T is None:
            raise OracleError("ledger not started")
        return self.state.L_T

    def add_acc(self) -> Point:
        if self.state.L_T is not None:
            raise OracleError("the participant registry is fixed once the ledger has started")
        i = len(self.wallets)
        w = Wallet(self.ck, i, rng=self.rng.child(f"acc{i}"), policy=default_policy, name=f"acc{i}")
        self.wallets[i] = w
        self.state.L_PK.append(w.pk)
        self.state.L_ACC[w.pk.encode()] = w
        return w.pk

    def start(self, initial: Mapping[str, Mapping[int, int]]) -> Ledger:
        if not self.wallets:
            raise OracleError("no accounts")
        parts = [Participant(w.name, w.pk) for w in self.wallets.values()]
        assets = [Asset(a, i % len(parts)) for i, a in enumerate(self.asset_ids)]
        self.state.L_T = init_ledger(self.ck, parts, assets, initial, self.wallets,
                                     config=self.config, rng=self.rng.child("genesis"))
        self.shadow.apply(initial)
        return self.state.L_T

    def index(self, pk: Point) -> int:
        for i, w in self.wallets.items():
            if w.pk == pk:
                return i
        raise OracleError("unknown public key")

    def _extract_row(self, tx: Transaction) -> dict:
        out: dict = {}
        for a, p, c in tx.cell_items():
            out.setdefault(a, {})[p] = self.wallets[p].extract(c.cm, c.tk)
        return out

    def post_tx(self, tx: Transaction) -> int:
        if tx.txid in self.state.L_CTX:
            return 0
        try:
            self.ledger.append(tx)
        except LedgerError:
            return 0
        self.shadow.apply(self._extract_row(tx))
        return 1

    def _sender(self, values) -> int:
        for a in self.ledger.asset_ids:
            for p, v in sorted(values.get(a, {}).items()):
                if v < 0:
                    return p
        return 0

    def _spend(self, values, sender: int | None):
        sender = self._sender(values) if sender is None else sender
        bc = LocalBroadcast(self.wallets, self.ledger)
        return self.wallets[sender].spend(self.ledger, values, bc)

    def spend(self, values, sender: int | None = None):
        """Run an honest spend and post it; ``None`` (bottom) on any failure."""
        try:
            tx = self._spend(values, sender)
        except (PactError, ValueError):
            return BOTTOM
        return tx if self.post_tx(tx) else BOTTOM

    def corrupt(self, pk: Point) -> int:
        if not self.corrupt_enabled:
            raise OracleError("corruption is disabled after the challenge")
        w = self.state.L_ACC.get(pk.encode())
        if w is None:
            raise OracleError("unknown public key")
        self.state.L_C.add(pk.encode())
        return w.keypair.sk

    def policy(self, p: int, predicate: Callable) -> None:
        if p not in self.wallets:
            raise OracleError(f"unknown participant {p}")
        self.wallets[p].policy = predicate

    def latest(self):
        return tuple(self.state.L_PK), self.ledger.rows

    # anonymity challenge ------------------------------------------------

    def _entries(self, values):
        return {(a, p) for a, row in values.items() for p in row}

    def challenge(self, v0, v1, b: int, sender: tuple[int, int] = (None, None)):
        """Spend ``v_b`` unless a trivial-distinguisher rule applies (returns None)."""
        corrupted = {self.index(Point(pk)) for pk in self.state.L_C}
        e0, e1 = self._entries(v0), self._entries(v1)
        for a, p in e0 | e1:
            if p in corrupted and v0.get(a, {}).get(p) != v1.get(a, {}).get(p):
                return BOTTOM
        if e0 != e1:
            return BOTTOM
        for k, values in enumerate((v0, v1)):
            snd = sender[k] if sender[k] is not None else self._sender(values)
            for a, row in values.items():
                for p, v in row.items():
                    ctx = PolicyContext(a, p, b"", IDENTITY, self.wallets[p].pk, p == snd)
                    if not self.wallets[p].policy(v, ctx):
                        return BOTTOM
        try:
            tx = self._spend(v1 if b else v0, sender[b])
        except (PactError, ValueError):
            return BOTTOM
        self.state.L_CTX.add(tx.txid)
        self.corrupt_enabled = False
        return tx


# -- tamper battery -------------------------------------------------------

def _flip(data: bytes, i: int) -> bytes:
    i %= len(data)
    return data[:i] + bytes([data[i] ^ 1]) + data[i + 1:]


def _set_cell(tx: Transaction, asset: str, p: int, **changes) -> Transaction:
    ai, pi = tx.assets.index(asset), tx.participants.index(p)
    row = list(tx.cells[ai])
    row[pi] = replace(row[pi], **changes)
    cells = list(tx.cells)
    cells[ai] = tuple(row)
    return replace(tx, cells=tuple(cells))


def _retxid(tx: Transaction) -> Transaction:
    return replace(tx, txid=tx.recompute_txid())


def raw_endorsement(ck, view, tx: Transaction, asset: str, p: int, v: int, balance: int,
                    sk: int, pk: Point, rng: Rng, *, history=None) -> CellEndorsement:
    """Endorse one cell with no policy or balance checks (adversarial helper)."""
    cfg = view.config
    cell = tx.cell(asset, p)
    r_c = rng.nonzero_scalar()
    cm_c, tk_c = ck.commit(v, r_c), pk * r_c
    cons = prove_consistency(ck, cm_c, tk_c, pk, v, r_c,
                             cell_transcript(tx.txid, asset, p, "complementary-consistency"), rng)
    eq = prove_equivalence(ck, cell.cm, cm_c, cell.tk, tk_c, sk,
                           cell_transcript(tx.txid, asset, p, "equivalence"), rng)
    if history is None:
        cm_s, tk_s = view.sums(p, asset)
        history = ([cm_s], [tk_s])
    ap = prove_asset(ck, history[0], history[1], cell.cm, cell.tk, balance, sk, pk, cfg.range_bits,
                     cell_transcript(tx.txid, asset, p, "asset"), rng, cfg.backend)
    return CellEndorsement(cm_c, tk_c, cons, eq, ap)


def _with_endorsement(tx: Transaction, asset: str, p: int, e: CellEndorsement) -> Transaction:
    return _set_cell(tx, asset, p, cm_c=e.cm_c, tk_c=e.tk_c, consistency_c=e.consistency_c,
                     equivalence=e.equivalence, asset_proof=e.asset_proof)


def _endorse_all(wallets, view, tx, overrides=None, rng=None) -> Transaction:
    """Honest endorsements, except cells in ``overrides`` (asset, p) -> callable."""
    overrides = overrides or {}
    responses = {}
    for p in tx.participants:
        parts = {}
        for a in tx.assets:
            if (a, p) in overrides:
                parts[a] = overrides[(a, p)]()
                continue
            w = wallets[p]
            c = tx.cell(a, p)
            v = w.extract(c.cm, c.tk)
            bal = w.balance(a) + v
            parts[a] = raw_endorsement(w.ck, view, tx, a, p, v, bal, w.keypair.sk, w.pk, rng or w.rng)
        responses[p] = Endorsement(p, tx.txid, parts)
    return finalize(tx, responses)


@dataclass
class CaseResult:
    name: str
    category: str
    invariant: str
    rejected: bool
    detail: str

    def to_json(self) -> dict:
        return {"case": self.name, "category": self.category, "invariant": self.invariant,
                "verdict": "rejected" if self.rejected else "ACCEPTED", "detail": self.detail}


@dataclass
class BatteryReport:
    seed: int
    cases: list = field(default_factory=list)

    @property
    def accepted(self) -> list:
        return [c for c in self.cases if not c.rejected]

    @property
    def ok(self) -> bool:
        return bool(self.cases) and not self.accepted

    def categories(self) -> dict:
        out: dict = {}
        for c in self.cases:
            out.setdefault(c.category, [0, 0])
            out[c.category][0] += 1
            out[c.category][1] += 0 if c.rejected else 1
        return out

    def to_json(self) -> dict:
        return {"seed": self.seed, "total": len(self.cases), "accepted": len(self.accepted),
                "cases": [c.to_json() for c in self.cases]}

    def table(self) -> str:
        w = max(len(c.name) for c in self.cases)
        lines = [f"{'case':<{w}}  {'category':<18} {'inv':<10} verdict   detail"]
        for c in self.cases:
            verdict = "rejected" if c.rejected else "ACCEPTED"
            lines.append(f"{c.name:<{w}}  {c.category:<18} {c.invariant:<10} {verdict:<9} {c.detail}")
        lines.append(f"{len(self.cases)} cases, {len(self.accepted)} accepted, seed {self.seed}")
        return "\n".join(lines)


class _Battery:
    def __init__(self, config: LedgerConfig, seed: int):
        self.seed = seed
        self.config = config
        self.rng = Rng(("battery", seed).__repr__())
        self.ck = setup([self.rng.nonzero_scalar()])
        names = ["A", "B", "C"]
        self.wallets = {i: Wallet(self.ck, i, rng=self.rng.child(n), policy=consent_policy, name=n)
                        for i, n in enumerate(names)}
        parts = [Participant(w.name, w.pk) for w in self.wallets.values()]
        assets = [Asset("X", 0), Asset("Y", 2)]
        initial = {"X": {0: 100, 1: 20}, "Y": {0: 50, 2: 10}}
        self.ledger = init_ledger(self.ck, parts, assets, initial, self.wallets,
                                  config=config, rng=self.rng.child("genesis"))
        self.bc = LocalBroadcast(self.wallets, self.ledger)
        self.prev = self.wallets[0].spend(self.ledger, {"X": {0: -30, 1: 30}}, self.bc)
        self.ledger.append(self.prev)
        for w in self.wallets.values():
            w.sync(self.ledger)
        # honest candidate for row 2: B pays C 5 X, C pays A 4 Y
        self.wallets[2].consent("Y", -4)
        self.draft = self.wallets[1].draft(self.ledger, {"X": {1: -5, 2: 5}, "Y": {2: -4, 0: 4}})
        resp = self.bc.collect(self.draft.tx, self.draft.tx.participants)
        self.honest = finalize(self.draft.tx, resp)
        self.results: list[CaseResult] = []

    def attempt(self, name, category, invariant, make: Callable[[], Transaction | None]):
        before = (self.ledger.height, self.ledger.state_hash)
        try:
            tx = make()
        except (PactError, ValueError) as exc:
            self.results.append(CaseResult(name, category, invariant, True, f"refused: {exc}"[:90]))
            return
        if tx is None:
            self.results.append(CaseResult(name, category, invariant, True, "refused before append"))
            return
        try:
            self.ledger.append(tx)
        except LedgerError as exc:
            after = (self.ledger.height, self.ledger.state_hash)
            ok = after == before
            self.results.append(CaseResult(name, category, invariant, ok,
                                           str(exc)[:90] if ok else "ledger mutated on reject"))
            return
        self.results.append(CaseResult(name, category, invariant, False,
                                       f"appended; reproduce with seed {self.seed}"))
        raise _Accepted(name)

    def foreign(self):
        return keygen(self.ck, self.rng)


class _Accepted(Exception):
    pass


def run_integrity_battery(config: LedgerConfig | None = None, seed: int = 0) -> BatteryReport:
    """Run every catalogued tamper against a small three-party ledger."""
    config = config or LedgerConfig()
    if config.reduced:
        raise ValueError("the battery targets full cells; see run_reduced_battery")
    bt = _Battery(config, seed)
    try:
        _catalog(bt)
    except _Accepted:
        pass
    report = BatteryReport(seed, bt.results)
    assert bt.ledger.verify(bt.honest).ok, "control transaction must verify"
    return report


def _catalog(bt: _Battery) -> None:
    ck, led, W, H = bt.ck, bt.ledger, bt.wallets, bt.honest
    g, h = ck.g, ck.h
    A, B, C = 0, 1, 2
    cfg = led.config

    def mut(asset, p, **kw):
        return lambda: _set_cell(H, asset, p, **kw)

    # overspend: I1 / case (i)
    bal_b = W[B].balance("X")
    bt.attempt("overspend-by-one", "overspend", "I1/(i)",
               lambda: W[B].spend(led, {"X": {B: -(bal_b + 1), C: bal_b + 1}}, bt.bc))

    def overspend_claim(claim):
        def make():
            v = -(W[C].balance("X") + 7)
            d = build_transaction(led, {"X": {C: v, A: -v}}, bt.rng, sender=A)
            sk, pk = W[C].keypair.sk, W[C].pk
            return _endorse_all(W, led, d.tx, {("X", C): lambda: raw_endorsement(
                ck, led, d.tx, "X", C, v, claim, sk, pk, bt.rng)}, bt.rng)
        return make

    bt.attempt("overspend-claim-zero-balance", "overspend", "I1/(i)", overspend_claim(0))
    bt.attempt("overspend-claim-prior-balance", "overspend", "I1/(i)", overspend_claim(W[C].balance("X")))

    def overspend_wrap():
        # balance -1 wraps to L-1; no range proof exists, reuse one from an honest cell
        v = -(W[C].balance("X") + 1)
        d = build_transaction(led, {"X": {C: v, A: -v}}, bt.rng, sender=A)
        honest_ap = H.cell("X", C).asset_proof
        e = raw_endorsement(ck, led, d.tx, "X", C, v, 0, W[C].keypair.sk, W[C].pk, bt.rng)
        e = replace(e, asset_proof=replace(e.asset_proof, range=honest_ap.range))
        return _endorse_all(W, led, d.tx, {("X", C): lambda: e}, bt.rng)

    bt.attempt("overspend-borrowed-range-proof", "overspend", "I1/(i)", overspend_wrap)

    def overspend_history(omit_last: bool):
        def make():
            v = -(W[A].balance("X") + 5)
            d = build_transaction(led, {"X": {A: v, B: -v}}, bt.rng, sender=A)
            # history without the outgoing row 1 makes the balance look larger
            hist = [tx.cell("X", A) for tx in led.rows[: (1 if omit_last else led.height)]]
            hist_cm, hist_tk = [c.cm for c in hist], [c.tk for c in hist]
            true_before = W[A].balance("X") + (30 if omit_last else 0)
            e = raw_endorsement(ck, led, d.tx, "X", A, v, true_before + v, W[A].keypair.sk, W[A].pk,
                                bt.rng, history=(hist_cm, hist_tk))
            return _endorse_all(W, led, d.tx, {("X", A): lambda: e}, bt.rng)
        return make

    bt.attempt("overspend-omitting-outgoing-row", "history-omission", "I1/(i)", overspend_history(True))

    def rp_flip():
        ap = H.cell("X", B).asset_proof
        rp = ap.range
        return _set_cell(H, "X", B, asset_proof=replace(ap, range=RangeProof(rp.backend, rp.n, _flip(rp.data, 100))))

    bt.attempt("range-proof-byte-flip", "proof-mutation", "I1/(i)", rp_flip)

    def rp_trunc():
        ap = H.cell("X", B).asset_proof
        rp = ap.range
        return _set_cell(H, "X", B, asset_proof=replace(ap, range=RangeProof(rp.backend, rp.n, rp.data[:-32])))

    bt.attempt("range-proof-truncated", "proof-mutation", "I1/(i)", rp_trunc)

    def rp_bits():
        ap = H.cell("X", B).asset_proof
        rp = ap.range
        return _set_cell(H, "X", B, asset_proof=replace(ap, range=RangeProof(rp.backend, rp.n // 2, rp.data)))

    bt.attempt("range-proof-wrong-bit-length", "proof-mutation", "I1/(i)", rp_bits)

    # imbalance: I3 / case (iii)
    def imbalance(delta_v=0, delta_r=0):
        def make():
            openings = {}
            acc = 0
            parts = (A, B, C)
            vals = {A: -3, B: 3 + delta_v, C: 0}
            for i, p in enumerate(parts):
                r = bt.rng.nonzero_scalar() if i < 2 else (-acc + delta_r) % L
                acc += r
                openings[("X", p)] = (vals[p], r)
            tx = _build(led, led.height, ("X",), parts, openings, False, bt.rng)
            return _endorse_all(W, led, tx, rng=bt.rng)
        return make

    bt.attempt("imbalance-plus-one", "imbalance", "I3/(iii)", imbalance(delta_v=1))
    bt.attempt("imbalance-minus-one", "imbalance", "I3/(iii)", imbalance(delta_v=-1))
    bt.attempt("imbalance-blinding-not-zero-sum", "imbalance", "I3/(iii)", imbalance(delta_r=1))

    def minted_value():
        # B's cell carries an extra G and the whole row is re-proved honestly
        openings = dict(bt.draft.openings)
        v, r = openings[("X", B)]
        openings[("X", B)] = (v + 1, r)
        tx = _build(led, led.height, H.assets, H.participants, openings, False, bt.rng)
        return _endorse_all(W, led, tx, rng=bt.rng)

    bt.attempt("imbalance-mint-one-unit", "imbalance", "I3/(iii)", minted_value)
    bt.attempt("imbalance-cm-times-g", "imbalance", "I3/(iii)",
               lambda: _retxid(_set_cell(H, "X", B, cm=H.cell("X", B).cm + g)))

    def swap_assets():
        cx, cy = H.cell("X", C), H.cell("Y", C)
        tx = _set_cell(H, "X", C, cm=cy.cm, tk=cy.tk)
        return _retxid(_set_cell(tx, "Y", C, cm=cx.cm, tk=cx.tk))

    bt.attempt("imbalance-swap-cells-across-assets", "imbalance", "I3/(iii)", swap_assets)

    def drop_nonzero():
        d = exclude_and_rebalance(led, bt.draft, [C], bt.rng)
        return _endorse_all(W, led, d.tx, rng=bt.rng)

    bt.attempt("exclude-nonzero-participant", "imbalance", "I3/(iii)", drop_nonzero)

    # foreign-sk endorsement: I2 / case (ii)
    def foreign_endorsement(what):
        def make():
            kp = bt.foreign()
            c = H.cell("X", C)
            v = W[C].extract(c.cm, c.tk)
            bal = W[C].balance("X") + v
            if what == "all":
                e = raw_endorsement(ck, led, H, "X", C, v, bal, kp.sk, kp.pk, bt.rng)
                return _with_endorsement(H, "X", C, e)
            if what == "equivalence":
                r_c = bt.rng.nonzero_scalar()
                cm_c, tk_c = ck.commit(v, r_c), kp.pk * r_c
                eq = prove_equivalence(ck, c.cm, cm_c, c.tk, tk_c, kp.sk,
                                       cell_transcript(H.txid, "X", C, "equivalence"), bt.rng)
                return _set_cell(H, "X", C, equivalence=eq)
            if what == "asset":
                e = raw_endorsement(ck, led, H, "X", C, v, bal, kp.sk, W[C].pk, bt.rng)
                return _set_cell(H, "X", C, asset_proof=e.asset_proof)
            raise AssertionError(what)
        return make

    bt.attempt("foreign-sk-full-endorsement", "foreign-sk", "I2/(ii)", foreign_endorsement("all"))
    bt.attempt("foreign-sk-equivalence", "foreign-sk", "I2/(ii)", foreign_endorsement("equivalence"))
    bt.attempt("foreign-sk-asset-proof", "foreign-sk", "I2/(ii)", foreign_endorsement("asset"))

    def copy_neighbour():
        src = H.cell("X", A)
        return _set_cell(H, "X", C, cm_c=src.cm_c, tk_c=src.tk_c, consistency_c=src.consistency_c,
                         equivalence=src.equivalence, asset_proof=src.asset_proof)

    bt.attempt("endorsement-copied-from-other-account", "foreign-sk", "I2/(ii)", copy_neighbour)

    def foreign_token():
        kp = bt.foreign()
        v, r = bt.draft.openings[("X", C)]
        tk = kp.pk * r
        tx = _retxid(_set_cell(H, "X", C, tk=tk))
        cons = prove_consistency(ck, tx.cell("X", C).cm, tk, kp.pk, v, r,
                                 cell_transcript(tx.txid, "X", C, "consistency"), bt.rng)
        return _set_cell(tx, "X", C, consistency=cons)

    bt.attempt("token-under-foreign-key", "foreign-sk", "I2/(ii)", foreign_token)

    def unendorsed():
        return _set_cell(H, "X", C, cm_c=None, tk_c=None, consistency_c=None, equivalence=None, asset_proof=None)

    bt.attempt("missing-endorsement", "foreign-sk", "I2/(ii)", unendorsed)

    # single-field proof mutations
    cB = H.cell("X", B)
    bt.attempt("consistency-s1-plus-one", "proof-mutation", "I3/(iii)",
               mut("X", B, consistency=replace(cB.consistency, s1=(cB.consistency.s1 + 1) % L)))
    bt.attempt("consistency-t2-identity", "proof-mutation", "I3/(iii)",
               mut("X", B, consistency=replace(cB.consistency, t2=IDENTITY)))
    bt.attempt("complementary-consistency-s2-plus-one", "proof-mutation", "I2/(ii)",
               mut("X", B, consistency_c=replace(cB.consistency_c, s2=(cB.consistency_c.s2 + 1) % L)))
    bt.attempt("equivalence-s-plus-one", "proof-mutation", "I2/(ii)",
               mut("X", B, equivalence=replace(cB.equivalence, s=(cB.equivalence.s + 1) % L)))
    bt.attempt("equivalence-t-replaced", "proof-mutation", "I2/(ii)",
               mut("X", B, equivalence=replace(cB.equivalence, t=g)))
    ap = cB.asset_proof
    bt.attempt("asset-cm-prime-times-g", "proof-mutation", "I1/(i)",
               mut("X", B, asset_proof=replace(ap, cm_c=ap.cm_c + g)))
    bt.attempt("asset-tk-prime-times-h", "proof-mutation", "I1/(i)",
               mut("X", B, asset_proof=replace(ap, tk_c=ap.tk_c + h)))
    bt.attempt("asset-equivalence-s-plus-one", "proof-mutation", "I1/(i)",
               mut("X", B, asset_proof=replace(ap, equivalence=replace(ap.equivalence, s=(ap.equivalence.s + 1) % L))))
    bt.attempt("asset-consistency-t1-replaced", "proof-mutation", "I1/(i)",
               mut("X", B, asset_proof=replace(ap, consistency=replace(ap.consistency, t1=g))))
    bt.attempt("complementary-cm-times-g", "proof-mutation", "I2/(ii)",
               mut("X", B, cm_c=cB.cm_c + g))
    bt.attempt("token-times-h", "proof-mutation", "I3/(iii)",
               lambda: _retxid(_set_cell(H, "X", B, tk=cB.tk + h)))

    # replay
    bt.attempt("replay-appended-row", "replay", "I1/(i)", lambda: bt.prev)

    def rebase_prev():
        return _retxid(replace(bt.prev, height=led.height))

    bt.attempt("replay-row-at-new-height", "replay", "I1/(i)", rebase_prev)

    def replay_proofs():
        old = bt.prev.cell("X", B)
        return _set_cell(H, "X", B, cm_c=old.cm_c, tk_c=old.tk_c, consistency_c=old.consistency_c,
                         equivalence=old.equivalence, asset_proof=old.asset_proof)

    bt.attempt("replay-endorsement-from-previous-row", "replay", "I2/(ii)", replay_proofs)

    def cross_draft():
        # same values, fresh blinding: the old endorsements are bound to the old txid
        d = W[B].draft(led, {"X": {B: -5, C: 5}, "Y": {C: -4, A: 4}})
        cells = tuple(tuple(replace(new, cm_c=old.cm_c, tk_c=old.tk_c, consistency_c=old.consistency_c,
                                    equivalence=old.equivalence, asset_proof=old.asset_proof)
                            for new, old in zip(rn, ro)) for rn, ro in zip(d.tx.cells, H.cells))
        return replace(d.tx, cells=cells)

    bt.attempt("replay-endorsements-onto-other-draft", "replay", "I2/(ii)", cross_draft)

    # history omission seen by an endorser
    def stale_view():
        # B endorses against a replica that lacks row 1 (its +30 incoming)
        view = Ledger(ck, led.participants, led.assets, cfg)
        view.load_row(led.rows[0], verify=False)
        d = build_transaction(led, {"X": {B: -5, C: 5}}, bt.rng, sender=B)
        cm_s, tk_s = view.sums(B, "X")
        prior = W[B].row_values[(0, "X")]
        kp = W[B].keypair
        return _endorse_all(W, led, d.tx, {("X", B): lambda: raw_endorsement(
            ck, led, d.tx, "X", B, -5, prior - 5, kp.sk, kp.pk, bt.rng, history=([cm_s], [tk_s]))}, bt.rng)

    bt.attempt("endorsed-against-omitted-history", "history-omission", "I1/(i)", stale_view)

    # header and identifier tampering
    bt.attempt("txid-random", "header", "I3/(iii)", lambda: replace(H, txid=bytes(bt.rng.bytes(32))))
    bt.attempt("participants-reordered", "header", "I2/(ii)",
               lambda: _retxid(replace(H, participants=(B, A, C))))
    bt.attempt("fake-genesis-flag", "header", "I3/(iii)", lambda: _retxid(replace(H, genesis=True)))
    bt.attempt("unknown-asset-id", "header", "I3/(iii)",
               lambda: _retxid(replace(H, assets=("X", "Z"))))
    bt.attempt("stale-height", "replay", "I1/(i)", lambda: _retxid(replace(H, height=led.height - 1)))


def run_reduced_battery(seed: int = 0) -> BatteryReport:
    """Tampers specific to issuer-approved (reduced) cells."""
    rng = Rng(("reduced", seed).__repr__())
    ck = setup([rng.nonzero_scalar()])
    names = ["Settlement", "A", "B"]
    wallets = {i: Wallet(ck, i, rng=rng.child(n), name=n, policy=consent_policy) for i, n in enumerate(names)}
    parts = [Participant(w.name, w.pk) for w in wallets.values()]
    cfg = LedgerConfig(issuer_tokens=True, reduced=True, approver=0)
    led = init_ledger(ck, parts, [Asset("USD", 0)], {"USD": {2: 100}}, wallets, config=cfg,
                      rng=rng.child("genesis"))
    bc = LocalBroadcast(wallets, led)
    bt = _Battery.__new__(_Battery)
    bt.seed, bt.ledger, bt.results = seed, led, []
    honest = wallets[2].spend(led, {"USD": {2: -40, 1: 40}}, bc)

    bt.attempt("reduced-overspend", "overspend", "I1/(i)",
               lambda: wallets[2].spend(led, {"USD": {2: -101, 1: 101}}, bc))

    def forged_approval():
        sk = wallets[1].keypair.sk
        return replace(honest, approval=prove_dlog(ck.h, wallets[1].pk, sk, _pact.approval_transcript(honest.txid), rng))

    bt.attempt("reduced-non-approver-signature", "foreign-sk", "I2/(ii)", forged_approval)

    def non_approver_api():
        return replace(honest, approval=wallets[1].approve(honest, led))

    bt.attempt("reduced-non-approver-approve-call", "foreign-sk", "I2/(ii)", non_approver_api)

    def replay_approval():
        other = wallets[2].draft(led, {"USD": {2: -40, 1: 40}}).tx
        return replace(other, approval=honest.approval)

    bt.attempt("reduced-approval-replayed", "replay", "I2/(ii)", replay_approval)

    def foreign_issuer_token():
        kp = keygen(ck, rng)
        return _retxid(_set_cell(honest, "USD", 1, issuer_tk=kp.pk * 5))

    bt.attempt("reduced-issuer-token-swapped", "foreign-sk", "I3/(iii)", foreign_issuer_token)
    bt.attempt("reduced-imbalance", "imbalance", "I3/(iii)",
               lambda: _retxid(_set_cell(honest, "USD", 1, cm=honest.cell("USD", 1).cm + ck.g)))
    assert led.verify(honest).ok
    return BatteryReport(seed, bt.results)


# -- anonymity mechanics --------------------------------------------------

def _value_encodings(v: int) -> list[bytes]:
    out = [scalar_to_bytes(v % L)]
    if v:
        out.append(v.to_bytes(8, "little", signed=True))
        out.append(v.to_bytes(8, "big", signed=True))
    return out


def run_anonymity_mechanics(config: LedgerConfig | None = None, seed: int = 0) -> dict:
    """Exercise the challenge bookkeeping; advantage itself is not measured."""
    ex = Oracles(("X", "Y"), config=config, seed=("anon", seed).__repr__().encode())
    for _ in range(4):
        ex.add_acc()
    ex.start({"X": {0: 50, 1: 50, 2: 50, 3: 50}, "Y": {0: 9, 1: 9}})
    checks: dict = {}

    accept_all = lambda v, ctx: True  # noqa: E731
    ex.policy(0, accept_all)
    ex.policy(1, accept_all)
    sk3 = ex.corrupt(ex.state.L_PK[3])
    checks["corrupt-returns-matching-key"] = ex.ck.h * sk3 == ex.state.L_PK[3]

    # rule 1: values differ on a corrupted account
    checks["bottom-corrupted-value-differs"] = ex.challenge(
        {"X": {0: -5, 3: 5}}, {"X": {0: -6, 3: 6}}, 0) is BOTTOM
    # rule 2: an entry present on only one side
    checks["bottom-entry-missing-on-one-side"] = ex.challenge(
        {"X": {0: -5, 1: 5}}, {"X": {0: -5, 2: 5}}, 0) is BOTTOM
    # rule 3: a value the account policy rejects (account 2 keeps the default)
    checks["bottom-policy-rejects"] = ex.challenge(
        {"X": {2: -5, 0: 5}}, {"X": {0: -5, 2: 5}}, 0, sender=(0, 0)) is BOTTOM

    before = ex.ledger.height
    v0 = {"X": {0: -7, 1: 7, 3: 0}}
    v1 = {"X": {0: 7, 1: -7, 3: 0}}
    tx = ex.challenge(v0, v1, 1)
    checks["challenge-produced"] = tx is not BOTTOM
    checks["challenge-in-L_CTX"] = tx is not BOTTOM and tx.txid in ex.state.L_CTX
    checks["post-challenge-returns-0"] = tx is not BOTTOM and ex.post_tx(tx) == 0
    checks["ledger-unchanged"] = ex.ledger.height == before
    if tx is not BOTTOM:
        stream = b"".join(c.to_bytes() for _, _, c in tx.cell_items())
        values = {v for row in list(v0.values()) + list(v1.values()) for v in row.values()}
        checks["no-plaintext-value-in-cells"] = not any(
            enc in stream for v in values for enc in _value_encodings(v))
        pre = [replace(c, cm_c=None, tk_c=None, consistency_c=None, equivalence=None, asset_proof=None)
               for _, _, c in tx.cell_items()]
        shapes = {(len(c.to_bytes()), c.to_bytes()[64]) for c in pre}
        checks["uniform-cell-schema"] = len(shapes) == 1
        endorsed = {len(c.to_bytes()) for _, _, c in tx.cell_items()}
        checks["uniform-endorsed-cell-size"] = len(endorsed) == 1
        checks["no-sender-field"] = "sender" not in json.dumps(tx.to_json())
    try:
        ex.corrupt(ex.state.L_PK[0])
        checks["corrupt-disabled-after-challenge"] = False
    except OracleError:
        checks["corrupt-disabled-after-challenge"] = True
    return {"seed": seed, "checks": checks, "ok": all(checks.values())}
