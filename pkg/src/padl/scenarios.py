"""Scripted ledgers loaded from JSON fixtures.

A fixture names participants and assets, the genesis allocation, a list of
transactions (amounts keyed by participant name) and optional audits with
their expected verdicts.  ``run_scenario`` replays it against a fresh ledger
and a plaintext shadow ledger.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping

from . import audit as _audit
from .group import Rng, setup
from .ledger import Asset, Ledger, LedgerConfig, Participant, genesis_draft, init_ledger
from .pact import EndorsementRefused, LocalBroadcast, Wallet, consent_policy, finalize
from .rangeproof import RangeError
from .security import ShadowLedger

BUILTIN = ("bond-market", "settlement", "exchange")


def load_fixture(name_or_path: str | Path) -> dict:
    """Load a builtin fixture by name, or any fixture file by path."""
    if str(name_or_path) in BUILTIN:
        text = resources.files("padl.fixtures").joinpath(f"{name_or_path}.json").read_text()
    else:
        text = Path(name_or_path).read_text()
    return json.loads(text)


def _by_index(names: list[str], table: Mapping[str, Mapping[str, int]]) -> dict:
    return {a: {names.index(p): int(v) for p, v in row.items()} for a, row in table.items()}


@dataclass
class AuditOutcome:
    spec: dict
    accepted: bool
    expected: bool
    size: int = 0

    @property
    def ok(self) -> bool:
        return self.accepted == self.expected


@dataclass
class ScenarioResult:
    name: str
    ledger: Ledger
    wallets: dict
    shadow: ShadowLedger
    tx_seconds: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)
    expected_mismatches: list = field(default_factory=list)
    audits: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return (not self.mismatches and not self.expected_mismatches
                and all(a.ok for a in self.audits))

    def balances(self) -> dict:
        out = {}
        for p, w in self.wallets.items():
            out[w.name] = {a: w.balance(a) for a in self.ledger.asset_ids}
        return out

    def summary(self) -> dict:
        return {
            "scenario": self.name,
            "rows": self.ledger.height,
            "state_hash": self.ledger.state_hash.hex(),
            "seconds": round(self.seconds, 3),
            "seconds_per_tx": [round(s, 4) for s in self.tx_seconds],
            "balances": self.balances(),
            "shadow_mismatches": self.mismatches,
            "expected_mismatches": self.expected_mismatches,
            "audits": [{**a.spec, "accepted": a.accepted, "size": a.size} for a in self.audits],
            "ok": self.ok,
        }


def build_world(fx: dict, *, seed=None, config: LedgerConfig | None = None):
    """Commit key, wallets and participant/asset tables for a fixture."""
    rng = Rng(str(seed if seed is not None else fx.get("seed", fx["name"])))
    names = list(fx["participants"])
    ck = setup([rng.child(f"setup/{n}").nonzero_scalar() for n in names])
    cfg = config or LedgerConfig.from_json(fx.get("config", {}))
    wallets = {i: Wallet(ck, i, rng=rng.child(f"wallet/{n}"), name=n, policy=consent_policy,
                         max_magnitude=cfg.max_magnitude)
               for i, n in enumerate(names)}
    parts = [Participant(n, wallets[i].pk) for i, n in enumerate(names)]
    assets = [Asset(a["id"], names.index(a["issuer"])) for a in fx["assets"]]
    return rng, ck, cfg, wallets, parts, assets


class ScenarioError(Exception):
    def __init__(self, step: int, cause: Exception):
        self.step, self.cause = step, cause
        super().__init__(f"step {step} failed: {cause}")


def _http_genesis(net, genesis, rng):
    draft = genesis_draft(net.replica.ledger, genesis, rng)
    if net.replica.ledger.config.reduced:
        tx = replace(draft.tx, approval=net.broadcast.approve(draft.tx))
    else:
        responses = net.broadcast.collect(draft.tx, draft.tx.participants)
        refusals = [r for v in responses.values() if isinstance(v, list) for r in v]
        if refusals or any(v is None for v in responses.values()):
            raise EndorsementRefused(refusals)
        tx = finalize(draft.tx, responses)
    net.client.append(tx)


def run_scenario(fx: dict | str, *, seed=None, config: LedgerConfig | None = None,
                 run_audits: bool = True, skip_rows: tuple[int, ...] = (),
                 transport: str = "local") -> ScenarioResult:
    """Replay a fixture.

    ``skip_rows`` drops scripted transactions (1-based rows).  With
    ``transport="http"`` every step goes through an in-process host and
    participant callback services instead of direct calls.
    """
    if not isinstance(fx, dict):
        fx = load_fixture(fx)
    if transport not in ("local", "http"):
        raise ValueError(f"unknown transport {transport!r}")
    t0 = time.perf_counter()
    rng, ck, cfg, wallets, parts, assets = build_world(fx, seed=seed, config=config)
    names = list(fx["participants"])
    genesis = _by_index(names, fx["genesis"])
    if transport == "http":
        from .client import InProcessNetwork

        net = InProcessNetwork(Ledger(ck, parts, assets, cfg).header_json(), wallets)
        try:
            _http_genesis(net, genesis, rng.child("genesis"))
        except Exception as exc:
            raise ScenarioError(0, exc) from exc
        ledger, bc = net.ledger, net.broadcast
    else:
        try:
            ledger = init_ledger(ck, parts, assets, genesis, wallets, config=cfg, rng=rng.child("genesis"))
        except Exception as exc:
            raise ScenarioError(0, exc) from exc
        bc = LocalBroadcast(wallets, ledger)
    shadow = ShadowLedger()
    shadow.apply({a: dict(genesis.get(a, {})) for a in ledger.asset_ids})
    result = ScenarioResult(fx["name"], ledger, wallets, shadow)
    for k, step in enumerate(fx["transactions"], start=1):
        if k in skip_rows:
            continue
        s0 = time.perf_counter()
        values = _by_index(names, step["values"])
        for who, amounts in step.get("consent", {}).items():
            for a, v in amounts.items():
                wallets[names.index(who)].consent(a, int(v))
        sender = wallets[names.index(step["sender"])]
        try:
            if transport == "http":
                tx = sender.spend(net.ledger, values, bc)
                net.client.append(tx)
            else:
                tx = sender.spend(ledger, values, bc)
                ledger.append(tx)
        except Exception as exc:
            raise ScenarioError(k, exc) from exc
        shadow.apply(values)
        result.tx_seconds.append(time.perf_counter() - s0)
    if transport == "http":
        result.ledger = ledger = net.ledger
    result.mismatches = [(wallets[p].name, a, got, want)
                         for p, a, got, want in shadow.mismatches(ledger, wallets)]
    if not skip_rows:
        for who, row in fx.get("expected_balances", {}).items():
            w = wallets[names.index(who)]
            for a, want in row.items():
                if w.balance(a) != want:
                    result.expected_mismatches.append((who, a, w.balance(a), want))
    if run_audits:
        for spec in fx.get("audits", []):
            result.audits.append(_run_audit(ledger, wallets, names, spec, rng.child(json.dumps(spec))))
    result.seconds = time.perf_counter() - t0
    return result


def _run_audit(ledger: Ledger, wallets, names, spec: dict, rng: Rng) -> AuditOutcome:
    kind = spec["type"]
    if kind == "full":
        auditor = wallets[names.index(spec["auditor"])]
        try:
            v = _audit.full_audit_extract(ledger, auditor.keypair.sk, spec["row"], spec["asset"],
                                          names.index(spec["participant"]))
        except _audit.AuditError:
            return AuditOutcome(spec, False, spec.get("expect", True))
        return AuditOutcome(spec, v == spec["value"], spec.get("expect", True))
    p = names.index(spec["participant"])
    w = wallets[p]
    expect = bool(spec.get("expect", True))
    if kind == "balance":
        a = _audit.prove_balance(ledger, p, spec["asset"], w.keypair.sk, spec["claimed"], rng=rng)
    elif kind == "rate":
        a = _audit.prove_rate(ledger, p, spec["asset"], w.keypair.sk, spec["txs1"], spec["txs2"],
                              spec["D"], spec["N"], signs=tuple(spec.get("signs", (1, 1))), rng=rng)
    elif kind == "liquidity":
        try:
            a = _audit.prove_liquidity(ledger, w, spec["asset"], spec["D"], spec["N"], rng=rng)
        except RangeError:
            return AuditOutcome(spec, False, expect)
    else:
        raise ValueError(f"unknown audit type {kind!r}")
    # verify from the serialized form, as a remote auditor would
    a = _audit.audit_from_json(json.loads(json.dumps(a.to_json())))
    return AuditOutcome(spec, _audit.verify_audit(ledger, a), expect, a.size())
