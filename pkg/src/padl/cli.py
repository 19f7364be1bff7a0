"""``padl`` command line.

Ledgers live in a binary log (``--ledger``); each participant's keys and
private openings live in ``<keys>/<name>.json``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import audit as _audit
from .group import CommitKey, KeyPair, Rng, keygen, setup
from .ledger import Asset, Ledger, LedgerConfig, LedgerError, Participant, init_ledger
from .pact import (
    Endorsement, EndorsementRefused, LocalBroadcast, PactError, Refusal, Transaction, Wallet,
    consent_policy, finalize,
)
from .rangeproof import RangeError

log = logging.getLogger("padl")


class CliError(Exception):
    pass


# -- wallet files ---------------------------------------------------------

def wallet_to_json(w: Wallet) -> dict:
    return {
        "name": w.name, "index": w.index, "sk": hex(w.keypair.sk), "pk": w.pk.hex(),
        "store": [[t.hex(), a, v, hex(r)] for (t, a), (v, r) in sorted(w.store.items())],
        "initiated": sorted(t.hex() for t in w.initiated),
        "consents": [[a, v] for a, v in w.consents],
    }


def wallet_from_json(ck: CommitKey, obj: dict, rng: Rng | None = None) -> Wallet:
    sk = int(obj["sk"], 16)
    kp = KeyPair(sk, ck.h * sk)
    if kp.pk.hex() != obj["pk"]:
        raise CliError(f"key file for {obj['name']} does not match this ledger's commitment key")
    w = Wallet(ck, int(obj["index"]), kp, name=obj["name"], policy=consent_policy, rng=rng)
    w.store = {(bytes.fromhex(t), a): (int(v), int(r, 16)) for t, a, v, r in obj.get("store", [])}
    w.initiated = {bytes.fromhex(t) for t in obj.get("initiated", [])}
    w.consents = [(a, int(v)) for a, v in obj.get("consents", [])]
    return w


def _keys_dir(args) -> Path:
    return Path(args.keys) if args.keys else Path(str(args.ledger) + ".keys")


def _rng(args, label: str) -> Rng:
    return Rng(f"{args.seed}/{label}") if args.seed is not None else Rng()


def _load_ledger(args) -> Ledger:
    if not args.ledger:
        raise CliError("--ledger is required")
    return Ledger.load(args.ledger, verify=not getattr(args, "trust", False))


def _load_wallets(args, ledger: Ledger, names=None) -> dict[int, Wallet]:
    d = _keys_dir(args)
    out = {}
    for i, p in enumerate(ledger.participants):
        if names is not None and p.name not in names:
            continue
        f = d / f"{p.name}.json"
        if f.exists():
            out[i] = wallet_from_json(ledger.ck, json.loads(f.read_text()), _rng(args, f"wallet/{p.name}"))
    return out


def _save_wallets(args, wallets) -> None:
    d = _keys_dir(args)
    d.mkdir(parents=True, exist_ok=True)
    for w in wallets.values():
        (d / f"{w.name}.json").write_text(json.dumps(wallet_to_json(w), indent=1))


def _config(args, base: dict | None = None) -> LedgerConfig:
    obj = dict(base or {})
    if args.config:
        obj.update(json.loads(Path(args.config).read_text()))
    return LedgerConfig.from_json(obj)


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _parse_amounts(ledger: Ledger, items) -> dict:
    """``ASSET:NAME:V`` items into ``{asset: {index: v}}``."""
    values: dict = {}
    for it in items:
        try:
            a, name, v = it.rsplit(":", 2)
            values.setdefault(a, {})[ledger.index_of(name)] = int(v)
        except (ValueError, KeyError, LedgerError) as exc:
            raise CliError(f"bad amount {it!r}: {exc}") from None
    return values


def _add_consents(wallets, ledger, items) -> None:
    for it in items or ():
        try:
            name, a, v = it.split(":")
            wallets[ledger.index_of(name)].consent(a, int(v))
        except (ValueError, KeyError, LedgerError) as exc:
            raise CliError(f"bad consent {it!r}: {exc}") from None


# -- commands -------------------------------------------------------------

def cmd_init(args) -> int:
    world = json.loads(Path(args.world).read_text())
    if Path(args.ledger).exists() and not args.force:
        raise CliError(f"{args.ledger} exists (use --force to overwrite)")
    rng = _rng(args, "init")
    names = list(world["participants"])
    ck = setup([rng.child(f"setup/{n}").nonzero_scalar() for n in names])
    cfg = _config(args, world.get("config"))
    wallets = {i: Wallet(ck, i, rng=rng.child(f"wallet/{n}"), name=n, policy=consent_policy)
               for i, n in enumerate(names)}
    parts = [Participant(n, wallets[i].pk) for i, n in enumerate(names)]
    assets = [Asset(a["id"], names.index(a["issuer"])) for a in world["assets"]]
    genesis = {a: {names.index(p): int(v) for p, v in row.items()} for a, row in world.get("genesis", {}).items()}
    ledger = init_ledger(ck, parts, assets, genesis, wallets, config=cfg, rng=rng.child("genesis"))
    ledger.save(args.ledger)
    _save_wallets(args, wallets)
    _emit({"ledger": str(args.ledger), "keys": str(_keys_dir(args)), "height": ledger.height,
           "state_hash": ledger.state_hash.hex(),
           "participants": [{"name": p.name, "pk": p.pk.hex()} for p in ledger.participants]})
    return 0


def cmd_keygen(args) -> int:
    ck = _load_ledger(args).ck if args.ledger else setup([_rng(args, "setup").nonzero_scalar()])
    kp = keygen(ck, _rng(args, "keygen"))
    _emit({"sk": hex(kp.sk), "pk": kp.pk.hex(), "ck": ck.encode().hex()}, args.out)
    return 0


def cmd_spend(args) -> int:
    ledger = _load_ledger(args)
    if args.draft:
        tx = Transaction.from_json(json.loads(Path(args.draft).read_text())["tx"])
        responses = {}
        for f in args.endorsements or ():
            obj = json.loads(Path(f).read_text())
            if "refusals" in obj:
                raise EndorsementRefused([Refusal.from_json(r) for r in obj["refusals"]])
            e = Endorsement.from_json(obj)
            responses[e.participant] = e
        tx = finalize(tx, responses)
    else:
        wallets = _load_wallets(args, ledger)
        if not args.sender:
            raise CliError("--from is required")
        sender = ledger.index_of(args.sender)
        if sender not in wallets:
            raise CliError(f"no key file for {args.sender}")
        values = _parse_amounts(ledger, args.amount)
        _add_consents(wallets, ledger, args.consent)
        for w in wallets.values():
            w.sync(ledger)
        if args.draft_out:
            d = wallets[sender].draft(ledger, values)
            _save_wallets(args, wallets)
            _emit({"tx": d.tx.to_json()}, args.draft_out)
            return 0
        if args.host:
            from .client import HostClient, HttpBroadcast, Replica

            client = HostClient(args.host)
            view = Replica(client).ledger
            bc = HttpBroadcast(client, local={sender: wallets[sender]}, view=view)
            tx = wallets[sender].spend(view, values, bc)
            res = client.append(tx)
            _save_wallets(args, wallets)
            _emit(res)
            return 0
        tx = wallets[sender].spend(ledger, values, LocalBroadcast(wallets, ledger))
        _save_wallets(args, wallets)
    ledger.append(tx)
    ledger.save(args.ledger)
    _emit({"height": ledger.height, "txid": tx.txid.hex(), "state_hash": ledger.state_hash.hex(),
           "bytes": len(tx.to_bytes())})
    return 0


def cmd_endorse(args) -> int:
    ledger = _load_ledger(args)
    wallets = _load_wallets(args, ledger, {args.participant})
    if not wallets:
        raise CliError(f"no key file for {args.participant}")
    (p, w), = wallets.items()
    for it in args.consent or ():
        a, v = it.split(":")
        w.consent(a, int(v))
    tx = Transaction.from_json(json.loads(Path(args.tx).read_text())["tx"])
    resp = w.endorse(tx, ledger)
    _save_wallets(args, wallets)
    if isinstance(resp, list):
        _emit({"refusals": [r.to_json() for r in resp]}, args.out)
        return 1
    _emit(resp.to_json(), args.out)
    return 0


def cmd_verify(args) -> int:
    try:
        ledger = Ledger.load(args.ledger, verify=True)
    except (LedgerError, ValueError) as exc:
        _emit({"ok": False, "error": str(exc)})
        return 1
    if args.tx:
        tx = Transaction.from_json(json.loads(Path(args.tx).read_text()).get("tx"))
        rep = ledger.verify(tx)
        _emit({"ok": rep.ok, "failures": rep.to_json()})
        return 0 if rep.ok else 1
    _emit({"ok": True, "height": ledger.height, "state_hash": ledger.state_hash.hex()})
    return 0


def cmd_audit(args) -> int:
    ledger = _load_ledger(args)
    rng = _rng(args, f"audit/{args.kind}")
    if args.kind == "check":
        a = _audit.audit_from_json(json.loads(Path(args.audit).read_text()))
        ok = _audit.verify_audit(ledger, a)
        _emit({"type": a.to_json()["type"], "accepted": ok})
        return 0 if ok else 1
    if args.kind == "full":
        wallets = _load_wallets(args, ledger, {args.auditor})
        if not wallets:
            raise CliError(f"no key file for {args.auditor}")
        (_, w), = wallets.items()
        v = _audit.full_audit_extract(ledger, w.keypair.sk, args.row, args.asset,
                                      ledger.index_of(args.participant))
        _emit({"row": args.row, "asset": args.asset, "participant": args.participant, "value": v})
        return 0
    wallets = _load_wallets(args, ledger, {args.participant})
    if not wallets:
        raise CliError(f"no key file for {args.participant}")
    (p, w), = wallets.items()
    if args.kind == "balance":
        a = _audit.prove_balance(ledger, p, args.asset, w.keypair.sk, args.claimed, upto=args.upto, rng=rng)
    elif args.kind == "liquidity":
        a = _audit.prove_liquidity(ledger, w, args.asset, args.D, args.N, upto=args.upto, rng=rng)
    else:
        signs = tuple(int(s) for s in args.signs.split(","))
        a = _audit.prove_rate(ledger, p, args.asset, w.keypair.sk, _ints(args.txs1), _ints(args.txs2),
                              args.D, args.N, signs=signs, upto=args.upto, rng=rng)
    _emit(a.to_json(), args.out)
    return 0


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x]


def cmd_scenario(args) -> int:
    from .scenarios import load_fixture, run_scenario

    fx = load_fixture(args.name)
    cfg = None
    if args.config:
        cfg = _config(args, fx.get("config"))
    res = run_scenario(fx, seed=args.seed, config=cfg, transport=args.transport)
    if args.ledger:
        res.ledger.save(args.ledger)
    _emit(res.summary(), args.out)
    return 0 if res.ok else 1


def cmd_bench(args) -> int:
    from .bench import run_bench

    cfg = _config(args) if args.config else None
    rep = run_bench(_ints(args.participants), _ints(args.assets), args.reps, grid=args.grid,
                    seed=args.seed or 0, config=cfg, sizes=not args.no_sizes)
    print(rep.table())
    if args.json:
        Path(args.json).write_text(json.dumps(rep.to_json(), indent=2) + "\n")
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())
    return 0 if rep.scaling_ok and not rep.size_flag else 1


def cmd_security(args) -> int:
    from .security import run_anonymity_mechanics, run_integrity_battery, run_reduced_battery

    seed = int(args.seed or 0)
    full = run_integrity_battery(_config(args) if args.config else None, seed)
    reduced = run_reduced_battery(seed)
    anon = run_anonymity_mechanics(seed=seed)
    print(full.table())
    print(reduced.table())
    for k, v in anon["checks"].items():
        print(f"{k:<40} {'ok' if v else 'FAILED'}")
    if args.out:
        Path(args.out).write_text(json.dumps({"integrity": full.to_json(), "reduced": reduced.to_json(),
                                              "anonymity": anon}, indent=2) + "\n")
    return 0 if full.ok and reduced.ok and anon["ok"] else 1


def cmd_serve(args) -> int:  # pragma: no cover - blocking
    from .host import Host, serve

    ledger = Ledger.load(args.ledger) if args.ledger and Path(args.ledger).exists() else None
    path = args.ledger

    def persist(led):
        if path:
            led.save(path)

    serve(Host(ledger, timeout=args.timeout, on_append=persist), args.bind)
    return 0


def cmd_participant(args) -> int:  # pragma: no cover - blocking
    import uvicorn

    from .client import HostClient, Replica
    from .host import participant_app

    replica = Replica(HostClient(args.host))
    led = replica.ledger
    p = led.index_of(args.participant)
    wallets = _load_wallets(args, led, names={args.participant})
    if p not in wallets:
        raise CliError(f"no key file for {args.participant} in {_keys_dir(args)}")
    for it in args.consent or ():
        a, v = it.split(":")
        wallets[p].consent(a, int(v))
    addr, _, port = args.bind.rpartition(":")
    replica.client.register(p, args.url or f"http://{args.bind}")
    try:
        uvicorn.run(participant_app(wallets[p], replica), host=addr or "127.0.0.1", port=int(port),
                    log_level="warning")
    finally:
        _save_wallets(args, wallets)
    return 0


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ledger", help="ledger log path")
    common.add_argument("--seed", help="deterministic seed (default: OS entropy)")
    common.add_argument("--config", help="ledger config JSON (range_bits, backend, ...)")
    common.add_argument("--keys", help="key directory (default: <ledger>.keys)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="padl", description="private auditable multi-asset ledger")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", parents=[common], help="create a ledger and its genesis row")
    p.add_argument("world", help="JSON with participants, assets, genesis")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("keygen", parents=[common], help="generate a key pair")
    p.add_argument("--out")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("spend", parents=[common], help="build, endorse and append a transaction")
    p.add_argument("--from", dest="sender")
    p.add_argument("--amount", action="append", default=[], metavar="ASSET:NAME:V")
    p.add_argument("--consent", action="append", metavar="NAME:ASSET:V")
    p.add_argument("--draft-out", help="write the unendorsed transaction and stop")
    p.add_argument("--draft", help="finalize this draft with --endorsements")
    p.add_argument("--endorsements", nargs="*")
    p.add_argument("--host", help="go through a running host at this URL")
    p.set_defaults(func=cmd_spend)

    p = sub.add_parser("endorse", parents=[common], help="endorse a drafted transaction")
    p.add_argument("--participant", required=True)
    p.add_argument("--tx", required=True)
    p.add_argument("--consent", action="append", metavar="ASSET:V")
    p.add_argument("--out")
    p.set_defaults(func=cmd_endorse)

    p = sub.add_parser("verify", parents=[common], help="re-verify a ledger log or one transaction")
    p.add_argument("--tx")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("audit", parents=[common], help="produce or check audit proofs")
    p.add_argument("kind", choices=["balance", "liquidity", "rate", "full", "check"])
    p.add_argument("--participant")
    p.add_argument("--asset")
    p.add_argument("--claimed", type=int)
    p.add_argument("--D", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--txs1", default="")
    p.add_argument("--txs2", default="")
    p.add_argument("--signs", default="1,1")
    p.add_argument("--upto", type=int)
    p.add_argument("--auditor")
    p.add_argument("--row", type=int)
    p.add_argument("--audit", help="audit JSON to check")
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("scenario", parents=[common], help="replay a scripted ledger")
    p.add_argument("name", help="bond-market | settlement | exchange | path to fixture JSON")
    p.add_argument("--transport", choices=["local", "http"], default="local")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("bench", parents=[common], help="timing and size benchmark")
    p.add_argument("--participants", default="2,4,8,16")
    p.add_argument("--assets", default="1,2,4,8")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--grid", choices=["sweep", "full"], default="sweep")
    p.add_argument("--json")
    p.add_argument("--csv")
    p.add_argument("--no-sizes", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("security", parents=[common], help="run the tamper battery")
    p.add_argument("--out")
    p.set_defaults(func=cmd_security)

    p = sub.add_parser("serve", parents=[common], help="run the ledger host")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("participant", parents=[common], help="run one participant's endorsement service")
    p.add_argument("--participant", required=True)
    p.add_argument("--host", required=True, help="ledger host URL")
    p.add_argument("--bind", default="127.0.0.1:8001")
    p.add_argument("--url", help="callback URL the host should use (default: http://<bind>)")
    p.add_argument("--consent", action="append", metavar="ASSET:V")
    p.set_defaults(func=cmd_participant)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, LedgerError, PactError, RangeError, _audit.AuditError, ValueError, OSError) as exc:
        print(f"padl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
