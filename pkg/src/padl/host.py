"""HTTP ledger host and participant callback service.

The host is a single sequencer: it stores one ledger, relays pre-endorsement
transactions to participant callbacks, collects their responses and appends
finalized rows one at a time.  Bodies are JSON; ``/append`` also takes the
binary transaction encoding with ``Content-Type: application/octet-stream``.
"""
from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor, wait

import httpx
from fastapi import Body, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.concurrency import run_in_threadpool

from . import audit as _audit
from .group import DecodeError  # noqa: F401  (a ValueError)
from .ledger import Ledger, LedgerError, StaleTransaction, VerificationFailed
from .pact import ApprovalRefused, Endorsement, Refusal, Transaction, Wallet

BINARY = "application/octet-stream"


def _error(status: int, kind: str, detail, **extra) -> JSONResponse:
    return JSONResponse({"error": kind, "detail": detail, **extra}, status_code=status)


async def _tx_from_request(request: Request) -> Transaction:
    raw = await request.body()
    if request.headers.get("content-type", "").startswith(BINARY):
        return Transaction.from_bytes(raw)
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"invalid JSON: {exc}") from None
    return Transaction.from_json(obj.get("tx", obj) if isinstance(obj, dict) else obj)


class Host:
    """Mutable host state shared by the route handlers."""

    def __init__(self, ledger: Ledger | None = None, *, http: httpx.Client | None = None,
                 timeout: float = 30.0, on_append=None):
        self.ledger = ledger
        self.http = http or httpx.Client()
        self.timeout = timeout
        self.callbacks: dict[int, str] = {}
        self.pending: dict[bytes, Transaction] = {}
        self.responses: dict[bytes, dict[int, dict]] = {}
        self.on_append = on_append
        self._lock = threading.Lock()

    def require_ledger(self) -> Ledger:
        if self.ledger is None:
            raise HTTPException(404, {"error": "no-ledger", "detail": "create a ledger first"})
        return self.ledger

    def record(self, txid: bytes, p: int, resp: dict) -> None:
        with self._lock:
            self.responses.setdefault(txid, {})[p] = resp

    def fan_out(self, tx: Transaction, participants, timeout: float) -> dict:
        """POST ``tx`` to each registered callback; unanswered ones map to None."""
        body = {"tx": tx.to_json()}
        targets = {p: self.callbacks[p] for p in participants if p in self.callbacks}
        out: dict[int, dict | None] = {p: self.responses.get(tx.txid, {}).get(p) for p in participants}
        if not targets:
            return out

        def call(p, url):
            r = self.http.post(f"{url}/endorse", json=body, timeout=timeout)
            r.raise_for_status()
            return r.json()

        pool = ThreadPoolExecutor(max_workers=len(targets))
        try:
            futs = {pool.submit(call, p, url): p for p, url in targets.items()}
            done, _ = wait(futs, timeout=timeout)
            for f in done:
                p = futs[f]
                try:
                    resp = f.result()
                except (httpx.HTTPError, ValueError):
                    continue
                self.record(tx.txid, p, resp)
                out[p] = resp
        finally:
            pool.shutdown(wait=False, cancel_futures=True)
        return out


def create_app(host: Host | None = None) -> FastAPI:
    host = host or Host()
    app = FastAPI(title="padl ledger host")
    app.state.host = host

    @app.exception_handler(ValueError)
    async def _decode(request, exc):
        return _error(400, "malformed", str(exc))

    @app.exception_handler(KeyError)
    async def _missing(request, exc):
        return _error(400, "malformed", f"missing field {exc}")

    @app.post("/ledger", status_code=201)
    def create_ledger(header: dict = Body(...)):
        if host.ledger is not None:
            return _error(409, "exists", "ledger already created")
        try:
            host.ledger = Ledger.from_header(header)
        except LedgerError as exc:
            return _error(422, "invalid-ledger", str(exc))
        return {"height": 0, "anchor": host.ledger.anchor.hex(), "state_hash": host.ledger.state_hash.hex()}

    @app.get("/state")
    def state(since: int = 0):
        led = host.require_ledger()
        rows = led.rows
        return {"header": led.header_json(), "height": len(rows), "state_hash": led.state_hash.hex(),
                "since": since, "rows": [tx.to_json() for tx in rows[since:]]}

    @app.post("/participants/{p}/callback")
    def register(p: int, body: dict = Body(...)):
        led = host.require_ledger()
        if not 0 <= p < led.n_participants:
            return _error(404, "unknown-participant", p)
        host.callbacks[p] = str(body["url"]).rstrip("/")
        return {"participant": p, "url": host.callbacks[p]}

    @app.post("/broadcast")
    async def broadcast(request: Request):
        led = host.require_ledger()
        tx = await _tx_from_request(request)
        if tx.height != led.height:
            return _error(409, "stale", f"transaction built for row {tx.height}, ledger at {led.height}",
                          ledger_height=led.height)
        if tx.recompute_txid() != tx.txid:
            return _error(422, "txid", "txid does not match the transaction contents")
        host.pending[tx.txid] = tx
        try:
            timeout = float(request.query_params.get("timeout", host.timeout))
        except ValueError:
            return _error(400, "malformed", "timeout must be a number")
        out = await run_in_threadpool(host.fan_out, tx, tx.participants, timeout)
        return {"txid": tx.txid.hex(), "responses": {str(p): r for p, r in out.items()}}

    @app.get("/pending/{txid}")
    def pending(txid: str):
        tx = host.pending.get(bytes.fromhex(txid))
        if tx is None:
            return _error(404, "unknown-tx", txid)
        return {"tx": tx.to_json()}

    @app.post("/endorse/{txid}")
    def endorse(txid: str, body: dict = Body(...)):
        key = bytes.fromhex(txid)
        if key not in host.pending:
            return _error(404, "unknown-tx", txid)
        if "refusals" in body:
            refusals = [Refusal.from_json(r) for r in body["refusals"]]
            ps = {r.participant for r in refusals}
            if len(ps) != 1:
                return _error(400, "malformed", "refusals must come from one participant")
            p = ps.pop()
        else:
            e = Endorsement.from_json(body)
            if e.txid != key:
                return _error(422, "txid", "endorsement is for another transaction")
            p = e.participant
        host.record(key, p, body)
        return {"participant": p, "recorded": True}

    @app.get("/endorsements/{txid}")
    def endorsements(txid: str):
        key = bytes.fromhex(txid)
        if key not in host.pending:
            return _error(404, "unknown-tx", txid)
        return {"txid": txid, "responses": {str(p): r for p, r in host.responses.get(key, {}).items()}}

    @app.post("/approve")
    async def approve(request: Request):
        led = host.require_ledger()
        tx = await _tx_from_request(request)
        approver = led.config.approver
        if approver is None or approver not in host.callbacks:
            return _error(503, "no-approver", "approver is not registered")
        r = await run_in_threadpool(host.http.post, f"{host.callbacks[approver]}/approve",
                                    json={"tx": tx.to_json()}, timeout=host.timeout)
        return JSONResponse(r.json(), status_code=r.status_code)

    @app.post("/append")
    async def append(request: Request):
        led = host.require_ledger()
        tx = await _tx_from_request(request)
        try:
            state_hash = await run_in_threadpool(led.append, tx)
        except StaleTransaction as exc:
            return _error(409, "stale", str(exc), ledger_height=exc.ledger_height)
        except VerificationFailed as exc:
            return _error(422, "rejected", str(exc), failures=exc.report.to_json())
        host.pending.pop(tx.txid, None)
        host.responses.pop(tx.txid, None)
        if host.on_append is not None:
            host.on_append(led)
        return {"height": led.height, "txid": tx.txid.hex(), "state_hash": state_hash.hex()}

    @app.post("/audit/{kind}")
    def audit(kind: str, body: dict = Body(...)):
        led = host.require_ledger()
        if kind not in _audit.AUDIT_TYPES:
            return _error(404, "unknown-audit", kind)
        obj = dict(body)
        if obj.setdefault("type", kind) != kind:
            return _error(400, "malformed", "audit type does not match the endpoint")
        a = _audit.audit_from_json(obj)
        return {"type": kind, "accepted": _audit.verify_audit(led, a), "size": a.size()}

    return app


def participant_app(wallet: Wallet, view) -> FastAPI:
    """Callback service for one wallet.

    ``view`` is any object with a ``refresh()`` returning an up-to-date ledger
    replica (see :class:`padl.client.Replica`), or a ledger itself.
    """
    app = FastAPI(title=f"padl participant {wallet.name}")

    def current():
        return view.refresh() if hasattr(view, "refresh") else view

    @app.post("/endorse")
    def endorse(body: dict = Body(...)):
        tx = Transaction.from_json(body["tx"])
        resp = wallet.endorse(tx, current())
        if isinstance(resp, list):
            return {"refusals": [r.to_json() for r in resp]}
        return resp.to_json()

    @app.post("/approve")
    def approve(body: dict = Body(...)):
        tx = Transaction.from_json(body["tx"])
        try:
            proof = wallet.approve(tx, current())
        except ApprovalRefused as exc:
            return _error(403, "approval-refused", str(exc))
        return {"approval": proof.to_bytes().hex()}

    @app.post("/consent")
    def consent(body: dict = Body(...)):
        wallet.consent(str(body["asset"]), int(body["amount"]))
        return {"ok": True}

    return app


def serve(host: Host, bind: str = "127.0.0.1:8000") -> None:  # pragma: no cover - blocking
    import uvicorn

    addr, _, port = bind.rpartition(":")
    uvicorn.run(create_app(host), host=addr or "127.0.0.1", port=int(port), log_level="info")
