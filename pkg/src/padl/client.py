"""Client side of the host protocol."""
from __future__ import annotations

import warnings

import httpx

from .group import DecodeError
from .ledger import Ledger, LedgerError, StaleTransaction, VerificationFailed
from .pact import ApprovalRefused, Endorsement, Refusal, Transaction, VerifyReport
from .sigma import SchnorrProof


class HostError(Exception):
    def __init__(self, status: int, body):
        self.status, self.body = status, body
        super().__init__(f"host returned {status}: {body}")


class HostClient:
    def __init__(self, base_url: str = "http://127.0.0.1:8000", *, http: httpx.Client | None = None,
                 timeout: float = 60.0):
        self.base = base_url.rstrip("/")
        self.http = http or httpx.Client(timeout=timeout)

    def _call(self, method: str, path: str, **kw):
        r = self.http.request(method, self.base + path, **kw)
        try:
            body = r.json()
        except ValueError:
            body = r.text
        if r.status_code >= 400:
            if isinstance(body, dict) and body.get("error") == "stale":
                raise StaleTransaction(-1, body.get("ledger_height", -1))
            if isinstance(body, dict) and body.get("error") == "rejected":
                failures = [(f["asset"], f["participant"], f["check"]) for f in body.get("failures", [])]
                raise VerificationFailed(VerifyReport(failures))
            raise HostError(r.status_code, body)
        return body

    def create_ledger(self, header: dict) -> dict:
        return self._call("POST", "/ledger", json=header)

    def state(self, since: int = 0) -> dict:
        return self._call("GET", "/state", params={"since": since})

    def register(self, p: int, url: str) -> dict:
        return self._call("POST", f"/participants/{p}/callback", json={"url": url})

    def broadcast(self, tx: Transaction, timeout: float | None = None) -> dict:
        params = {"timeout": timeout} if timeout is not None else None
        return self._call("POST", "/broadcast", json={"tx": tx.to_json()}, params=params)

    def pending(self, txid: bytes) -> Transaction:
        return Transaction.from_json(self._call("GET", f"/pending/{txid.hex()}")["tx"])

    def endorse(self, txid: bytes, response) -> dict:
        if isinstance(response, list):
            body = {"refusals": [r.to_json() for r in response]}
        else:
            body = response.to_json()
        return self._call("POST", f"/endorse/{txid.hex()}", json=body)

    def endorsements(self, txid: bytes) -> dict:
        return {int(p): _parse_response(r)
                for p, r in self._call("GET", f"/endorsements/{txid.hex()}")["responses"].items()}

    def approve(self, tx: Transaction) -> SchnorrProof:
        try:
            body = self._call("POST", "/approve", json={"tx": tx.to_json()})
        except HostError as exc:
            raise ApprovalRefused(str(exc.body)) from None
        return SchnorrProof.from_bytes(bytes.fromhex(body["approval"]))

    def append(self, tx: Transaction, *, binary: bool = False) -> dict:
        try:
            if binary:
                return self._call("POST", "/append", content=tx.to_bytes(),
                                  headers={"content-type": "application/octet-stream"})
            return self._call("POST", "/append", json={"tx": tx.to_json()})
        except StaleTransaction as exc:
            raise StaleTransaction(tx.height, exc.ledger_height) from None

    def audit(self, audit) -> dict:
        obj = audit.to_json()
        return self._call("POST", f"/audit/{obj['type']}", json=obj)


def _parse_response(r):
    if r is None:
        return None
    if "refusals" in r:
        return [Refusal.from_json(x) for x in r["refusals"]]
    return Endorsement.from_json(r)


class Replica:
    """Local copy of the host ledger, verifying every row it pulls."""

    def __init__(self, client: HostClient, *, verify: bool = True):
        self.client = client
        self.verify = verify
        st = client.state()
        self.ledger = Ledger.from_header(st["header"])
        self._load(st)

    def _load(self, st: dict) -> None:
        for row in st["rows"]:
            self.ledger.load_row(Transaction.from_json(row), verify=self.verify)
        if self.ledger.height == st["height"] and self.ledger.state_hash.hex() != st["state_hash"]:
            raise LedgerError("replica state hash differs from the host")

    def refresh(self) -> Ledger:
        st = self.client.state(since=self.ledger.height)
        if st["since"] != self.ledger.height:
            raise DecodeError("host ignored the since parameter")
        self._load(st)
        return self.ledger


class HttpBroadcast:
    """``collect``/``approve`` through the host, for :meth:`Wallet.spend`."""

    def __init__(self, client: HostClient, *, timeout: float | None = None, local=None, view=None):
        self.client = client
        self.timeout = timeout
        # wallets held by the caller (usually the sender) endorse in-process;
        # a separate service for the same key would not know who initiated
        self.local = dict(local or {})
        self.view = view

    def collect(self, tx: Transaction, participants):
        body = self.client.broadcast(tx, self.timeout)
        got = {int(p): _parse_response(r) for p, r in body["responses"].items()}
        out = {p: got.get(p) for p in participants}
        for p, w in self.local.items():
            if p in out:
                out[p] = w.endorse(tx, self.view)
        return out

    def approve(self, tx: Transaction) -> SchnorrProof:
        return self.client.approve(tx)


def _test_client(app, base: str):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    return TestClient(app, base_url=base)


class AppRouter(httpx.BaseTransport):
    """Routes requests to in-process ASGI apps by base URL (no sockets)."""

    def __init__(self, apps: dict | None = None):
        self.clients = {}
        for base, app in (apps or {}).items():
            self.mount(base, app)

    def mount(self, base: str, app) -> None:
        self.clients[base.rstrip("/")] = _test_client(app, base)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        url = str(request.url)
        for base, c in self.clients.items():
            if url.startswith(base):
                r = c.request(request.method, url, content=request.read(),
                              headers={k: v for k, v in request.headers.items() if k.lower() != "host"})
                return httpx.Response(r.status_code, headers=r.headers, content=r.content)
        return httpx.Response(502, json={"error": "unroutable", "detail": url})


class InProcessNetwork:
    """A host and one callback service per wallet, wired without sockets."""

    def __init__(self, header: dict, wallets: dict, *, host_url: str = "http://host",
                 timeout: float = 30.0, offline=()):
        from .host import Host, create_app, participant_app

        self.router = AppRouter()
        self.http = httpx.Client(transport=self.router)
        self.host = Host(http=self.http, timeout=timeout)
        self.router.mount(host_url, create_app(self.host))
        self.client = HostClient(host_url, http=self.http)
        self.client.create_ledger(header)
        for p, w in wallets.items():
            if p in offline:
                continue
            url = f"http://participant-{p}"
            self.router.mount(url, participant_app(w, Replica(HostClient(host_url, http=self.http))))
            self.client.register(p, url)
        self.replica = Replica(self.client)
        self.broadcast = HttpBroadcast(self.client, timeout=timeout)

    @property
    def ledger(self) -> Ledger:
        return self.replica.refresh()
