"""The exchange swap, routed through the ledger host's HTTP API.

The host and each trader's callback service are FastAPI apps mounted on an
in-process httpx transport, so the requests are real HTTP exchanges without
opening sockets.  ``padl serve`` runs the same host app under uvicorn.
"""
from padl import Ledger, Rng, prove_balance
from padl.client import InProcessNetwork
from padl.scenarios import _http_genesis, build_world, load_fixture

fx = load_fixture("exchange")
_, ck, cfg, wallets, parts, assets = build_world(fx)
net = InProcessNetwork(Ledger(ck, parts, assets, cfg).header_json(), wallets)
_http_genesis(net, {"X": {0: 200}, "USD": {1: 1500}}, Rng("demo-http"))
st = net.client.state()
print(f"genesis: height {st['height']}, state {st['state_hash'][:16]}")

alice, bob = wallets[0], wallets[1]
bob.consent("USD", -1000)
tx = alice.spend(net.ledger, {"X": {0: -100, 1: 100}, "USD": {0: 1000, 1: -1000}}, net.broadcast)
print("append:", net.client.append(tx, binary=True))

led = net.ledger
for w in wallets.values():
    w.sync(led)
    print(f"  {w.name}: X={w.balance('X')} USD={w.balance('USD')}")

audit = prove_balance(led, 1, "USD", bob.keypair.sk, 500)
print("host checks bob's balance claim:", net.client.audit(audit))
