import httpx
import pytest

from padl import (
    ApprovalRefused, EndorsementRefused, EndorsementTimeout, Ledger, LedgerConfig, StaleTransaction,
    VerificationFailed, Wallet, prove_balance,
)
from padl.client import AppRouter, HostClient, HostError, HttpBroadcast, InProcessNetwork, _test_client
from padl.group import Rng
from padl.host import Host, create_app
from padl.scenarios import _http_genesis, build_world, load_fixture, run_scenario

from conftest import World


@pytest.fixture
def world():
    return World(3, {"X": 0}, {"X": {0: 100}}, seed="host", config=LedgerConfig(range_bits=16))


@pytest.fixture
def net(world):
    header = Ledger(world.ck, world.ledger.participants, world.ledger.assets,
                    world.ledger.config).header_json()
    n = InProcessNetwork(header, world.wallets)
    n.client.append(world.ledger.rows[0])
    return n


def test_create_then_state_returns_genesis(net, world):
    st = net.client.state()
    assert st["height"] == 1
    assert st["state_hash"] == world.ledger.state_hash.hex()
    assert net.ledger.log_bytes() == world.ledger.log_bytes()


def test_create_twice_conflicts():
    c = _test_client(create_app(Host()), "http://h")
    header = World(1, {"X": 0}, {}, seed="h").ledger.header_json()
    assert c.post("/ledger", json=header).status_code == 201
    assert c.post("/ledger", json=header).status_code == 409


def test_state_before_create_is_an_error():
    c = _test_client(create_app(Host()), "http://h")
    assert c.get("/state").status_code >= 400


def test_spend_round_trip_matches_local(world, net):
    w = world.wallets[0]
    tx = w.spend(net.ledger, {"X": {0: -30, 1: 30}}, net.broadcast)
    net.client.append(tx)
    world.ledger.append(tx)
    assert net.ledger.log_bytes() == world.ledger.log_bytes()
    assert world.balance(1, "X") == 30


def test_binary_append(world, net):
    tx = world.wallets[0].spend(net.ledger, {"X": {0: -1, 2: 1}}, net.broadcast)
    body = net.client.append(tx, binary=True)
    assert body["height"] == 2


def test_stale_append_rejected(world, net):
    a = world.wallets[0].spend(net.ledger, {"X": {0: -1, 1: 1}}, net.broadcast)
    b = world.wallets[0].spend(net.ledger, {"X": {0: -2, 1: 2}}, net.broadcast)
    net.client.append(a)
    with pytest.raises(StaleTransaction) as exc:
        net.client.append(b)
    assert exc.value.tx_height == 1 and exc.value.ledger_height == 2


def test_rejected_append_reports_failures(world, net):
    draft = world.wallets[0].draft(net.ledger, {"X": {0: -1, 1: 1}})
    with pytest.raises(VerificationFailed) as exc:
        net.client.append(draft.tx)
    assert any(c == "endorsement-missing" for _, _, c in exc.value.report.failures)


def test_malformed_bodies_are_400(net):
    http = net.http
    assert http.post("http://host/append", json={"tx": {"height": "x"}}).status_code == 400
    assert http.post("http://host/append", content=b"garbage",
                     headers={"content-type": "application/octet-stream"}).status_code == 400
    assert http.post("http://host/audit/balance", json={"participant": 0}).status_code == 400


def test_stale_broadcast_is_409(world, net):
    tx = world.wallets[0].draft(net.ledger, {"X": {0: -1, 1: 1}}).tx
    net.client.append(world.wallets[0].spend(net.ledger, {"X": {0: -1, 2: 1}}, net.broadcast))
    r = net.http.post("http://host/broadcast", json={"tx": tx.to_json()})
    assert r.status_code == 409 and r.json()["error"] == "stale"


def test_pending_and_endorsement_endpoints(world, net):
    tx = world.wallets[0].draft(net.ledger, {"X": {0: -1, 1: 1}}).tx
    out = net.client.broadcast(tx)
    assert set(out["responses"]) == {"0", "1", "2"}
    assert net.client.pending(tx.txid) == tx
    got = net.client.endorsements(tx.txid)
    assert set(got) == {0, 1, 2}
    assert net.http.get("http://host/pending/" + "00" * 32).status_code == 404


def test_audit_endpoints(world, net):
    led = net.ledger
    good = prove_balance(led, 0, "X", world.wallets[0].keypair.sk, 100)
    bad = prove_balance(led, 0, "X", world.wallets[0].keypair.sk, 99)
    assert net.client.audit(good)["accepted"] is True
    assert net.client.audit(bad)["accepted"] is False
    assert net.http.post("http://host/audit/nope", json={}).status_code == 404


def test_unknown_participant_callback(net):
    assert net.http.post("http://host/participants/9/callback", json={"url": "x"}).status_code == 404


def test_offline_participant_times_out(world):
    header = Ledger(world.ck, world.ledger.participants, world.ledger.assets,
                    world.ledger.config).header_json()
    n = InProcessNetwork(header, world.wallets, offline={1})
    n.client.append(world.ledger.rows[0])
    with pytest.raises(EndorsementTimeout):
        world.wallets[0].spend(n.ledger, {"X": {0: -1, 1: 1}}, n.broadcast)
    # a zero-valued offline party is dropped and the row still goes through
    tx = world.wallets[0].spend(n.ledger, {"X": {0: -1, 2: 1}}, n.broadcast)
    assert tx.participants == (0, 2)
    n.client.append(tx)


@pytest.mark.parametrize("name", ["settlement", "exchange"])
def test_scenarios_identical_over_http(name):
    local = run_scenario(name)
    remote = run_scenario(name, transport="http")
    assert remote.ok and local.ok
    assert remote.ledger.log_bytes() == local.ledger.log_bytes()


def test_reduced_approval_over_http():
    fx = load_fixture("settlement")
    _, ck, cfg, wallets, parts, assets = build_world(fx)
    n = InProcessNetwork(Ledger(ck, parts, assets, cfg).header_json(), wallets)
    _http_genesis(n, {"USD": {2: 50}}, Rng("g"))
    with pytest.raises(ApprovalRefused):
        wallets[2].spend(n.ledger, {"USD": {2: -51, 1: 51}}, n.broadcast)
    tx = wallets[2].spend(n.ledger, {"USD": {2: -50, 1: 50}}, n.broadcast)
    n.client.append(tx)
    assert n.client.state()["height"] == 2


def test_unroutable_host_raises_host_error():
    c = HostClient("http://nowhere", http=httpx.Client(transport=AppRouter()))
    with pytest.raises(HostError) as exc:
        c.state()
    assert exc.value.status == 502


def test_sender_endorses_in_process_next_to_its_service(world):
    # services run on key copies that never saw the draft, like separate processes
    copies = {p: Wallet(world.ck, p, w.keypair, name=w.name) for p, w in world.wallets.items()}
    header = Ledger(world.ck, world.ledger.participants, world.ledger.assets,
                    world.ledger.config).header_json()
    n = InProcessNetwork(header, copies)
    n.client.append(world.ledger.rows[0])
    sender = world.wallets[0]
    with pytest.raises(EndorsementRefused):
        sender.spend(n.ledger, {"X": {0: -4, 1: 4}}, n.broadcast)
    view = n.ledger
    tx = sender.spend(view, {"X": {0: -4, 1: 4}}, HttpBroadcast(n.client, local={0: sender}, view=view))
    assert n.client.append(tx)["height"] == 2
