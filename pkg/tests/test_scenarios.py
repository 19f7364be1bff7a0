import copy
import hashlib

import pytest

from padl.pact import EndorsementRefused
from padl.scenarios import ScenarioError, load_fixture, run_scenario

# frozen from the first green run of each scenario at its fixture seed
FROZEN = {
    "bond-market": ("5573817231d081cb0ac5e8aff970866820dd54b99e4f581b15088b840dc2647f",
                    "09b3f91bdcb52caab16f88151d8b7d677730cbab1ee713ca7e397e1043bb91d2", 80801),
    "settlement": ("9c4df6f6cd43bb847069291aa31d2a86ff418ba3ef3f7c40a4704f63303bca48",
                   "4cd20083291a52cbf133bcc8beb4da9a92a3251ac453a7216a1dd0bb77e56a28", 7505),
    "exchange": ("2d6a87ebb08d7d6749322f29010387995e7e7dfdbcb9d8c8231e1e86ec752fe7",
                 "d131f3ab7673ae667e631b76eb1c051f0b576715b0c9d1d025ea6412a007053c", 12561),
}


@pytest.fixture(scope="module")
def results(bond, settlement, exchange):
    return {"bond-market": bond, "settlement": settlement, "exchange": exchange}


def test_bond_market_final_balances(bond):
    assert bond.balances() == {
        "Custodian": {"USD": 0, "X": 0},
        "Issuer": {"USD": 397, "X": 300},
        "Broker": {"USD": 6, "X": 0},
        "M": {"USD": 2199, "X": 0},
        "N": {"USD": 2398, "X": 0},
    }
    assert bond.ok and bond.ledger.height == 7


def test_bond_market_audits(bond):
    verdicts = [(a.spec["type"], a.spec.get("N"), a.accepted) for a in bond.audits]
    assert ("rate", 10, True) in verdicts
    assert ("rate", 9, False) in verdicts and ("rate", 11, False) in verdicts
    assert all(a.ok for a in bond.audits)


def test_exchange_swap(exchange):
    assert exchange.balances() == {"A": {"X": 100, "USD": 1000}, "B": {"X": 100, "USD": 500}}
    assert exchange.ok


def test_settlement_round_trip(settlement):
    assert settlement.balances()["BankB"] == {"USD": 2000, "MM": 0}
    assert settlement.ok and settlement.ledger.height == 3
    full = [a for a in settlement.audits if a.spec["type"] == "full"]
    assert len(full) == 2 and all(a.accepted for a in full)


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_frozen_state_hash_and_log(results, name):
    state, digest, size = FROZEN[name]
    led = results[name].ledger
    raw = led.log_bytes()
    assert led.state_hash.hex() == state
    assert hashlib.sha256(raw).hexdigest() == digest and len(raw) == size


@pytest.mark.parametrize("name", ["settlement", "exchange"])
def test_same_seed_is_byte_identical(results, name):
    again = run_scenario(name, run_audits=False)
    assert again.ledger.log_bytes() == results[name].ledger.log_bytes()


def test_other_seed_differs(results):
    other = run_scenario("exchange", seed="elsewhere", run_audits=False)
    assert other.ledger.state_hash != results["exchange"].ledger.state_hash
    assert other.balances() == results["exchange"].balances()


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_dropping_any_row_changes_state_hash(results, name):
    led = results[name].ledger
    rows = list(led.rows)
    for i in range(len(rows)):
        assert led.recompute_state(rows[:i] + rows[i + 1:]) != led.state_hash


def test_runtime_budget(results):
    assert sum(r.seconds for r in results.values()) < 30


def test_failing_step_reports_index():
    fx = copy.deepcopy(load_fixture("exchange"))
    fx["transactions"].append({"sender": "A", "values": {"X": {"A": -500, "B": 500},
                                                          "USD": {"A": 0, "B": 0}}})
    with pytest.raises(ScenarioError) as exc:
        run_scenario(fx, run_audits=False)
    assert exc.value.step == 2
    assert isinstance(exc.value.cause, EndorsementRefused)


def test_summary_is_serializable(settlement):
    import json
    s = json.loads(json.dumps(settlement.summary()))
    assert s["rows"] == 3 and s["ok"]


def test_unknown_transport():
    with pytest.raises(ValueError):
        run_scenario("exchange", transport="carrier-pigeon")
