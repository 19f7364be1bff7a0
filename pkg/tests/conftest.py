import pytest

from padl import (
    Asset, LedgerConfig, LocalBroadcast, Participant, Rng, Wallet, init_ledger, setup,
)
from padl.pact import consent_policy
from padl.scenarios import run_scenario


class World:
    """A small ledger with in-process wallets."""

    def __init__(self, n: int, assets: dict, initial: dict, *, config=None, seed="world",
                 policy=consent_policy):
        self.rng = Rng(seed)
        self.ck = setup([self.rng.child(f"c{i}").nonzero_scalar() for i in range(n)])
        self.wallets = {i: Wallet(self.ck, i, rng=self.rng.child(f"w{i}"), policy=policy)
                        for i in range(n)}
        parts = [Participant(w.name, w.pk) for w in self.wallets.values()]
        self.ledger = init_ledger(self.ck, parts, [Asset(a, i) for a, i in assets.items()],
                                  initial, self.wallets, config=config or LedgerConfig(),
                                  rng=self.rng.child("genesis"))
        self.bc = LocalBroadcast(self.wallets, self.ledger)

    def spend(self, sender: int, values: dict):
        tx = self.wallets[sender].spend(self.ledger, values, self.bc)
        self.ledger.append(tx)
        return tx

    def balance(self, p: int, asset: str) -> int:
        w = self.wallets[p]
        w.sync(self.ledger)
        return w.balance(asset)


@pytest.fixture
def world3():
    """Three accounts, assets X (issuer 0) and Y (issuer 1)."""
    return World(3, {"X": 0, "Y": 1}, {"X": {0: 3000, 1: 50}, "Y": {1: 500}},
                 config=LedgerConfig(range_bits=16))


@pytest.fixture(scope="session")
def bond():
    return run_scenario("bond-market")


@pytest.fixture(scope="session")
def settlement():
    return run_scenario("settlement")


@pytest.fixture(scope="session")
def exchange():
    return run_scenario("exchange")
