"""Two traders swap a bond token for cash on a private ledger.

Alice issues X and Bob issues USD.  Alice proposes 100 X for 1000 USD; Bob
pre-consents to the outgoing cash, both endorse, and anyone holding the log
can check the row without learning the amounts.
"""
from padl import (
    Asset, Ledger, LedgerConfig, LocalBroadcast, Participant, Rng, Wallet, consent_policy,
    full_audit_extract, init_ledger, prove_balance, setup, verify_balance,
)

rng = Rng("demo-exchange")
ck = setup([rng.child("alice").nonzero_scalar(), rng.child("bob").nonzero_scalar()])
cfg = LedgerConfig(issuer_tokens=True)
alice = Wallet(ck, 0, rng=rng.child("w-alice"), name="alice", policy=consent_policy)
bob = Wallet(ck, 1, rng=rng.child("w-bob"), name="bob", policy=consent_policy)
wallets = {0: alice, 1: bob}

ledger = init_ledger(ck, [Participant("alice", alice.pk), Participant("bob", bob.pk)],
                     [Asset("X", 0), Asset("USD", 1)],
                     {"X": {0: 200}, "USD": {1: 1500}}, wallets, config=cfg, rng=rng.child("genesis"))
print(f"genesis appended, state {ledger.state_hash.hex()[:16]}")

bob.consent("USD", -1000)
tx = alice.spend(ledger, {"X": {0: -100, 1: 100}, "USD": {0: 1000, 1: -1000}},
                 LocalBroadcast(wallets, ledger))
ledger.append(tx)
print(f"swap appended as row {tx.height}, {len(tx.to_bytes())} bytes on the wire")

for w in wallets.values():
    w.sync(ledger)
    print(f"  {w.name:<6} sees X={w.balance('X'):>4}  USD={w.balance('USD'):>5}")

# an outside verifier replays the public log from scratch
public = Ledger.from_log_bytes(ledger.log_bytes())
print(f"public replay: height {public.height}, state matches {public.state_hash == ledger.state_hash}")

audit = prove_balance(ledger, 0, "USD", alice.keypair.sk, 1000)
print(f"alice proves USD=1000 in {audit.size()} bytes: {verify_balance(public, audit)}")

# Bob issued USD, so his issuer token opens every USD cell
print(f"bob reads alice's USD cell in row 1: {full_audit_extract(ledger, bob.keypair.sk, 1, 'USD', 0)}")
