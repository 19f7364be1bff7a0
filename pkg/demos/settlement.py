"""Repo between two banks, approved by the settlement bank.

The settlement bank issues both USD and a money-market token (MM) and runs
the ledger in reduced mode: cells carry no proofs of asset, and instead the
issuer reads every amount through its issuer token and signs off on the row.
"""
from padl import ApprovalRefused, LocalBroadcast, full_audit_extract
from padl.scenarios import run_scenario

res = run_scenario("settlement")
led, w = res.ledger, res.wallets
print(f"{res.name}: {led.height} rows, replayed in {res.seconds:.2f}s")
for row, tx in enumerate(led.rows):
    print(f"  row {row}: {len(tx.to_bytes())} bytes, approved={tx.approval is not None}")

settler = w[0]
print("settlement bank's view of row 1:")
for asset in led.asset_ids:
    amounts = {w[p].name: full_audit_extract(led, settler.keypair.sk, 1, asset, p) for p in w}
    print(f"  {asset}: {amounts}")

print("final balances:", res.balances())

# BankB now tries to send cash it does not have; the approver refuses
try:
    w[2].spend(led, {"USD": {2: -2001, 1: 2001}}, LocalBroadcast(w, led))
except ApprovalRefused as exc:
    print(f"overdraft attempt refused: {exc}")
