"""A bond issuance with two coupon payments and redemption.

Investors M and N buy cash from the custodian, buy the issuer's bond through
a broker, receive two coupons and are redeemed.  At the end M proves the
coupon rate to a regulator and the issuer proves a liquidity bound, all
from the public log.
"""
import json

from padl import prove_liquidity, prove_rate, verify_liquidity, verify_rate
from padl.scenarios import load_fixture, run_scenario

fx = load_fixture("bond-market")
res = run_scenario(fx)
led, w = res.ledger, res.wallets
names = fx["participants"]

for k, (step, secs) in enumerate(zip(fx["transactions"], res.tx_seconds), start=1):
    print(f"row {k} {step['label']:<12} {secs:.2f}s")
print(json.dumps(res.balances()))

M = names.index("M")
sk = w[M].keypair.sk
for n in (9, 10, 11):
    a = prove_rate(led, M, "USD", sk, [4], [3], 1, n, signs=(1, -1))
    print(f"M: coupon / principal == 1/{n}? {verify_rate(led, a)}")

issuer = w[names.index("Issuer")]
for D, N in ((3, 5), (1, 2)):
    try:
        a = prove_liquidity(led, issuer, "USD", D, N)
        verdict = verify_liquidity(led, a)
    except ValueError as exc:
        verdict = f"cannot prove ({exc})"
    print(f"issuer: USD share <= {D}/{N}? {verdict}")
