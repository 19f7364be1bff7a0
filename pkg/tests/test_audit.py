import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from padl import (
    Ledger, LedgerConfig, full_audit_extract, prove_balance, prove_liquidity, prove_rate,
    verify_audit, verify_balance, verify_liquidity, verify_rate,
)
from padl.audit import AuditError, audit_from_json
from padl.group import G, Rng
from padl.rangeproof import RangeError

from conftest import World

CUSTODIAN, ISSUER, BROKER, M, N = range(5)


def sk(result, p):
    return result.wallets[p].keypair.sk


# -- balance ------------------------------------------------------------------

def test_investor_m_final_balance(bond):
    a = prove_balance(bond.ledger, M, "USD", sk(bond, M), 2199)
    assert verify_balance(bond.ledger, a)


def test_fresh_account_claims_zero(bond):
    a = prove_balance(bond.ledger, BROKER, "X", sk(bond, BROKER), 0)
    assert verify_balance(bond.ledger, a)


@pytest.mark.parametrize("delta", [-5, -4, -3, -2, -1, 1, 2, 3, 4, 5])
def test_perturbed_claim_rejected(bond, delta):
    a = prove_balance(bond.ledger, M, "USD", sk(bond, M), 2199 + delta)
    assert not verify_balance(bond.ledger, a)


def test_balance_proof_bound_to_claim_and_height(bond):
    led = bond.ledger
    a = prove_balance(led, M, "USD", sk(bond, M), 2199)
    assert not verify_balance(led, replace(a, claimed=2200))
    assert not verify_balance(led, replace(a, participant=N))
    # an earlier height is a different statement
    early = prove_balance(led, M, "USD", sk(bond, M), 2000, upto=2)
    assert verify_balance(led, early)
    assert not verify_balance(led, replace(early, upto=3))


def test_balance_with_foreign_key_rejected(bond):
    a = prove_balance(bond.ledger, M, "USD", sk(bond, N), 2199)
    assert not verify_balance(bond.ledger, a)


def test_audits_verify_from_public_log_only(bond):
    public = Ledger.from_log_bytes(bond.ledger.log_bytes(), verify=False)
    a = prove_balance(bond.ledger, N, "USD", sk(bond, N), 2398)
    assert verify_audit(public, audit_from_json(json.loads(json.dumps(a.to_json()))))


def test_audit_range_checks(bond):
    with pytest.raises(AuditError):
        prove_balance(bond.ledger, M, "USD", sk(bond, M), 0, upto=99)
    with pytest.raises(KeyError):
        prove_balance(bond.ledger, M, "EUR", sk(bond, M), 0)


# -- liquidity -------------------------------------------------------------------

@pytest.fixture(scope="module")
def portfolio():
    # participant 1 holds 1000 of A and 3000 of B: 4000 in total
    return World(2, {"A": 0, "B": 0}, {"A": {1: 1000}, "B": {1: 3000}}, seed="portfolio",
                 config=LedgerConfig(range_bits=16))


def test_liquidity_half_accepts(portfolio):
    a = prove_liquidity(portfolio.ledger, portfolio.wallets[1], "A", 1, 2)
    assert verify_liquidity(portfolio.ledger, a)
    # the range commitment opens to D*total - N*part = 2000
    assert portfolio.wallets[1].extract(a.c_r, _token_sum(portfolio, 1, 2)) == 2000


def _token_sum(world, D, N):
    from padl.group import IDENTITY
    led = world.ledger
    c1 = c2 = IDENTITY
    for tx in led.rows:
        for a in tx.assets:
            c = tx.cell(a, 1)
            c2 = c2 + c.tk_c
            if a == "A":
                c1 = c1 + c.tk_c
    return c2 * D - c1 * N


def test_liquidity_fifth_errors(portfolio):
    with pytest.raises(RangeError):
        prove_liquidity(portfolio.ledger, portfolio.wallets[1], "A", 1, 5)


def test_liquidity_equality_is_inclusive(portfolio):
    a = prove_liquidity(portfolio.ledger, portfolio.wallets[1], "A", 1, 4)
    assert verify_liquidity(portfolio.ledger, a)


def test_liquidity_tampering_rejected(portfolio):
    led = portfolio.ledger
    a = prove_liquidity(led, portfolio.wallets[1], "A", 1, 2)
    assert not verify_liquidity(led, replace(a, c_r=a.c_r + G))
    assert not verify_liquidity(led, replace(a, D=2))
    assert not verify_liquidity(led, replace(a, N=3))
    assert not verify_liquidity(led, replace(a, asset="B"))
    assert not verify_liquidity(led, replace(a, D=0))


def test_liquidity_zero_exposure_any_ratio(bond):
    # right after the bond sale the issuer holds no bonds
    w = bond.wallets[ISSUER]
    for D, N in ((1, 100), (1, 2), (3, 5)):
        a = prove_liquidity(bond.ledger, w, "X", D, N, upto=4)
        assert verify_liquidity(bond.ledger, a)


def test_liquidity_rejects_bad_ratio(portfolio):
    with pytest.raises(AuditError):
        prove_liquidity(portfolio.ledger, portfolio.wallets[1], "A", 0, 2)


def test_liquidity_needs_complementary_commitments(settlement):
    with pytest.raises(AuditError):
        prove_liquidity(settlement.ledger, settlement.wallets[1], "USD", 1, 2)


# -- rate ------------------------------------------------------------------------------

def test_coupon_rate(bond):
    for n, ok in ((10, True), (9, False), (11, False)):
        a = prove_rate(bond.ledger, M, "USD", sk(bond, M), [4], [3], 1, n, signs=(1, -1))
        assert verify_rate(bond.ledger, a) is ok


def test_coupon_rate_for_n(bond):
    # N received 200 per coupon on 2000 principal
    a = prove_rate(bond.ledger, N, "USD", sk(bond, N), [4, 5], [3], 1, 5, signs=(1, -1))
    assert verify_rate(bond.ledger, a)


def test_identity_ratio(bond):
    a = prove_rate(bond.ledger, M, "USD", sk(bond, M), [4], [4], 1, 1)
    assert verify_rate(bond.ledger, a)


def test_rate_sign_matters(bond):
    a = prove_rate(bond.ledger, M, "USD", sk(bond, M), [4], [3], 1, 10, signs=(1, 1))
    assert not verify_rate(bond.ledger, a)


def test_rate_tampering_rejected(bond):
    led = bond.ledger
    a = prove_rate(led, M, "USD", sk(bond, M), [4], [3], 1, 10, signs=(1, -1))
    assert verify_rate(led, a)
    assert not verify_rate(led, replace(a, txs1=(5,)))
    assert not verify_rate(led, replace(a, N=20, D=2))
    assert not verify_rate(led, replace(a, participant=N))
    assert not verify_rate(led, replace(a, txs1=(4, 4)))


def test_rate_rows_must_be_in_range(bond):
    with pytest.raises(AuditError):
        prove_rate(bond.ledger, M, "USD", sk(bond, M), [99], [3], 1, 10)


# -- full audit ------------------------------------------------------------------------

def test_full_audit_reads_cells(settlement):
    led, w = settlement.ledger, settlement.wallets
    assert full_audit_extract(led, w[0].keypair.sk, 1, "USD", 1) == 2000
    assert full_audit_extract(led, w[0].keypair.sk, 1, "MM", 2) == 0


def test_full_audit_non_designated(settlement, bond):
    with pytest.raises(AuditError):
        full_audit_extract(settlement.ledger, settlement.wallets[2].keypair.sk, 1, "USD", 1)
    # plain ledgers carry no issuer tokens
    with pytest.raises(AuditError):
        full_audit_extract(bond.ledger, sk(bond, CUSTODIAN), 1, "USD", M)


def test_audit_json_round_trip(bond):
    led = bond.ledger
    audits = [
        prove_balance(led, M, "USD", sk(bond, M), 2199),
        prove_rate(led, M, "USD", sk(bond, M), [4], [3], 1, 10, signs=(1, -1)),
        prove_liquidity(led, bond.wallets[ISSUER], "USD", 3, 5),
    ]
    for a in audits:
        back = audit_from_json(json.loads(json.dumps(a.to_json())))
        assert back == a and verify_audit(led, back)
    assert audits[0].size() == 96 and audits[1].size() == 96
    with pytest.raises(ValueError):
        audit_from_json({"type": "nope"})


# -- randomized ledgers -------------------------------------------------------------------

def random_ledger(seed, steps=2):
    """Three accounts, two assets, a few random transfers; returns (world, shadow)."""
    import random
    rnd = random.Random(seed)
    initial = {a: {p: rnd.randrange(0, 300) for p in range(3)} for a in ("A", "B")}
    w = World(3, {"A": 0, "B": 1}, initial, seed=f"rl{seed}", config=LedgerConfig(range_bits=16))
    shadow = {(p, a): initial[a][p] for p in range(3) for a in ("A", "B")}
    rows = []
    for _ in range(steps):
        a = rnd.choice(("A", "B"))
        src, dst = rnd.sample(range(3), 2)
        v = rnd.randrange(0, shadow[(src, a)] + 1)
        w.spend(src, {a: {src: -v, dst: v}})
        shadow[(src, a)] -= v
        shadow[(dst, a)] += v
        rows.append((a, src, dst, v))
    return w, shadow, rows, rnd


@given(seed=st.integers(0, 10**6))
@settings(max_examples=6, deadline=None)
def test_balance_audit_matches_shadow(seed):
    w, shadow, _, rnd = random_ledger(seed)
    p, a = rnd.randrange(3), rnd.choice(("A", "B"))
    for delta in (0, 1, -1, 5):
        audit = prove_balance(w.ledger, p, a, w.wallets[p].keypair.sk, shadow[(p, a)] + delta)
        assert verify_balance(w.ledger, audit) is (delta == 0)


@given(seed=st.integers(0, 10**6), D=st.integers(1, 9), N=st.integers(1, 9))
@settings(max_examples=6, deadline=None)
def test_liquidity_audit_matches_shadow(seed, D, N):
    w, shadow, _, rnd = random_ledger(seed)
    p = rnd.randrange(3)
    total = shadow[(p, "A")] + shadow[(p, "B")]
    predicate = 0 <= D * total - N * shadow[(p, "A")] < 2**16
    try:
        audit = prove_liquidity(w.ledger, w.wallets[p], "A", D, N, rng=Rng(seed))
    except RangeError:
        assert not predicate
        return
    assert verify_liquidity(w.ledger, audit) is predicate


def _shadow_row(rows, p, t, asset):
    a, src, dst, v = rows[t - 1]
    if a != asset:
        return 0
    return -v if p == src else v if p == dst else 0


@given(seed=st.integers(0, 10**6), D=st.integers(1, 4), N=st.integers(1, 4))
@settings(max_examples=6, deadline=None)
def test_rate_audit_matches_shadow(seed, D, N):
    w, _, rows, rnd = random_ledger(seed, steps=3)
    p = rnd.randrange(3)
    s1 = _shadow_row(rows, p, 1, "A")
    s2 = _shadow_row(rows, p, 2, "A")
    audit = prove_rate(w.ledger, p, "A", w.wallets[p].keypair.sk, [1], [2], D, N)
    assert verify_rate(w.ledger, audit) is (N * s1 == D * s2)
