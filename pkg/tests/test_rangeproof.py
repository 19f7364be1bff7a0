from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from padl.group import G, IDENTITY, DecodeError, Rng, keygen, setup
from padl.pact import extract
from padl.rangeproof import (
    AssetProof, RangeError, RangeProof, asset_statement, prove_asset, prove_range,
    serialized_size, verify_asset, verify_range, verify_range_batch,
)
from padl.transcript import Transcript

CK = setup([21, 34])
RNG = Rng("range-tests")
KP = keygen(CK, RNG.child("kp"))


def t(label="range"):
    return Transcript(label)


def rp(v, n=32, backend="bulletproof", rng=RNG):
    r = rng.nonzero_scalar()
    return CK.commit(v, r), prove_range(CK, v, r, n, t(), rng, backend)


@pytest.mark.parametrize("backend", ["bulletproof", "bits"])
@pytest.mark.parametrize("v", [0, 1, 2**16 - 1])
def test_boundaries_accept(backend, v):
    cm, proof = rp(v, 16, backend)
    assert verify_range(CK, cm, 16, proof, t())


@pytest.mark.parametrize("backend", ["bulletproof", "bits"])
def test_value_at_bound_errors(backend):
    with pytest.raises(RangeError):
        rp(2**16, 16, backend)
    with pytest.raises(RangeError):
        rp(-1, 16, backend)


def test_max_32_bit_value_accepts():
    cm, proof = rp(2**32 - 1, 32)
    assert verify_range(CK, cm, 32, proof, t())


def test_sizes():
    assert len(rp(5, 32)[1].to_bytes()) == serialized_size("bulletproof", 32) == 610
    # logarithmic: doubling n adds one round (two points)
    assert serialized_size("bulletproof", 64) - serialized_size("bulletproof", 32) == 64
    assert serialized_size("bits", 32) > serialized_size("bulletproof", 32)


@pytest.mark.parametrize("backend", ["bulletproof", "bits"])
def test_replay_against_shifted_commitment_rejects(backend):
    cm, proof = rp(77, 16, backend)
    assert not verify_range(CK, cm + G, 16, proof, t())


def test_other_transcript_rejects():
    cm, proof = rp(77, 16)
    assert not verify_range(CK, cm, 16, proof, t("elsewhere"))


def test_wrong_n_rejects():
    cm, proof = rp(77, 16)
    assert not verify_range(CK, cm, 32, proof, t())


@pytest.mark.parametrize("backend", ["bulletproof", "bits"])
def test_truncated_proof_rejects(backend):
    cm, proof = rp(77, 8, backend)
    for cut in (1, 32, len(proof.data) - 1):
        short = replace(proof, data=proof.data[:-cut])
        assert not verify_range(CK, cm, 8, short, t())


@pytest.mark.parametrize("backend", ["bulletproof", "bits"])
def test_every_byte_mutation_rejects(backend):
    cm, proof = rp(201, 8, backend)
    for i in range(len(proof.data)):
        bad = bytearray(proof.data)
        bad[i] ^= 0x01
        assert not verify_range(CK, cm, 8, replace(proof, data=bytes(bad)), t()), i


def test_serialization_round_trip_and_header_check():
    cm, proof = rp(9, 16)
    assert RangeProof.from_bytes(proof.to_bytes()) == proof
    with pytest.raises(ValueError):
        RangeProof.from_bytes(b"\x09\x10")


def test_batch_agrees_with_sequential():
    rng = Rng("batch")
    items = []
    for i in range(6):
        r = rng.nonzero_scalar()
        cm = CK.commit(i * 1000 + 3, r)
        items.append((cm, 16, prove_range(CK, i * 1000 + 3, r, 16, t(f"b{i}"), rng), t(f"b{i}")))
    seq = [verify_range(CK, *it[:3], t(f"b{i}")) for i, it in enumerate(items)]
    assert all(seq) and verify_range_batch(CK, items)
    for bad_index in range(len(items)):
        broken = list(items)
        cm, n, proof, tr = broken[bad_index]
        broken[bad_index] = (cm + G, n, proof, t(f"b{bad_index}"))
        fresh = [(c, n_, p, t(f"b{i}")) for i, (c, n_, p, _) in enumerate(broken)]
        assert not verify_range_batch(CK, fresh)


def test_batch_mixed_backends():
    a = rp(5, 8, "bulletproof")
    b = rp(6, 8, "bits")
    assert verify_range_batch(CK, [(a[0], 8, a[1], t()), (b[0], 8, b[1], t())])
    assert not verify_range_batch(CK, [(a[0], 8, a[1], t()), (b[0] + G, 8, b[1], t())])


@given(v=st.integers(0, 2**16 - 1), seed=st.binary(min_size=1, max_size=8))
@settings(max_examples=25, deadline=None)
def test_random_values_accept(v, seed):
    cm, proof = rp(v, 16, rng=Rng(seed))
    assert verify_range(CK, cm, 16, proof, t())


@given(k=st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_values_past_bound_error(k):
    with pytest.raises(RangeError):
        rp(2**16 + k, 16)


# -- proof of asset ----------------------------------------------------------

def cell(v, rng=RNG):
    r = rng.nonzero_scalar()
    return CK.commit(v, r), KP.pk * r


def prove(hist, cur, balance, n=16, label="asset"):
    cms, tks = [c for c, _ in hist], [k for _, k in hist]
    return prove_asset(CK, cms, tks, cur[0], cur[1], balance, KP.sk, KP.pk, n, t(label), RNG)


def verify(hist, cur, proof, n=16, label="asset"):
    cms, tks = [c for c, _ in hist], [k for _, k in hist]
    return verify_asset(CK, cms, tks, cur[0], cur[1], KP.pk, proof, n, t(label))


def test_mint_then_spend_down_then_overspend_errors():
    mint = cell(3000)
    s1, s2 = cell(-2000), cell(-2000)
    p1 = prove([mint], s1, 1000)
    assert verify([mint], s1, p1)
    with pytest.raises(RangeError):
        prove([mint, s1], s2, -1000)


def test_empty_history_zero_accepts():
    cur = cell(0)
    assert verify([], cur, prove([], cur, 0))


def test_balance_42_extracts():
    hist = [cell(40), cell(-8)]
    cur = cell(10)
    proof = prove(hist, cur, 42)
    assert verify(hist, cur, proof)
    assert extract(CK, proof.cm_c, proof.tk_c, KP.sk) == 42


def test_false_balance_rejects():
    hist, cur = [cell(40)], cell(2)
    assert not verify(hist, cur, prove(hist, cur, 41))


def test_perturbed_complementary_commitment_rejects():
    hist, cur = [cell(40)], cell(2)
    proof = prove(hist, cur, 42)
    assert not verify(hist, cur, replace(proof, cm_c=proof.cm_c + G))
    assert not verify(hist, cur, replace(proof, tk_c=proof.tk_c + G))


def test_omitted_history_rejects():
    hist, cur = [cell(40), cell(5)], cell(2)
    proof = prove(hist, cur, 47)
    assert not verify(hist[:1], cur, proof)
    assert not verify(hist[1:], cur, proof)


def test_foreign_key_rejects():
    other = keygen(CK, RNG.child("other"))
    hist, cur = [cell(40)], cell(2)
    proof = prove_asset(CK, [hist[0][0]], [hist[0][1]], cur[0], cur[1], 42, other.sk, KP.pk, 16,
                        t("asset"), RNG)
    assert not verify(hist, cur, proof)


def test_asset_proof_serialization():
    hist, cur = [cell(40)], cell(2)
    proof = prove(hist, cur, 42, n=32)
    raw = proof.to_bytes()
    assert len(raw) == len(proof) == 866
    assert AssetProof.from_bytes(raw) == proof
    with pytest.raises(DecodeError):
        AssetProof.from_bytes(raw[:200])


def test_asset_statement_length_mismatch():
    with pytest.raises(ValueError):
        asset_statement([G], [], G, G)


@given(vals=st.lists(st.integers(0, 500), min_size=0, max_size=6))
@settings(max_examples=30, deadline=None)
def test_aggregation_matches_ledger_sum(vals):
    hist = [cell(v) for v in vals]
    cur = cell(1)
    cm_sum, tk_sum = asset_statement([c for c, _ in hist], [k for _, k in hist], *cur)
    expect_cm, expect_tk = cur
    for c, k in hist:
        expect_cm, expect_tk = expect_cm + c, expect_tk + k
    assert (cm_sum, tk_sum) == (expect_cm, expect_tk)
    assert (cm_sum - G * (sum(vals) + 1)) * KP.sk == tk_sum
    assert asset_statement([], [], IDENTITY, IDENTITY) == (IDENTITY, IDENTITY)
