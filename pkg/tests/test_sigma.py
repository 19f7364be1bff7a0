from dataclasses import fields, replace

import pytest
from hypothesis import given, settings, strategies as st

from padl.group import G, IDENTITY, L, DecodeError, Rng, keygen, setup
from padl.sigma import (
    ConsistencyProof, DlogEqualityProof, EquivalenceProof, SchnorrProof,
    prove_consistency, prove_dlog, prove_dlog_equality, prove_equivalence,
    verify_consistency, verify_dlog, verify_dlog_equality, verify_equivalence,
)
from padl.transcript import Transcript, cell_transcript

CK = setup([3, 5, 8])
RNG = Rng("sigma-tests")
KP = keygen(CK, RNG.child("kp"))
TXID = bytes(range(32))


def ctx(txid=TXID, purpose="t"):
    return cell_transcript(txid, "USD", 0, purpose)


def consistency_case(v=100, rng=RNG):
    r = rng.nonzero_scalar()
    cm, tk = CK.commit(v, r), KP.pk * r
    return (cm, tk), prove_consistency(CK, cm, tk, KP.pk, v, r, ctx(), rng)


def equivalence_case(v=250, rng=RNG):
    r, rc = rng.nonzero_scalar(), rng.nonzero_scalar()
    cm, cmc = CK.commit(v, r), CK.commit(v, rc)
    tk, tkc = KP.pk * r, KP.pk * rc
    return (cm, cmc, tk, tkc), prove_equivalence(CK, cm, cmc, tk, tkc, KP.sk, ctx(), rng)


def dleq_case(rng=RNG):
    c1 = CK.commit(0, rng.nonzero_scalar())
    c2 = c1 * KP.sk
    return (CK.h, KP.pk, c1, c2), prove_dlog_equality(CK.h, KP.pk, c1, c2, KP.sk, ctx(), rng)


def verify_cons(stmt, proof, t=None):
    cm, tk = stmt
    return verify_consistency(CK, cm, tk, KP.pk, proof, t or ctx())


def verify_eq(stmt, proof, t=None):
    return verify_equivalence(CK, *stmt, proof, t or ctx())


def verify_dleq(stmt, proof, t=None):
    return verify_dlog_equality(*stmt, proof, t or ctx())


# -- consistency ------------------------------------------------------------

def test_consistency_honest_accepts():
    stmt, proof = consistency_case()
    assert verify_cons(stmt, proof)


def test_consistency_cm_shifted_by_g_rejects():
    (cm, tk), proof = consistency_case()
    assert not verify_cons((cm + G, tk), proof)


def test_consistency_other_txid_rejects():
    stmt, proof = consistency_case()
    assert not verify_cons(stmt, proof, ctx(txid=bytes(32)))


def test_consistency_s1_incremented_rejects():
    stmt, proof = consistency_case()
    assert not verify_cons(stmt, replace(proof, s1=(proof.s1 + 1) % L))


def test_consistency_t1_identity_rejects():
    stmt, proof = consistency_case()
    assert not verify_cons(stmt, replace(proof, t1=IDENTITY))


def test_consistency_identity_pk_rejected():
    (cm, tk), proof = consistency_case()
    assert not verify_consistency(CK, cm, tk, IDENTITY, proof, ctx())


def test_consistency_wrong_token_rejects():
    r = RNG.nonzero_scalar()
    cm = CK.commit(5, r)
    bad_tk = KP.pk * (r + 1)
    proof = prove_consistency(CK, cm, bad_tk, KP.pk, 5, r, ctx(), RNG)
    assert not verify_cons((cm, bad_tk), proof)


# -- equivalence ------------------------------------------------------------

def test_equivalence_same_value_accepts():
    stmt, proof = equivalence_case()
    assert verify_eq(stmt, proof)


def test_equivalence_different_values_reject():
    r, rc = RNG.nonzero_scalar(), RNG.nonzero_scalar()
    cm, cmc = CK.commit(250, r), CK.commit(251, rc)
    tk, tkc = KP.pk * r, KP.pk * rc
    proof = prove_equivalence(CK, cm, cmc, tk, tkc, KP.sk, ctx(), RNG)
    assert not verify_eq((cm, cmc, tk, tkc), proof)


def test_equivalence_equal_blinding_errors_at_prove_time():
    r = RNG.nonzero_scalar()
    cm, tk = CK.commit(9, r), KP.pk * r
    with pytest.raises(ValueError):
        prove_equivalence(CK, cm, cm, tk, tk, KP.sk, ctx(), RNG)
    assert not verify_eq((cm, cm, tk, tk), EquivalenceProof(G, 1))


def test_equivalence_swapped_order_rejects():
    (cm, cmc, tk, tkc), proof = equivalence_case()
    assert not verify_eq((cmc, cm, tkc, tk), proof)


def test_equivalence_replayed_from_other_cell_rejects():
    stmt, proof = equivalence_case()
    other = cell_transcript(TXID, "USD", 1, "t")
    assert not verify_equivalence(CK, *stmt, proof, other)
    stmt2, _ = equivalence_case()
    assert not verify_eq(stmt2, proof)


def test_equivalence_foreign_sk_rejects():
    (cm, cmc, tk, tkc), _ = equivalence_case()
    foreign = keygen(CK, RNG.child("foreign"))
    proof = prove_equivalence(CK, cm, cmc, tk, tkc, foreign.sk, ctx(), RNG)
    assert not verify_eq((cm, cmc, tk, tkc), proof)


# -- dlog equality ----------------------------------------------------------

def test_dleq_accepts():
    stmt, proof = dleq_case()
    assert verify_dleq(stmt, proof)


def test_dleq_wrong_witness_rejects():
    stmt = dleq_case()[0]
    proof = prove_dlog_equality(*stmt, KP.sk + 1, ctx(), RNG)
    assert not verify_dleq(stmt, proof)


def test_dleq_identity_base_errors():
    with pytest.raises(ValueError):
        prove_dlog_equality(IDENTITY, IDENTITY, G, G, 1, ctx(), RNG)
    stmt, proof = dleq_case()
    assert not verify_dlog_equality(IDENTITY, stmt[1], stmt[2], stmt[3], proof, ctx())


def test_schnorr_round_trip_and_binding():
    proof = prove_dlog(CK.h, KP.pk, KP.sk, Transcript("approve"), RNG)
    assert verify_dlog(CK.h, KP.pk, proof, Transcript("approve"))
    assert not verify_dlog(CK.h, KP.pk, proof, Transcript("other"))
    assert not verify_dlog(CK.h, KP.pk + G, proof, Transcript("approve"))
    with pytest.raises(ValueError):
        prove_dlog(IDENTITY, KP.pk, 1, Transcript("x"), RNG)


# -- mutation, binding, determinism ----------------------------------------

def schnorr_case(rng=RNG):
    return (CK.h, KP.pk), prove_dlog(CK.h, KP.pk, KP.sk, ctx(), rng)


def verify_schnorr(stmt, proof, t=None):
    return verify_dlog(*stmt, proof, t or ctx())


SYSTEMS = {
    "consistency": (consistency_case, verify_cons, ConsistencyProof),
    "equivalence": (equivalence_case, verify_eq, EquivalenceProof),
    "dlog-equality": (dleq_case, verify_dleq, DlogEqualityProof),
    "schnorr": (schnorr_case, verify_schnorr, SchnorrProof),
}


def mutations(proof):
    for f in fields(proof):
        val = getattr(proof, f.name)
        if isinstance(val, int):
            for m in ((val + 1) % L, (val - 1) % L, 0):
                yield f.name, replace(proof, **{f.name: m})
        else:
            for m in (val + G, IDENTITY, -val):
                if m != val:
                    yield f.name, replace(proof, **{f.name: m})


@pytest.mark.parametrize("name", SYSTEMS)
def test_single_field_mutation_rejects(name):
    case, verify, _ = SYSTEMS[name]
    stmt, proof = case()
    assert verify(stmt, proof)
    seen = set()
    for field_name, bad in mutations(proof):
        seen.add(field_name)
        assert not verify(stmt, bad), field_name
    assert seen == {f.name for f in fields(proof)}


@pytest.mark.parametrize("name", SYSTEMS)
def test_every_bit_flip_of_serialized_proof_rejects(name):
    case, verify, cls = SYSTEMS[name]
    stmt, proof = case()
    raw = proof.to_bytes()
    assert len(raw) == cls.SIZE
    assert cls.from_bytes(raw) == proof
    for i in range(len(raw)):
        bad = bytearray(raw)
        bad[i] ^= 1 << (i % 8)
        try:
            decoded = cls.from_bytes(bytes(bad))
        except DecodeError:
            continue
        assert not verify(stmt, decoded), i


@pytest.mark.parametrize("name", SYSTEMS)
def test_statement_element_substitution_rejects(name):
    case, verify, _ = SYSTEMS[name]
    stmt, proof = case()
    for i in range(len(stmt)):
        moved = list(stmt)
        moved[i] = moved[i] + G
        assert not verify(tuple(moved), proof), i


@pytest.mark.parametrize("name", SYSTEMS)
def test_txid_substitution_rejects(name):
    case, verify, _ = SYSTEMS[name]
    stmt, proof = case()
    for i in range(32):
        txid = bytearray(TXID)
        txid[i] ^= 0x80
        assert not verify(stmt, proof, ctx(txid=bytes(txid)))


@pytest.mark.parametrize("name", SYSTEMS)
def test_verification_is_deterministic(name):
    case, verify, _ = SYSTEMS[name]
    stmt, proof = case()
    assert all(verify(stmt, proof) for _ in range(3))


def test_seeded_proofs_are_reproducible():
    a = consistency_case(rng=Rng("same"))[1]
    b = consistency_case(rng=Rng("same"))[1]
    assert a == b


def test_short_proof_bytes_raise():
    with pytest.raises(DecodeError):
        ConsistencyProof.from_bytes(bytes(127))


@given(v=st.integers(-(2**40), 2**40), seed=st.binary(min_size=1, max_size=8))
@settings(max_examples=50, deadline=None)
def test_consistency_complete(v, seed):
    stmt, proof = consistency_case(v, Rng(seed))
    assert verify_cons(stmt, proof)


@given(v=st.integers(-(2**40), 2**40), seed=st.binary(min_size=1, max_size=8))
@settings(max_examples=50, deadline=None)
def test_equivalence_complete(v, seed):
    stmt, proof = equivalence_case(v, Rng(seed))
    assert verify_eq(stmt, proof)


@given(seed=st.binary(min_size=1, max_size=8))
@settings(max_examples=50, deadline=None)
def test_dleq_complete(seed):
    stmt, proof = dleq_case(Rng(seed))
    assert verify_dleq(stmt, proof)
