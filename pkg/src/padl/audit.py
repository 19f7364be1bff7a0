"""Audit proofs over a ledger snapshot: balance, liquidity, rate, full audit.

Every audit covers rows ``[0, upto)`` and binds the state hash after row
``upto - 1`` into its transcript, so a proof cannot be replayed against a
different ledger prefix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .group import IDENTITY, DecodeError, Point, Rng, inverse, point_sum
from .pact import DEFAULT_MAX_MAGNITUDE, ExtractionError, Wallet, solve_small_dlog
from .rangeproof import RangeError, RangeProof, prove_range, verify_range
from .sigma import DlogEqualityProof, prove_dlog_equality, verify_dlog_equality
from .transcript import Transcript


class AuditError(Exception):
    pass


def _upto(ledger, upto: int | None) -> int:
    upto = ledger.height if upto is None else upto
    if not 0 <= upto <= ledger.height:
        raise AuditError(f"audit range {upto} exceeds ledger height {ledger.height}")
    return upto


def _state_at(ledger, upto: int) -> bytes:
    return ledger.state_hashes[upto - 1] if upto else ledger.anchor


def _transcript(kind: str, ledger, upto: int, participant: int, *fields) -> Transcript:
    t = (Transcript(b"padl/audit/" + kind.encode())
         .append(b"state", _state_at(ledger, upto))
         .append(b"upto", upto)
         .append(b"participant", participant))
    for f in fields:
        t.append(b"param", str(f) if isinstance(f, int) else f)
    return t


def _cells(ledger, p: int, asset: str | None, rows: Sequence[int]):
    for t in rows:
        tx = ledger.rows[t]
        if p not in tx.participants:
            continue
        for a in tx.assets:
            if asset is None or a == asset:
                yield t, a, tx.cell(a, p)


def _check_rows(ledger, rows: Sequence[int], upto: int) -> tuple[int, ...]:
    rows = tuple(rows)
    if any(not isinstance(t, int) or not 0 <= t < upto for t in rows):
        raise AuditError("row index outside the audited range")
    if len(set(rows)) != len(rows):
        raise AuditError("duplicate row index")
    return rows


def _dleq_or_none(h, pk, c, tau, sk, transcript, rng):
    if c.is_identity:
        # nothing to prove: both sides vanish
        return None
    return prove_dlog_equality(h, pk, c, tau, sk, transcript, rng)


def _check_dleq(h, pk, c, tau, proof, transcript) -> bool:
    if c.is_identity:
        return tau.is_identity and proof is None
    return proof is not None and verify_dlog_equality(h, pk, c, tau, proof, transcript)


def _proof_hex(proof) -> str | None:
    return proof.to_bytes().hex() if proof is not None else None


def _proof_from_hex(s):
    return DlogEqualityProof.from_bytes(bytes.fromhex(s)) if s else None


# -- balance --------------------------------------------------------------

@dataclass(frozen=True)
class BalanceAudit:
    participant: int
    asset: str
    claimed: int
    upto: int
    proof: DlogEqualityProof | None

    def to_json(self) -> dict:
        return {"type": "balance", "participant": self.participant, "asset": self.asset,
                "parameters": {"claimed": self.claimed, "upto": self.upto},
                "proof": _proof_hex(self.proof)}

    @classmethod
    def from_json(cls, obj) -> "BalanceAudit":
        try:
            prm = obj["parameters"]
            return cls(int(obj["participant"]), str(obj["asset"]), int(prm["claimed"]),
                       int(prm["upto"]), _proof_from_hex(obj.get("proof")))
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"malformed balance audit: {exc}") from None

    def size(self) -> int:
        return DlogEqualityProof.SIZE if self.proof else 0


def _balance_statement(ledger, p, asset, claimed, upto):
    cells = [c for _, _, c in _cells(ledger, p, asset, range(upto))]
    c1 = point_sum(c.cm for c in cells) - ledger.ck.g * claimed
    c2 = point_sum(c.tk for c in cells)
    return c1, c2


def prove_balance(ledger, p: int, asset: str, sk: int, claimed: int, *,
                  upto: int | None = None, rng: Rng | None = None) -> BalanceAudit:
    """Show the account holds ``claimed`` of ``asset`` without opening any cell.

    ``c1 = sum(cm) - claimed*G`` is then ``R*H`` and ``c2 = sum(tk) = sk*c1``.
    """
    upto = _upto(ledger, upto)
    ledger.asset(asset)
    c1, c2 = _balance_statement(ledger, p, asset, claimed, upto)
    t = _transcript("balance", ledger, upto, p, asset, claimed)
    proof = _dleq_or_none(ledger.ck.h, ledger.pk(p), c1, c2, sk, t, rng)
    return BalanceAudit(p, asset, claimed, upto, proof)


def verify_balance(ledger, audit: BalanceAudit) -> bool:
    try:
        upto = _upto(ledger, audit.upto)
        ledger.asset(audit.asset)
        pk = ledger.pk(audit.participant)
    except (AuditError, KeyError, IndexError):
        return False
    c1, c2 = _balance_statement(ledger, audit.participant, audit.asset, audit.claimed, upto)
    t = _transcript("balance", ledger, upto, audit.participant, audit.asset, audit.claimed)
    return _check_dleq(ledger.ck.h, pk, c1, c2, audit.proof, t)


# -- liquidity ------------------------------------------------------------

@dataclass(frozen=True)
class LiquidityAudit:
    participant: int
    asset: str
    D: int
    N: int
    upto: int
    c_r: Point
    proof: RangeProof

    def to_json(self) -> dict:
        return {"type": "liquidity", "participant": self.participant, "asset": self.asset,
                "parameters": {"D": self.D, "N": self.N, "upto": self.upto, "c_r": self.c_r.hex()},
                "proof": self.proof.to_bytes().hex()}

    @classmethod
    def from_json(cls, obj) -> "LiquidityAudit":
        try:
            prm = obj["parameters"]
            return cls(int(obj["participant"]), str(obj["asset"]), int(prm["D"]), int(prm["N"]),
                       int(prm["upto"]), Point.decode(bytes.fromhex(prm["c_r"])),
                       RangeProof.from_bytes(bytes.fromhex(obj["proof"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"malformed liquidity audit: {exc}") from None

    def size(self) -> int:
        return 32 + len(self.proof)


def _check_ratio(D: int, N: int) -> None:
    if D <= 0 or N <= 0:
        raise AuditError("D and N must be positive integers")


def _liquidity_points(ledger, p, asset, upto):
    c1 = c2 = IDENTITY
    for _, a, c in _cells(ledger, p, None, range(upto)):
        if c.cm_c is None:
            raise AuditError("liquidity needs complementary commitments (not available on reduced cells)")
        c2 = c2 + c.cm_c
        if a == asset:
            c1 = c1 + c.cm_c
    return c1, c2


def prove_liquidity(ledger, wallet: Wallet, asset: str, D: int, N: int, *,
                    upto: int | None = None, bits: int | None = None,
                    rng: Rng | None = None) -> LiquidityAudit:
    """Show ``holding(asset) / holding(all) <= D / N``.

    With ``c1`` the sum of complementary commitments for ``asset`` and ``c2``
    over all assets, ``c_r = D*c2 - N*c1`` commits to ``D*total - N*part``
    and a range proof shows that is non-negative.
    """
    _check_ratio(D, N)
    upto = _upto(ledger, upto)
    ledger.asset(asset)
    p = wallet.index
    bits = bits or ledger.config.range_bits
    c1, c2 = _liquidity_points(ledger, p, asset, upto)
    v1 = r1 = v2 = r2 = 0
    for t, a, c in _cells(ledger, p, None, range(upto)):
        try:
            v, r = wallet.store[(ledger.rows[t].txid, a)]
        except KeyError:
            raise AuditError(f"wallet has no opening for row {t} asset {a!r}") from None
        v2, r2 = v2 + v, r2 + r
        if a == asset:
            v1, r1 = v1 + v, r1 + r
    v_r = D * v2 - N * v1
    if not 0 <= v_r < 2**bits:
        raise RangeError(f"ratio above threshold: D*total - N*part = {v_r}")
    c_r = c2 * D - c1 * N
    t = _transcript("liquidity", ledger, upto, p, asset, D, N, c_r)
    proof = prove_range(ledger.ck, v_r, D * r2 - N * r1, bits, t, rng, ledger.config.backend)
    return LiquidityAudit(p, asset, D, N, upto, c_r, proof)


def verify_liquidity(ledger, audit: LiquidityAudit, *, bits: int | None = None) -> bool:
    try:
        _check_ratio(audit.D, audit.N)
        upto = _upto(ledger, audit.upto)
        ledger.asset(audit.asset)
        c1, c2 = _liquidity_points(ledger, audit.participant, audit.asset, upto)
    except (AuditError, KeyError, IndexError):
        return False
    if c2 * audit.D - c1 * audit.N != audit.c_r:
        return False
    bits = bits or ledger.config.range_bits
    t = _transcript("liquidity", ledger, upto, audit.participant, audit.asset, audit.D, audit.N, audit.c_r)
    return verify_range(ledger.ck, audit.c_r, bits, audit.proof, t)


# -- rate -----------------------------------------------------------------

@dataclass(frozen=True)
class RateAudit:
    """``N * s1 * sum(v over txs1) == D * s2 * sum(v over txs2)``.

    ``signs = (s1, s2)`` in ``{+1, -1}`` orient each side; a coupon (incoming)
    against its principal (outgoing) uses ``(+1, -1)``.
    """
    participant: int
    asset: str
    D: int
    N: int
    txs1: tuple[int, ...]
    txs2: tuple[int, ...]
    signs: tuple[int, int]
    upto: int
    proof: DlogEqualityProof | None

    def to_json(self) -> dict:
        return {"type": "rate", "participant": self.participant, "asset": self.asset,
                "parameters": {"D": self.D, "N": self.N, "txs1": list(self.txs1),
                               "txs2": list(self.txs2), "signs": list(self.signs), "upto": self.upto},
                "proof": _proof_hex(self.proof)}

    @classmethod
    def from_json(cls, obj) -> "RateAudit":
        try:
            prm = obj["parameters"]
            s1, s2 = (int(s) for s in prm.get("signs", (1, 1)))
            return cls(int(obj["participant"]), str(obj["asset"]), int(prm["D"]), int(prm["N"]),
                       tuple(int(t) for t in prm["txs1"]), tuple(int(t) for t in prm["txs2"]),
                       (s1, s2), int(prm["upto"]), _proof_from_hex(obj.get("proof")))
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"malformed rate audit: {exc}") from None

    def size(self) -> int:
        return DlogEqualityProof.SIZE if self.proof else 0


def _rate_statement(ledger, p, asset, D, N, txs1, txs2, signs):
    s1, s2 = signs
    if s1 not in (1, -1) or s2 not in (1, -1):
        raise AuditError("signs must be +1 or -1")
    cells1 = [c for _, _, c in _cells(ledger, p, asset, txs1)]
    cells2 = [c for _, _, c in _cells(ledger, p, asset, txs2)]
    c1, tau1 = point_sum(c.cm for c in cells1), point_sum(c.tk for c in cells1)
    c2, tau2 = point_sum(c.cm for c in cells2), point_sum(c.tk for c in cells2)
    c = c1 * (s1 * N) - c2 * (s2 * D)
    tau = tau1 * (s1 * N) - tau2 * (s2 * D)
    return c, tau


def prove_rate(ledger, p: int, asset: str, sk: int, txs1: Sequence[int], txs2: Sequence[int],
               D: int, N: int, *, signs: tuple[int, int] = (1, 1), upto: int | None = None,
               rng: Rng | None = None) -> RateAudit:
    """Show the two row sets carry amounts in ratio ``D : N`` for this account.

    ``c = s1*N*c1 - s2*D*c2`` loses its ``G`` component exactly when the
    ratio holds, in which case ``tau = sk*c`` and a dlog-equality proof with
    ``pk = sk*H`` goes through.
    """
    _check_ratio(D, N)
    upto = _upto(ledger, upto)
    ledger.asset(asset)
    txs1, txs2 = _check_rows(ledger, txs1, upto), _check_rows(ledger, txs2, upto)
    c, tau = _rate_statement(ledger, p, asset, D, N, txs1, txs2, signs)
    t = _transcript("rate", ledger, upto, p, asset, D, N, repr((txs1, txs2, tuple(signs))))
    proof = _dleq_or_none(ledger.ck.h, ledger.pk(p), c, tau, sk, t, rng)
    return RateAudit(p, asset, D, N, txs1, txs2, tuple(signs), upto, proof)


def verify_rate(ledger, audit: RateAudit) -> bool:
    try:
        _check_ratio(audit.D, audit.N)
        upto = _upto(ledger, audit.upto)
        ledger.asset(audit.asset)
        pk = ledger.pk(audit.participant)
        txs1 = _check_rows(ledger, audit.txs1, upto)
        txs2 = _check_rows(ledger, audit.txs2, upto)
        c, tau = _rate_statement(ledger, audit.participant, audit.asset, audit.D, audit.N,
                                 txs1, txs2, audit.signs)
    except (AuditError, KeyError, IndexError):
        return False
    t = _transcript("rate", ledger, upto, audit.participant, audit.asset, audit.D, audit.N,
                    repr((txs1, txs2, tuple(audit.signs))))
    return _check_dleq(ledger.ck.h, pk, c, tau, audit.proof, t)


# -- full audit through issuer tokens --------------------------------------

def full_audit_extract(ledger, sk_issuer: int, row: int, asset: str, participant: int, *,
                       max_magnitude: int = DEFAULT_MAX_MAGNITUDE) -> int:
    """Read one cell in plaintext with the asset issuer's key."""
    try:
        issuer_pk = ledger.issuer_pk(asset)
    except KeyError:
        raise AuditError(f"unknown asset {asset!r}") from None
    if ledger.ck.h * sk_issuer != issuer_pk:
        raise AuditError(f"key is not the designated auditor of {asset!r}")
    if not 0 <= row < ledger.height:
        raise AuditError(f"no row {row}")
    tx = ledger.rows[row]
    if asset not in tx.assets or participant not in tx.participants:
        raise AuditError("cell not present in row")
    cell = tx.cell(asset, participant)
    if cell.issuer_tk is None:
        raise AuditError("cell carries no issuer token")
    try:
        return solve_small_dlog(cell.cm - cell.issuer_tk * inverse(sk_issuer), ledger.ck.g, max_magnitude)
    except ExtractionError as exc:
        raise AuditError(str(exc)) from None


AUDIT_TYPES = {"balance": BalanceAudit, "liquidity": LiquidityAudit, "rate": RateAudit}


def audit_from_json(obj):
    try:
        cls = AUDIT_TYPES[obj["type"]]
    except (KeyError, TypeError):
        raise DecodeError("unknown audit type") from None
    return cls.from_json(obj)


def verify_audit(ledger, audit) -> bool:
    if isinstance(audit, BalanceAudit):
        return verify_balance(ledger, audit)
    if isinstance(audit, LiquidityAudit):
        return verify_liquidity(ledger, audit)
    if isinstance(audit, RateAudit):
        return verify_rate(ledger, audit)
    raise TypeError(f"not an audit: {type(audit).__name__}")
