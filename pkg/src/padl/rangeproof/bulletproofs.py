"""Single-value Bulletproofs range proof with a logarithmic inner-product argument.

Proves ``V = v*g + gamma*h`` with ``0 <= v < 2**n`` (``n`` a power of two).
Proof layout, all 32-byte fields::

    A | S | T1 | T2 | tau_x | mu | t_hat | (L_j | R_j) * log2(n) | a | b

which is ``(9 + 2*log2(n)) * 32`` bytes, 608 bytes for ``n = 32``.

Verification folds both checks (polynomial identity and inner product) into
one multi-scalar equation; :func:`verify_batch` adds several such equations
under hash-derived weights and shares the generator terms.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

from ..group import (
    IDENTITY, L, CommitKey, DecodeError, Point, Rng, default_rng, hash_to_point,
    inverse, msm, scalar_from_bytes, scalar_to_bytes,
)
from ..transcript import Transcript

MAX_BITS = 64


@lru_cache(maxsize=None)
def generators(n: int):
    gs = tuple(hash_to_point(b"padl/bp/G", i.to_bytes(4, "little")) for i in range(n))
    hs = tuple(hash_to_point(b"padl/bp/H", i.to_bytes(4, "little")) for i in range(n))
    return gs, hs, hash_to_point(b"padl/bp/U")


def _check_bits(n: int) -> int:
    if n < 1 or n > MAX_BITS or n & (n - 1):
        raise ValueError(f"bit length must be a power of two in [1, {MAX_BITS}], got {n}")
    return n.bit_length() - 1


def _powers(x: int, n: int) -> list[int]:
    out, acc = [], 1
    for _ in range(n):
        out.append(acc)
        acc = acc * x % L
    return out


def _inner(a, b) -> int:
    return sum(x * y for x, y in zip(a, b)) % L


@dataclass(frozen=True)
class _Proof:
    A: Point
    S: Point
    T1: Point
    T2: Point
    tau_x: int
    mu: int
    t_hat: int
    Ls: tuple
    Rs: tuple
    a: int
    b: int

    def to_bytes(self) -> bytes:
        parts = [self.A, self.S, self.T1, self.T2]
        out = b"".join(p.encode() for p in parts)
        out += b"".join(scalar_to_bytes(x) for x in (self.tau_x, self.mu, self.t_hat))
        for l, r in zip(self.Ls, self.Rs):
            out += l.encode() + r.encode()
        return out + scalar_to_bytes(self.a) + scalar_to_bytes(self.b)

    @classmethod
    def from_bytes(cls, data: bytes, n: int) -> "_Proof":
        rounds = _check_bits(n)
        if len(data) != proof_size(n):
            raise DecodeError(f"bulletproof for n={n} must be {proof_size(n)} bytes")
        chunks = [data[i:i + 32] for i in range(0, len(data), 32)]
        A, S, T1, T2 = (Point.decode(c) for c in chunks[:4])
        tau_x, mu, t_hat = (scalar_from_bytes(c) for c in chunks[4:7])
        lr = chunks[7:7 + 2 * rounds]
        Ls = tuple(Point.decode(lr[2 * j]) for j in range(rounds))
        Rs = tuple(Point.decode(lr[2 * j + 1]) for j in range(rounds))
        a, b = (scalar_from_bytes(c) for c in chunks[-2:])
        return cls(A, S, T1, T2, tau_x, mu, t_hat, Ls, Rs, a, b)


def proof_size(n: int) -> int:
    return (9 + 2 * _check_bits(n)) * 32


def _start(transcript: Transcript, ck: CommitKey, V: Point, n: int) -> None:
    transcript.append(b"proof", b"bulletproof")
    transcript.append(b"n", n)
    transcript.append_points(b"stmt", [ck.g, ck.h, V])


def prove(ck: CommitKey, v: int, gamma: int, n: int, transcript: Transcript,
          rng: Rng | None = None) -> bytes:
    _check_bits(n)
    if not 0 <= v < 2**n:
        raise ValueError(f"value outside [0, 2^{n})")
    rng = default_rng(rng)
    gs, hs, U = generators(n)
    V = ck.commit(v, gamma)
    _start(transcript, ck, V, n)

    a_l = [(v >> i) & 1 for i in range(n)]
    a_r = [(x - 1) % L for x in a_l]
    alpha = rng.scalar()
    # a_l/a_r are 0/1 and 0/-1: add or subtract generators, no multiplications
    A = ck.h * alpha
    for i in range(n):
        A = A + gs[i] if a_l[i] else A - hs[i]
    s_l = [rng.scalar() for _ in range(n)]
    s_r = [rng.scalar() for _ in range(n)]
    rho = rng.scalar()
    S = ck.h * rho + msm(s_l, gs) + msm(s_r, hs)
    transcript.append_points(b"AS", [A, S])
    y = transcript.challenge(b"y")
    z = transcript.challenge(b"z")

    yn = _powers(y, n)
    twos = _powers(2, n)
    z2 = z * z % L
    l0 = [(x - z) % L for x in a_l]
    l1 = s_l
    r0 = [(yn[i] * (a_r[i] + z) + z2 * twos[i]) % L for i in range(n)]
    r1 = [yn[i] * s_r[i] % L for i in range(n)]
    t1 = (_inner(l0, r1) + _inner(l1, r0)) % L
    t2 = _inner(l1, r1)
    tau1, tau2 = rng.scalar(), rng.scalar()
    T1 = ck.commit(t1, tau1)
    T2 = ck.commit(t2, tau2)
    transcript.append_points(b"T", [T1, T2])
    x = transcript.challenge(b"x")

    l = [(l0[i] + l1[i] * x) % L for i in range(n)]
    r = [(r0[i] + r1[i] * x) % L for i in range(n)]
    t_hat = _inner(l, r)
    tau_x = (tau2 * x * x + tau1 * x + z2 * gamma) % L
    mu = (alpha + rho * x) % L
    for label, val in ((b"tau_x", tau_x), (b"mu", mu), (b"t_hat", t_hat)):
        transcript.append_scalar(label, val)
    w = transcript.challenge(b"w")
    Q = U * w

    y_inv = inverse(y)
    hs_prime = [h * yi for h, yi in zip(hs, _powers(y_inv, n))]
    Ls, Rs, a, b = _ipa_prove(list(gs), hs_prime, Q, l, r, transcript)
    return _Proof(A, S, T1, T2, tau_x, mu, t_hat, tuple(Ls), tuple(Rs), a, b).to_bytes()


def _ipa_prove(gs, hs, Q, a, b, transcript):
    Ls, Rs = [], []
    while len(a) > 1:
        k = len(a) // 2
        c_l = _inner(a[:k], b[k:])
        c_r = _inner(a[k:], b[:k])
        Lp = msm(a[:k], gs[k:]) + msm(b[k:], hs[:k]) + Q * c_l
        Rp = msm(a[k:], gs[:k]) + msm(b[:k], hs[k:]) + Q * c_r
        Ls.append(Lp)
        Rs.append(Rp)
        transcript.append_points(b"LR", [Lp, Rp])
        u = transcript.challenge(b"u")
        ui = inverse(u)
        a = [(a[i] * u + a[k + i] * ui) % L for i in range(k)]
        b = [(b[i] * ui + b[k + i] * u) % L for i in range(k)]
        gs = [gs[i] * ui + gs[k + i] * u for i in range(k)]
        hs = [hs[i] * u + hs[k + i] * ui for i in range(k)]
    return Ls, Rs, a[0], b[0]


def _equation(ck: CommitKey, V: Point, n: int, proof: _Proof, transcript: Transcript, weight: int):
    """Coefficients of the combined check ``sum coeff * base == identity``.

    Returns ``(shared, own)`` where ``shared`` maps generator keys
    (``'g'``, ``'h'``, ``'U'``, ``('G', i)``, ``('H', i)``) to scalars and
    ``own`` lists ``(scalar, point)`` terms specific to this proof.
    """
    rounds = _check_bits(n)
    _start(transcript, ck, V, n)
    transcript.append_points(b"AS", [proof.A, proof.S])
    y = transcript.challenge(b"y")
    z = transcript.challenge(b"z")
    transcript.append_points(b"T", [proof.T1, proof.T2])
    x = transcript.challenge(b"x")
    for label, val in ((b"tau_x", proof.tau_x), (b"mu", proof.mu), (b"t_hat", proof.t_hat)):
        transcript.append_scalar(label, val)
    w = transcript.challenge(b"w")
    us = []
    for Lp, Rp in zip(proof.Ls, proof.Rs):
        transcript.append_points(b"LR", [Lp, Rp])
        us.append(transcript.challenge(b"u"))
    if any(u == 0 for u in us) or y == 0:
        return None

    yn = _powers(y, n)
    y_inv_n = _powers(inverse(y), n)
    twos = _powers(2, n)
    z2 = z * z % L
    z3 = z2 * z % L
    delta = ((z - z2) * sum(yn) - z3 * sum(twos)) % L

    u_inv = [inverse(u) for u in us]
    # s_i = prod_j u_j^{+1 if bit (rounds-1-j) of i is set else -1}
    s = [1] * n
    for i in range(n):
        acc = 1
        for j in range(rounds):
            acc = acc * (us[j] if (i >> (rounds - 1 - j)) & 1 else u_inv[j]) % L
        s[i] = acc
    a, b = proof.a, proof.b
    beta = weight

    shared = {}
    # inner-product side, weight 1
    for i in range(n):
        shared[("G", i)] = (-z - a * s[i]) % L
        s_inv = inverse(s[i])
        shared[("H", i)] = (z + (z2 * twos[i] - b * s_inv) * y_inv_n[i]) % L
    shared["U"] = w * (proof.t_hat - a * b) % L
    shared["h"] = (-proof.mu + beta * proof.tau_x) % L
    shared["g"] = beta * (proof.t_hat - delta) % L
    own = [(1, proof.A), (x, proof.S)]
    own += [(u * u % L, Lp) for u, Lp in zip(us, proof.Ls)]
    own += [(ui * ui % L, Rp) for ui, Rp in zip(u_inv, proof.Rs)]
    own += [((-beta * z2) % L, V), ((-beta * x) % L, proof.T1), ((-beta * x * x) % L, proof.T2)]
    return shared, own


def _weight(*chunks: bytes) -> int:
    h = hashlib.sha512(b"padl/bp/weight")
    for c in chunks:
        h.update(len(c).to_bytes(8, "little"))
        h.update(c)
    return int.from_bytes(h.digest(), "little") % L or 1


def _evaluate(ck: CommitKey, n_max: int, shared: dict, own: list) -> bool:
    gs, hs, U = generators(n_max)
    acc = IDENTITY
    for key, coeff in shared.items():
        if key == "g":
            base = ck.g
        elif key == "h":
            base = ck.h
        elif key == "U":
            base = U
        else:
            kind, i = key
            base = gs[i] if kind == "G" else hs[i]
        acc = acc + base * coeff
    for coeff, p in own:
        acc = acc + p * coeff
    return acc.is_identity


def verify(ck: CommitKey, V: Point, n: int, data: bytes, transcript: Transcript) -> bool:
    return verify_batch(ck, [(V, n, data, transcript)])


def verify_batch(ck: CommitKey, items) -> bool:
    """Verify ``(V, n, data, transcript)`` items as one weighted equation."""
    if not items:
        return True
    parsed = []
    for V, n, data, transcript in items:
        try:
            parsed.append((V, n, _Proof.from_bytes(data, n), transcript))
        except (DecodeError, ValueError):
            return False
    seed = b"".join(V.encode() + bytes([n.bit_length()]) + d for V, n, d, _ in items)
    shared_total: dict = {}
    own_total: list = []
    n_max = max(n for _, n, _, _ in parsed)
    for k, (V, n, proof, transcript) in enumerate(parsed):
        outer = 1 if len(parsed) == 1 else _weight(seed, b"outer", k.to_bytes(4, "little"))
        inner_w = _weight(seed, b"inner", k.to_bytes(4, "little"))
        eq = _equation(ck, V, n, proof, transcript, inner_w)
        if eq is None:
            return False
        shared, own = eq
        for key, c in shared.items():
            shared_total[key] = (shared_total.get(key, 0) + outer * c) % L
        own_total += [(outer * c % L, p) for c, p in own]
    return _evaluate(ck, n_max, shared_total, own_total)
