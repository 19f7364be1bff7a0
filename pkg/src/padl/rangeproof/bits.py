"""Reference range proof: bit decomposition with one OR-proof per bit.

``V = sum 2^i * C_i`` where every ``C_i`` commits to 0 or 1.  ``C_0`` is not
sent, the verifier derives it from ``V``.  Each bit carries a Cramer-Damgard-
Schoenmakers OR-proof of ``C_i = r*h`` or ``C_i - g = r*h``; all bits share a
single Fiat-Shamir challenge ``e`` with ``e = e0_i + e1_i``.

Layout: ``e | C_1..C_{n-1} | (e0_i | s0_i | s1_i) * n``, ``(1 + (n-1) + 3n) * 32``
bytes.  Linear size; kept as a simple, auditable cross-check of the
logarithmic backend.
"""
from __future__ import annotations

from ..group import (
    L, CommitKey, DecodeError, Point, Rng, default_rng, point_sum,
    scalar_from_bytes, scalar_to_bytes,
)
from ..transcript import Transcript

MAX_BITS = 64


def proof_size(n: int) -> int:
    _check_bits(n)
    return (4 * n) * 32


def _check_bits(n: int) -> None:
    if not 1 <= n <= MAX_BITS:
        raise ValueError(f"bit length must be in [1, {MAX_BITS}], got {n}")


def _derive_c0(V: Point, rest) -> Point:
    return V - point_sum(c * (1 << (i + 1)) for i, c in enumerate(rest))


def _challenge(transcript: Transcript, ck: CommitKey, V: Point, n: int, cs, r0s, r1s) -> int:
    transcript.append(b"proof", b"bit-range")
    transcript.append(b"n", n)
    transcript.append_points(b"stmt", [ck.g, ck.h, V])
    transcript.append_points(b"C", cs)
    transcript.append_points(b"R0", r0s)
    transcript.append_points(b"R1", r1s)
    return transcript.challenge(b"e")


def prove(ck: CommitKey, v: int, gamma: int, n: int, transcript: Transcript,
          rng: Rng | None = None) -> bytes:
    _check_bits(n)
    if not 0 <= v < 2**n:
        raise ValueError(f"value outside [0, 2^{n})")
    rng = default_rng(rng)
    bits = [(v >> i) & 1 for i in range(n)]
    rs = [0] + [rng.scalar() for _ in range(n - 1)]
    rs[0] = (gamma - sum(r << i for i, r in enumerate(rs) if i)) % L
    cs = [ck.commit(b, r) for b, r in zip(bits, rs)]
    V = ck.commit(v, gamma)

    ks, fake_e, fake_s, r0s, r1s = [], [], [], [], []
    for b, c in zip(bits, cs):
        k, e_f, s_f = rng.scalar(), rng.scalar(), rng.scalar()
        ks.append(k)
        fake_e.append(e_f)
        fake_s.append(s_f)
        real = ck.h * k
        if b == 0:
            # simulate the "bit is 1" branch on C - g
            r0s.append(real)
            r1s.append(ck.h * s_f - (c - ck.g) * e_f)
        else:
            r0s.append(ck.h * s_f - c * e_f)
            r1s.append(real)
    e = _challenge(transcript, ck, V, n, cs[1:], r0s, r1s)

    out = scalar_to_bytes(e) + b"".join(c.encode() for c in cs[1:])
    for b, r, k, e_f, s_f in zip(bits, rs, ks, fake_e, fake_s):
        e_real = (e - e_f) % L
        s_real = (k + e_real * r) % L
        if b == 0:
            e0, s0, s1 = e_real, s_real, s_f
        else:
            e0, s0, s1 = e_f, s_f, s_real
        out += scalar_to_bytes(e0) + scalar_to_bytes(s0) + scalar_to_bytes(s1)
    return out


def verify(ck: CommitKey, V: Point, n: int, data: bytes, transcript: Transcript) -> bool:
    try:
        _check_bits(n)
        if len(data) != proof_size(n):
            return False
        chunks = [data[i:i + 32] for i in range(0, len(data), 32)]
        e = scalar_from_bytes(chunks[0])
        rest = [Point.decode(c) for c in chunks[1:n]]
        triples = [tuple(scalar_from_bytes(c) for c in chunks[n + 3 * i: n + 3 * i + 3])
                   for i in range(n)]
    except DecodeError:
        return False
    cs = [_derive_c0(V, rest)] + rest
    r0s, r1s = [], []
    for c, (e0, s0, s1) in zip(cs, triples):
        e1 = (e - e0) % L
        r0s.append(ck.h * s0 - c * e0)
        r1s.append(ck.h * s1 - (c - ck.g) * e1)
    return _challenge(transcript, ck, V, n, rest, r0s, r1s) == e
