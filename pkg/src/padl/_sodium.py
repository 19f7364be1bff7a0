"""ctypes binding to the Ristretto255 primitives of a system libsodium.

Only the handful of calls needed by :mod:`padl.group` are exposed.  Every
function takes and returns 32-byte ``bytes`` objects.
"""
import ctypes
import ctypes.util
import os

BYTES = 32
HASHBYTES = 64


def _load():
    candidates = []
    env = os.environ.get("PADL_LIBSODIUM")
    if env:
        candidates.append(env)
    found = ctypes.util.find_library("sodium")
    if found:
        candidates.append(found)
    candidates += ["libsodium.so.23", "libsodium.so", "libsodium.dylib"]
    for name in candidates:
        try:
            lib = ctypes.CDLL(name)
        except OSError:
            continue
        if hasattr(lib, "crypto_core_ristretto255_from_hash"):
            if lib.sodium_init() < 0:
                raise ImportError("sodium_init() failed")
            return lib
    raise ImportError(
        "libsodium >= 1.0.18 with ristretto255 support is required; "
        "set PADL_LIBSODIUM to its path if it is not on the loader path"
    )


_lib = _load()

for _name in (
    "crypto_core_ristretto255_add",
    "crypto_core_ristretto255_sub",
    "crypto_core_ristretto255_from_hash",
    "crypto_core_ristretto255_is_valid_point",
    "crypto_scalarmult_ristretto255",
    "crypto_scalarmult_ristretto255_base",
):
    getattr(_lib, _name).restype = ctypes.c_int


def add(p: bytes, q: bytes) -> bytes:
    out = ctypes.create_string_buffer(BYTES)
    if _lib.crypto_core_ristretto255_add(out, p, q) != 0:
        raise ValueError("invalid ristretto255 encoding")
    return out.raw


def sub(p: bytes, q: bytes) -> bytes:
    out = ctypes.create_string_buffer(BYTES)
    if _lib.crypto_core_ristretto255_sub(out, p, q) != 0:
        raise ValueError("invalid ristretto255 encoding")
    return out.raw


def from_hash(h: bytes) -> bytes:
    if len(h) != HASHBYTES:
        raise ValueError("from_hash needs 64 bytes")
    out = ctypes.create_string_buffer(BYTES)
    _lib.crypto_core_ristretto255_from_hash(out, h)
    return out.raw


def is_valid_point(p: bytes) -> bool:
    return len(p) == BYTES and _lib.crypto_core_ristretto255_is_valid_point(p) == 1


# libsodium signals an identity result with -1; the output buffer then holds
# the all-zero encoding, which is exactly the identity, so that is not an error.
def scalarmult(n: bytes, p: bytes) -> bytes:
    out = ctypes.create_string_buffer(BYTES)
    _lib.crypto_scalarmult_ristretto255(out, n, p)
    return out.raw


def scalarmult_base(n: bytes) -> bytes:
    out = ctypes.create_string_buffer(BYTES)
    _lib.crypto_scalarmult_ristretto255_base(out, n)
    return out.raw
