"""Keypair generation and the byte/255 key-vector encoding fed to the networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arith import scalar_mult
from .batch import comb_context
from .curves import AffinePoint, CurveParams


@dataclass(frozen=True)
class KeyPair:
    d: int
    Q: AffinePoint


def random_scalar(c: CurveParams, rng: np.random.Generator) -> int:
    """Uniform integer in [1, n-1] by rejection sampling."""
    nbits = c.n.bit_length()
    nbytes = (nbits + 7) // 8
    top_mask = (1 << (nbits - 8 * (nbytes - 1))) - 1
    while True:
        raw = bytearray(rng.bytes(nbytes))
        raw[0] &= top_mask
        d = int.from_bytes(raw, "big")
        if 1 <= d < c.n:
            return d


def generate_keypair(c: CurveParams, rng: np.random.Generator) -> KeyPair:
    d = random_scalar(c, rng)
    return KeyPair(d, scalar_mult(d, c.G, c))


def compress_point(Q: AffinePoint, c: CurveParams) -> bytes:
    if Q is None:
        raise ValueError("the point at infinity has no compressed encoding")
    x, y = Q
    return bytes([2 + (y & 1)]) + x.to_bytes(c.byte_len, "big")


def _sqrt_mod(a: int, p: int) -> int:
    """Tonelli-Shanks square root; raises if ``a`` is a non-residue."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        raise ValueError("not a quadratic residue")
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def decompress_point(data: bytes, c: CurveParams) -> AffinePoint:
    if len(data) != c.byte_len + 1 or data[0] not in (2, 3):
        raise ValueError("malformed compressed point")
    x = int.from_bytes(data[1:], "big")
    if x >= c.p:
        raise ValueError("x coordinate out of range")
    y = _sqrt_mod(x * x * x + c.a * x + c.b, c.p)
    if (y & 1) != (data[0] & 1):
        y = c.p - y
    return (x, y)


def encode_public_key(Q: AffinePoint, c: CurveParams) -> np.ndarray:
    return np.frombuffer(compress_point(Q, c), dtype=np.uint8) / 255.0


def encode_private_key(d: int, c: CurveParams) -> np.ndarray:
    if not 1 <= d < c.n:
        raise ValueError("private scalar out of range")
    return np.frombuffer(d.to_bytes(c.byte_len, "big"), dtype=np.uint8) / 255.0


def _vector_bytes(vec) -> bytes:
    b = np.rint(np.asarray(vec, dtype=np.float64) * 255.0)
    if b.min() < 0 or b.max() > 255:
        raise ValueError("key vector entries must lie in [0, 1]")
    return bytes(b.astype(np.uint8))


def decode_public_key(vec, c: CurveParams) -> AffinePoint:
    return decompress_point(_vector_bytes(vec), c)


def decode_private_key(vec, c: CurveParams) -> int:
    return int.from_bytes(_vector_bytes(vec), "big")


def sample_scalars(n: int, c: CurveParams, rng: np.random.Generator) -> list[int]:
    return [random_scalar(c, rng) for _ in range(n)]


def sample_scalar_bytes(n: int, c: CurveParams, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform scalars in [1, n-1] as big-endian ``[n, byte_len]`` uint8 rows.

    Vectorised rejection sampling: rows that are zero or not below the group
    order are redrawn until every row is valid.
    """
    nbits = c.n.bit_length()
    L = c.byte_len
    if (nbits + 7) // 8 != L:
        raise ValueError("group order and field element widths differ")
    top_mask = (1 << (nbits - 8 * (L - 1))) - 1
    order = np.frombuffer(c.n.to_bytes(L, "big"), dtype=np.uint8).astype(np.int16)
    out = np.empty((n, L), dtype=np.uint8)
    todo = np.arange(n)
    while todo.size:
        rows = rng.integers(0, 256, size=(todo.size, L), dtype=np.uint8)
        rows[:, 0] &= top_mask
        diff = rows.astype(np.int16) - order
        nz = diff != 0
        first = np.argmax(nz, axis=1)
        below = nz.any(axis=1) & (diff[np.arange(todo.size), first] < 0)
        ok = below & rows.any(axis=1)
        out[todo[ok]] = rows[ok]
        todo = todo[~ok]
    return out


def sample_keypairs(n: int, c: CurveParams, rng: np.random.Generator,
                    with_private: bool = True):
    """Draw ``n`` independent keypairs and return their encoded vectors.

    Returns ``(priv, pub)`` arrays of shape ``[n, byte_len]`` and
    ``[n, byte_len + 1]``, or only ``pub`` when ``with_private`` is false.
    """
    scalars = sample_scalar_bytes(n, c, rng)
    pub = comb_context(c).public_bytes(scalars) / 255.0
    if not with_private:
        return pub
    return scalars / 255.0, pub


def sample_public_keys(n: int, c: CurveParams, rng: np.random.Generator) -> np.ndarray:
    return sample_keypairs(n, c, rng, with_private=False)
