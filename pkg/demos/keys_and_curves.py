"""
Curves, keypairs and key vectors
================================

Every message row in training gets its own keypair. This walks through what
one keypair looks like on each curve and how it becomes a network input.
"""

import time

import numpy as np

from eccanc.ecc import (
    CURVE_NAMES,
    curve_by_name,
    decode_public_key,
    encode_private_key,
    encode_public_key,
    generate_keypair,
    point_add,
    sample_keypairs,
    scalar_mult,
)

rng = np.random.default_rng(2024)

# domain parameters and vector widths
for name in CURVE_NAMES:
    c = curve_by_name(name)
    print(f"{name}: {c.bits}-bit field, public vector {c.public_len}, private vector {c.private_len}")

# one keypair, on the slow but obviously-correct path
c = curve_by_name("secp256k1")
kp = generate_keypair(c, rng)
print("\nd  =", hex(kp.d))
print("Q.x =", hex(kp.Q[0]))

# the group law agrees with scalar multiplication: 3G = G + 2G
assert scalar_mult(3, c.G, c) == point_add(c.G, scalar_mult(2, c.G, c), c)

# key vectors are bytes / 255: a parity prefix then big-endian x
pub = encode_public_key(kp.Q, c)
priv = encode_private_key(kp.d, c)
print("\npublic vector head :", np.round(pub[:6] * 255).astype(int))
print("private vector head:", np.round(priv[:6] * 255).astype(int))
assert decode_public_key(pub, c) == kp.Q

# the batched path training uses: 512 keypairs per call
for name in CURVE_NAMES:
    c = curve_by_name(name)
    sample_keypairs(512, c, rng)   # first call builds the comb table
    t = time.perf_counter()
    priv, pub = sample_keypairs(512, c, rng)
    dt = time.perf_counter() - t
    print(f"{name}: 512 keypairs in {dt * 1e3:.1f} ms  shapes {priv.shape} {pub.shape}")
