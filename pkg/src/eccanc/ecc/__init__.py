"""Prime-curve arithmetic, keypair generation and key-vector encoding."""

from .arith import PointNotOnCurveError, point_add, point_neg, scalar_mult
from .curves import CURVE_NAMES, CURVES, INFINITY, CurveParams, UnknownCurveError, curve_by_name
from .keys import (
    KeyPair,
    compress_point,
    decode_private_key,
    decode_public_key,
    decompress_point,
    encode_private_key,
    encode_public_key,
    generate_keypair,
    random_scalar,
    sample_keypairs,
    sample_public_keys,
)

__all__ = [
    "CURVES", "CURVE_NAMES", "INFINITY", "CurveParams", "KeyPair", "PointNotOnCurveError",
    "UnknownCurveError", "compress_point", "curve_by_name", "decode_private_key",
    "decode_public_key", "decompress_point", "encode_private_key", "encode_public_key",
    "generate_keypair", "point_add", "point_neg", "random_scalar", "sample_keypairs",
    "sample_public_keys", "scalar_mult",
]
