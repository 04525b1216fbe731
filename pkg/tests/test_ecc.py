import numpy as np
import pytest

from eccanc.ecc import (
    CURVE_NAMES,
    INFINITY,
    PointNotOnCurveError,
    UnknownCurveError,
    curve_by_name,
    decode_private_key,
    decode_public_key,
    encode_private_key,
    encode_public_key,
    generate_keypair,
    point_add,
    point_neg,
    random_scalar,
    sample_keypairs,
    scalar_mult,
)
from eccanc.ecc.batch import comb_context

ALL_CURVES = [curve_by_name(name) for name in CURVE_NAMES]
curve_ids = [c.name for c in ALL_CURVES]


def chain_mult(k, P, c):
    """Right-to-left binary expansion built only from point_add."""
    result = INFINITY
    addend = P
    while k:
        if k & 1:
            result = point_add(result, addend, c)
        addend = point_add(addend, addend, c)
        k >>= 1
    return result


def random_point(c, rng):
    return scalar_mult(random_scalar(c, rng), c.G, c)


class TestCurves:
    def test_secp256k1_coefficients(self):
        c = curve_by_name("secp256k1")
        assert (c.a, c.b) == (0, 7)

    def test_secp224r1_byte_len(self):
        assert curve_by_name("secp224r1").byte_len == 28

    @pytest.mark.parametrize("name,byte_len", [("secp256r1", 32), ("secp384r1", 48),
                                                ("secp521r1", 66)])
    def test_byte_lengths(self, name, byte_len):
        assert curve_by_name(name).byte_len == byte_len

    def test_unknown_curve(self):
        with pytest.raises(UnknownCurveError, match="secp256k1"):
            curve_by_name("secp999x1")

    @pytest.mark.parametrize("c", ALL_CURVES, ids=curve_ids)
    def test_domain_parameters(self, c):
        assert c.is_nonsingular()
        assert c.is_on_curve(c.G)
        assert scalar_mult(c.n, c.G, c) is INFINITY
        assert scalar_mult(c.n - 1, c.G, c) == point_neg(c.G, c)

    @pytest.mark.parametrize("c", ALL_CURVES, ids=curve_ids)
    def test_generator_matches_openssl(self, c):
        ec = pytest.importorskip("cryptography.hazmat.primitives.asymmetric.ec")
        curve = getattr(ec, c.name.upper())()
        for d in (1, 2, 0xDEADBEEF):
            nums = ec.derive_private_key(d, curve).public_key().public_numbers()
            assert scalar_mult(d, c.G, c) == (nums.x, nums.y)


class TestGroupLaw:
    c = curve_by_name("secp256k1")

    def test_identity(self):
        assert point_add(self.c.G, INFINITY, self.c) == self.c.G
        assert point_add(INFINITY, self.c.G, self.c) == self.c.G

    def test_inverse(self):
        assert point_add(self.c.G, point_neg(self.c.G, self.c), self.c) is INFINITY

    def test_doubling_matches_chain(self):
        assert point_add(self.c.G, self.c.G, self.c) == chain_mult(2, self.c.G, self.c)
        assert scalar_mult(2, self.c.G, self.c) == point_add(self.c.G, self.c.G, self.c)

    def test_off_curve_rejected(self):
        x, y = self.c.G
        with pytest.raises(PointNotOnCurveError):
            point_add((x, y + 1), self.c.G, self.c)
        with pytest.raises(PointNotOnCurveError):
            scalar_mult(3, (x, y + 1), self.c)

    def test_trivial_scalars(self):
        assert scalar_mult(0, self.c.G, self.c) is INFINITY
        assert scalar_mult(1, self.c.G, self.c) == self.c.G
        assert scalar_mult(5, INFINITY, self.c) is INFINITY

    @pytest.mark.parametrize("c", ALL_CURVES, ids=curve_ids)
    def test_commutative_and_associative(self, c):
        rng = np.random.default_rng(11)
        for _ in range(50):
            P, Q, R = (random_point(c, rng) for _ in range(3))
            assert point_add(P, Q, c) == point_add(Q, P, c)
            assert point_add(point_add(P, Q, c), R, c) == point_add(P, point_add(Q, R, c), c)


@pytest.mark.parametrize("c", ALL_CURVES, ids=curve_ids)
def test_scalar_mult_matches_chain_oracle(c):
    rng = np.random.default_rng(12)
    P = random_point(c, rng)
    for _ in range(100):
        k = random_scalar(c, rng)
        assert scalar_mult(k, P, c) == chain_mult(k, P, c)


@pytest.mark.parametrize("c", ALL_CURVES, ids=curve_ids)
def test_scalar_homomorphism(c):
    rng = np.random.default_rng(13)
    P = random_point(c, rng)
    for _ in range(50):
        k1, k2 = random_scalar(c, rng), random_scalar(c, rng)
        lhs = scalar_mult(k1 + k2, P, c)
        assert lhs == point_add(scalar_mult(k1, P, c), scalar_mult(k2, P, c), c)


class TestKeys:
    c = curve_by_name("secp256r1")

    def test_deterministic(self):
        a = generate_keypair(self.c, np.random.default_rng(5))
        b = generate_keypair(self.c, np.random.default_rng(5))
        assert a == b

    def test_public_key_on_curve(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            kp = generate_keypair(self.c, rng)
            assert 1 <= kp.d < self.c.n
            assert kp.Q is not None and self.c.is_on_curve(kp.Q)
            assert scalar_mult(kp.d, self.c.G, self.c) == kp.Q

    def test_no_collisions(self):
        draws = {random_scalar(self.c, np.random.default_rng(seed)) for seed in range(1000)}
        assert len(draws) == 1000

    def test_rejection_sampling_range(self):
        c = curve_by_name("secp521r1")
        rng = np.random.default_rng(7)
        draws = [random_scalar(c, rng) for _ in range(200)]
        assert all(1 <= d < c.n for d in draws)
        # top bit of a 521-bit scalar is set about half the time
        assert 60 < sum(d >> 520 for d in draws) < 140


class TestEncoding:
    @pytest.mark.parametrize("c", ALL_CURVES, ids=curve_ids)
    def test_private_one(self, c):
        v = encode_private_key(1, c)
        expected = np.zeros(c.byte_len)
        expected[-1] = 1 / 255
        np.testing.assert_array_equal(v, expected)

    def test_infinity_rejected(self):
        with pytest.raises(ValueError):
            encode_public_key(INFINITY, curve_by_name("secp224r1"))

    @pytest.mark.parametrize("c", ALL_CURVES, ids=curve_ids)
    def test_round_trip(self, c):
        rng = np.random.default_rng(14)
        for _ in range(100):
            kp = generate_keypair(c, rng)
            pub = encode_public_key(kp.Q, c)
            priv = encode_private_key(kp.d, c)
            assert len(pub) == c.byte_len + 1 and len(priv) == c.byte_len
            assert pub.min() >= 0 and pub.max() <= 1 and priv.min() >= 0 and priv.max() <= 1
            assert pub[0] in (2 / 255, 3 / 255)
            assert np.all(np.rint(pub * 255) / 255 == pub)
            assert decode_public_key(pub, c) == kp.Q
            assert decode_private_key(priv, c) == kp.d


@pytest.mark.parametrize("c", ALL_CURVES, ids=curve_ids)
def test_batch_comb_matches_ladder(c):
    rng = np.random.default_rng(15)
    scalars = [random_scalar(c, rng) for _ in range(40)] + [1, 2, c.n - 1, c.n // 2]
    rows = comb_context(c).public_bytes(scalars)
    for d, row in zip(scalars, rows):
        assert bytes(row) == bytes(np.rint(encode_public_key(scalar_mult(d, c.G, c), c) * 255)
                                   .astype(np.uint8))


def test_batch_comb_rejects_out_of_range():
    c = curve_by_name("secp224r1")
    with pytest.raises(ArithmeticError):
        comb_context(c).public_bytes([0])


@pytest.mark.parametrize("c", ALL_CURVES[:2], ids=curve_ids[:2])
def test_sample_keypairs(c):
    priv, pub = sample_keypairs(64, c, np.random.default_rng(16))
    assert priv.shape == (64, c.byte_len) and pub.shape == (64, c.byte_len + 1)
    assert priv.min() >= 0 and pub.max() <= 1
    scalars = [decode_private_key(row, c) for row in priv]
    assert len(set(scalars)) == 64
    for d, row in zip(scalars, pub):
        assert decode_public_key(row, c) == scalar_mult(d, c.G, c)
    again = sample_keypairs(64, c, np.random.default_rng(16))
    np.testing.assert_array_equal(again[1], pub)
