"""Group law on a prime-field short-Weierstrass curve.

Public functions take and return affine points (``None`` is the point at
infinity). Scalar multiplication runs a Montgomery ladder in Jacobian
coordinates so the per-bit work is the same regardless of the scalar's bits.
"""

from __future__ import annotations

from .curves import INFINITY, AffinePoint, CurveParams


class PointNotOnCurveError(ValueError):
    pass


def _check(P: AffinePoint, c: CurveParams):
    if not c.is_on_curve(P):
        raise PointNotOnCurveError(f"point is not on {c.name}")


def point_neg(P: AffinePoint, c: CurveParams) -> AffinePoint:
    if P is None:
        return None
    x, y = P
    return (x, (-y) % c.p)


def _affine_add(P: AffinePoint, Q: AffinePoint, c: CurveParams) -> AffinePoint:
    if P is None:
        return Q
    if Q is None:
        return P
    p = c.p
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return INFINITY
        lam = (3 * x1 * x1 + c.a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    y3 = (lam * (x1 - x3) - y1) % p
    return (x3, y3)


def point_add(P1: AffinePoint, P2: AffinePoint, c: CurveParams) -> AffinePoint:
    _check(P1, c)
    _check(P2, c)
    return _affine_add(P1, P2, c)


# Jacobian (X, Y, Z) represents (X/Z^2, Y/Z^3); Z == 0 is infinity.
_JINF = (1, 1, 0)


def _jdouble(P, c: CurveParams):
    X, Y, Z = P
    if Z == 0 or Y == 0:
        return _JINF
    p = c.p
    XX = X * X % p
    YY = Y * Y % p
    S = 4 * X * YY % p
    ZZ = Z * Z % p
    M = (3 * XX + c.a * ZZ * ZZ) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * YY * YY) % p
    Z3 = 2 * Y * Z % p
    return (X3, Y3, Z3)


def _jadd(P, Q, c: CurveParams):
    X1, Y1, Z1 = P
    X2, Y2, Z2 = Q
    if Z1 == 0:
        return Q
    if Z2 == 0:
        return P
    p = c.p
    Z1Z1 = Z1 * Z1 % p
    Z2Z2 = Z2 * Z2 % p
    U1 = X1 * Z2Z2 % p
    U2 = X2 * Z1Z1 % p
    S1 = Y1 * Z2 * Z2Z2 % p
    S2 = Y2 * Z1 * Z1Z1 % p
    if U1 == U2:
        if S1 != S2:
            return _JINF
        return _jdouble(P, c)
    H = (U2 - U1) % p
    R = (S2 - S1) % p
    HH = H * H % p
    HHH = H * HH % p
    V = U1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - S1 * HHH) % p
    Z3 = H * Z1 * Z2 % p
    return (X3, Y3, Z3)


def _to_affine(P, c: CurveParams) -> AffinePoint:
    X, Y, Z = P
    if Z == 0:
        return INFINITY
    p = c.p
    zi = pow(Z, -1, p)
    zi2 = zi * zi % p
    return (X * zi2 % p, Y * zi2 * zi % p)


def scalar_mult(k: int, P: AffinePoint, c: CurveParams) -> AffinePoint:
    """Return ``k * P``; ``0 * P`` and ``k * infinity`` are infinity."""
    if k < 0:
        raise ValueError("scalar must be non-negative")
    _check(P, c)
    if P is None or k == 0:
        return INFINITY
    # ladder length fixed by the group order, not by k
    nbits = max(c.n.bit_length(), k.bit_length())
    R0 = _JINF
    R1 = (P[0], P[1], 1)
    for i in reversed(range(nbits)):
        if (k >> i) & 1:
            R0 = _jadd(R0, R1, c)
            R1 = _jdouble(R1, c)
        else:
            R1 = _jadd(R0, R1, c)
            R0 = _jdouble(R0, c)
    return _to_affine(R0, c)
