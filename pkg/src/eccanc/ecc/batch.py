"""Batched fixed-base scalar multiplication on fixed-width limb arrays.

Training draws a fresh keypair for every message row, so key generation
runs millions of times per experiment. This module computes ``d_i * G`` for
a whole batch of scalars at once:

* field elements are arrays of 28-bit limbs held in ``int64`` (products of
  two limbs and column sums of up to 2*19 of them stay below 2**63), sized
  so ``2p < R = 2**(28*n)``;
* multiplication is product-scanning Montgomery multiplication;
* ``d*G`` comes from a comb table ``T[k, v] = v * 2**(w*k) * G`` so each key
  needs one affine addition per nonzero window digit;
* the affine additions of a window step share a single field inversion
  across the batch (Montgomery's simultaneous-inversion trick), with rows
  spread over SIMD lanes so each lane runs its own prefix-product chain.

For ``1 <= d < n`` a running partial sum is never equal to, or the negation
of, the table point being added, so the chord formula always applies. The
kernel still checks and reports failure rather than returning a wrong point.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .curves import CurveParams

RADIX = 28
BASE = 1 << RADIX
MASK = BASE - 1


def n_limbs(c: CurveParams) -> int:
    return (c.p.bit_length() + 2 + RADIX - 1) // RADIX


def to_limbs(x: int, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = x & MASK
        x >>= RADIX
    if x:
        raise OverflowError("value does not fit in the limb array")
    return out


def from_limbs(a) -> int:
    x = 0
    for limb in reversed(a):
        x = (x << RADIX) | int(limb)
    return x


# -- limb kernels -----------------------------------------------------------

@nb.njit(cache=True, inline="always")
def _geq(a, p):
    for i in range(p.shape[0] - 1, -1, -1):
        if a[i] != p[i]:
            return a[i] > p[i]
    return True


@nb.njit(cache=True, inline="always")
def _sub_p(a, p):
    borrow = 0
    for i in range(p.shape[0]):
        v = a[i] - p[i] - borrow
        if v < 0:
            v += BASE
            borrow = 1
        else:
            borrow = 0
        a[i] = v


@nb.njit(cache=True)
def mont_mul(a, b, p, pinv, m, out):
    """out = a*b/R mod p. ``out`` may alias ``a`` or ``b``; ``m`` is scratch."""
    n = p.shape[0]
    acc = 0
    for i in range(n):
        for j in range(i):
            acc += a[j] * b[i - j] + m[j] * p[i - j]
        acc += a[i] * b[0]
        mi = ((acc & MASK) * pinv) & MASK
        m[i] = mi
        acc += mi * p[0]
        acc >>= RADIX
    for i in range(n, 2 * n):
        for j in range(i - n + 1, n):
            acc += a[j] * b[i - j] + m[j] * p[i - j]
        out[i - n] = acc & MASK
        acc >>= RADIX
    if _geq(out, p):
        _sub_p(out, p)


@nb.njit(cache=True)
def mod_add(a, b, p, out):
    carry = 0
    for i in range(p.shape[0]):
        v = a[i] + b[i] + carry
        out[i] = v & MASK
        carry = v >> RADIX
    if _geq(out, p):
        _sub_p(out, p)


@nb.njit(cache=True)
def mod_sub(a, b, p, out):
    n = p.shape[0]
    borrow = 0
    for i in range(n):
        v = a[i] - b[i] - borrow
        if v < 0:
            v += BASE
            borrow = 1
        else:
            borrow = 0
        out[i] = v
    if borrow:
        carry = 0
        for i in range(n):
            v = out[i] + p[i] + carry
            out[i] = v & MASK
            carry = v >> RADIX


@nb.njit(cache=True)
def _is_zero(a):
    for i in range(a.shape[0]):
        if a[i] != 0:
            return False
    return True


@nb.njit(cache=True)
def mont_inv(a, p, pinv, exp_nibbles, one_m, m, powers, out):
    """out = a^(p-2) in Montgomery form, via a 4-bit fixed window."""
    powers[0, :] = one_m
    powers[1, :] = a
    for k in range(2, 16):
        mont_mul(powers[k - 1], a, p, pinv, m, powers[k])
    out[:] = one_m
    for nib in exp_nibbles:
        for _ in range(4):
            mont_mul(out, out, p, pinv, m, out)
        if nib:
            mont_mul(out, powers[nib], p, pinv, m, out)


@nb.njit(cache=True)
def _batch_affine_add(ax, ay, bx, by, active, count, p, pinv, exp_nibbles, one_m):
    """(ax, ay)[r] += (bx, by)[j] for r = active[j], j < count. Returns False on x1 == x2."""
    n = p.shape[0]
    m = np.empty(n, dtype=np.int64)
    powers = np.empty((16, n), dtype=np.int64)
    dx = np.empty((count, n), dtype=np.int64)
    pref = np.empty((count, n), dtype=np.int64)
    inv = np.empty(n, dtype=np.int64)
    t1 = np.empty(n, dtype=np.int64)
    lam = np.empty(n, dtype=np.int64)
    x3 = np.empty(n, dtype=np.int64)

    for j in range(count):
        mod_sub(bx[j], ax[active[j]], p, dx[j])
        if _is_zero(dx[j]):
            return False
    pref[0, :] = dx[0]
    for j in range(1, count):
        mont_mul(pref[j - 1], dx[j], p, pinv, m, pref[j])
    mont_inv(pref[count - 1], p, pinv, exp_nibbles, one_m, m, powers, inv)
    for j in range(count - 1, 0, -1):
        mont_mul(inv, pref[j - 1], p, pinv, m, t1)
        mont_mul(inv, dx[j], p, pinv, m, inv)
        dx[j, :] = t1
    dx[0, :] = inv

    for j in range(count):
        r = active[j]
        mod_sub(by[j], ay[r], p, t1)
        mont_mul(t1, dx[j], p, pinv, m, lam)
        mont_mul(lam, lam, p, pinv, m, x3)
        mod_sub(x3, ax[r], p, x3)
        mod_sub(x3, bx[j], p, x3)
        mod_sub(ax[r], x3, p, t1)
        mont_mul(lam, t1, p, pinv, m, t1)
        mod_sub(t1, ay[r], p, ay[r])
        ax[r, :] = x3
    return True


# -- lane-vectorised kernels --------------------------------------------------
#
# Operands are ``(n, LANES)`` arrays: limb i of lane l at ``[i, l]``, so every
# inner loop runs across independent lanes and compiles to SIMD code.

LANES = 64


@nb.njit(cache=True)
def vmont_mul(a, b, p, pinv, out, m, acc):
    """Lane-wise ``out = a*b/R mod p``; ``out`` may alias ``a`` or ``b``."""
    n, L = a.shape
    acc[:] = 0
    for i in range(n):
        for j in range(i):
            pj = p[i - j]
            for l in range(L):
                acc[l] += a[j, l] * b[i - j, l] + m[j, l] * pj
        for l in range(L):
            t = acc[l] + a[i, l] * b[0, l]
            mi = ((t & MASK) * pinv) & MASK
            m[i, l] = mi
            acc[l] = (t + mi * p[0]) >> RADIX
    for i in range(n, 2 * n):
        for j in range(i - n + 1, n):
            pj = p[i - j]
            for l in range(L):
                acc[l] += a[j, l] * b[i - j, l] + m[j, l] * pj
        for l in range(L):
            out[i - n, l] = acc[l] & MASK
            acc[l] >>= RADIX
    # out - p into m; keep it wherever it did not borrow
    acc[:] = 0
    for i in range(n):
        for l in range(L):
            v = out[i, l] - p[i] - acc[l]
            acc[l] = (v >> 63) & 1
            m[i, l] = v + (acc[l] << RADIX)
    for i in range(n):
        for l in range(L):
            if acc[l] == 0:
                out[i, l] = m[i, l]


@nb.njit(cache=True)
def vmod_sub(a, b, p, out, borrow):
    """Lane-wise ``out = a - b mod p``; ``out`` may alias ``a`` or ``b``."""
    n, L = a.shape
    borrow[:] = 0
    for i in range(n):
        for l in range(L):
            v = a[i, l] - b[i, l] - borrow[l]
            borrow[l] = (v >> 63) & 1
            out[i, l] = v + (borrow[l] << RADIX)
    carry = np.zeros(L, dtype=np.int64)
    for i in range(n):
        for l in range(L):
            v = out[i, l] + (p[i] & -borrow[l]) + carry[l]
            out[i, l] = v & MASK
            carry[l] = v >> RADIX


class _Workspace:
    """Scratch buffers for one comb evaluation over ``B`` rows."""

    def __init__(self, B: int, n: int, lanes: int):
        tmax = (B + lanes - 1) // lanes
        shape = (tmax, n, lanes)
        self.x1, self.y1, self.x2, self.y2, self.dx, self.pref = (
            np.empty(shape, dtype=np.int64) for _ in range(6))
        self.inv, self.t1, self.t2, self.m = (np.empty((n, lanes), dtype=np.int64)
                                              for _ in range(4))
        self.acc = np.empty(lanes, dtype=np.int64)
        self.spref = np.empty((lanes, n), dtype=np.int64)
        self.sinv = np.empty(n, dtype=np.int64)
        self.empty = np.ones(B, dtype=np.bool_)
        self.active = np.empty(B, dtype=np.int64)


@nb.njit(cache=True)
def _comb_gather(k, digits, table, p, pinv, one_m, ax, ay, empty, active,
                 x1, y1, x2, y2, dx, pref, m, acc, spref):
    """First half of window position ``k``.

    Rows whose accumulator is still empty take their table point directly.
    The rest are gathered into lane chunks, their ``x2 - x1`` differences
    multiplied into one prefix-product chain per lane, and the lane totals
    multiplied together into ``spref[-1]``. Returns the number of rows that
    need an addition, or -1 if some difference is zero.
    """
    B = digits.shape[0]
    n = p.shape[0]
    L = acc.shape[0]
    count = 0
    for r in range(B):
        v = digits[r, k]
        if v == 0:
            continue
        if empty[r]:
            ax[r, :] = table[k, v, 0]
            ay[r, :] = table[k, v, 1]
            empty[r] = False
        else:
            active[count] = r
            count += 1
    if count == 0:
        return 0
    T = (count + L - 1) // L

    # padding lanes add (1, 0) to (0, 0) so their dx is one
    for j in range(T * L):
        t, l = j // L, j % L
        if j < count:
            r = active[j]
            v = digits[r, k]
            for i in range(n):
                x1[t, i, l] = ax[r, i]
                y1[t, i, l] = ay[r, i]
                x2[t, i, l] = table[k, v, 0, i]
                y2[t, i, l] = table[k, v, 1, i]
        else:
            for i in range(n):
                x1[t, i, l] = 0
                y1[t, i, l] = 0
                x2[t, i, l] = one_m[i]
                y2[t, i, l] = 0

    for t in range(T):
        vmod_sub(x2[t], x1[t], p, dx[t], acc)
    for j in range(count):
        t, l = j // L, j % L
        zero = True
        for i in range(n):
            if dx[t, i, l] != 0:
                zero = False
                break
        if zero:
            return -1

    pref[0] = dx[0]
    for t in range(1, T):
        vmont_mul(pref[t - 1], dx[t], p, pinv, pref[t], m, acc)
    last = pref[T - 1]
    sm = np.empty(n, dtype=np.int64)
    col = np.empty(n, dtype=np.int64)
    for i in range(n):
        spref[0, i] = last[i, 0]
    for l in range(1, L):
        for i in range(n):
            col[i] = last[i, l]
        mont_mul(spref[l - 1], col, p, pinv, sm, spref[l])
    return count


@nb.njit(cache=True)
def _comb_finish(count, ax, ay, active, p, pinv, x1, y1, x2, y2, dx, pref, inv, t1, t2,
                 m, acc, spref, sinv):
    """Second half of a window position, given ``sinv = 1 / spref[-1]``."""
    n = p.shape[0]
    L = acc.shape[0]
    T = (count + L - 1) // L
    last = pref[T - 1]
    sm = np.empty(n, dtype=np.int64)
    col = np.empty(n, dtype=np.int64)
    st = np.empty(n, dtype=np.int64)
    for l in range(L - 1, 0, -1):
        for i in range(n):
            col[i] = last[i, l]
        mont_mul(sinv, spref[l - 1], p, pinv, sm, st)
        mont_mul(sinv, col, p, pinv, sm, sinv)
        for i in range(n):
            inv[i, l] = st[i]
    for i in range(n):
        inv[i, 0] = sinv[i]
    for t in range(T - 1, 0, -1):
        vmont_mul(inv, pref[t - 1], p, pinv, t1, m, acc)
        vmont_mul(inv, dx[t], p, pinv, inv, m, acc)
        dx[t] = t1
    dx[0] = inv

    # chord formula; results land in x2 (x3) and y2 (y3)
    for t in range(T):
        vmod_sub(y2[t], y1[t], p, t1, acc)
        vmont_mul(t1, dx[t], p, pinv, t1, m, acc)           # lambda
        vmont_mul(t1, t1, p, pinv, t2, m, acc)
        vmod_sub(t2, x1[t], p, t2, acc)
        vmod_sub(t2, x2[t], p, x2[t], acc)                  # x3
        vmod_sub(x1[t], x2[t], p, t2, acc)
        vmont_mul(t1, t2, p, pinv, t2, m, acc)
        vmod_sub(t2, y1[t], p, y2[t], acc)                  # y3

    for j in range(count):
        t, l = j // L, j % L
        r = active[j]
        for i in range(n):
            ax[r, i] = x2[t, i, l]
            ay[r, i] = y2[t, i, l]


@nb.njit(cache=True)
def _digits_from_bytes(rows, w, K, out):
    """Window digits (least significant first) of big-endian byte rows."""
    B, L = rows.shape
    mask = (1 << w) - 1
    for i in range(B):
        acc = 0
        nacc = 0
        k = 0
        for b in range(L - 1, -1, -1):
            acc |= np.int64(rows[i, b]) << nacc
            nacc += 8
            while nacc >= w and k < K:
                out[i, k] = acc & mask
                acc >>= w
                nacc -= w
                k += 1
        while k < K:
            out[i, k] = acc & mask
            acc >>= w
            k += 1


@nb.njit(cache=True)
def _encode_compressed(ax, ay, p, pinv, byte_len, out):
    """Leave Montgomery form and write prefix byte + big-endian x per row."""
    B, n = ax.shape
    m = np.empty(n, dtype=np.int64)
    one = np.zeros(n, dtype=np.int64)
    one[0] = 1
    x = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    for i in range(B):
        mont_mul(ax[i], one, p, pinv, m, x)
        mont_mul(ay[i], one, p, pinv, m, y)
        out[i, 0] = 2 + (y[0] & 1)
        for b in range(byte_len):
            bit = 8 * b
            limb = bit // RADIX
            shift = bit % RADIX
            v = x[limb] >> shift
            if shift > RADIX - 8 and limb + 1 < n:
                v |= x[limb + 1] << (RADIX - shift)
            out[i, byte_len - b] = v & 0xFF


# -- per-curve context ------------------------------------------------------

class CombContext:
    """Montgomery constants and comb table for one curve (built once, reused)."""

    def __init__(self, c: CurveParams, window: int | None = None):
        self.curve = c
        self.n = n = n_limbs(c)
        if window is None:
            window = 14 if c.n.bit_length() <= 256 else 12
        self.window = window
        self.R = 1 << (RADIX * n)
        self.R2 = self.R * self.R % c.p
        self.lanes = LANES
        self.p_limbs = to_limbs(c.p, n)
        self.pinv = (-pow(c.p, -1, BASE)) % BASE
        self.one_m = self.to_mont(1)
        e = c.p - 2
        nib = [(e >> (4 * i)) & 0xF for i in range((e.bit_length() + 3) // 4)]
        self.exp_nibbles = np.array(nib[::-1], dtype=np.int64)
        self.positions = -(-c.n.bit_length() // window)
        self.table = self._build_table()

    def to_mont(self, x: int) -> np.ndarray:
        return to_limbs(x * self.R % self.curve.p, self.n)

    def from_mont(self, a) -> int:
        return from_limbs(a) * pow(self.R, -1, self.curve.p) % self.curve.p

    def _build_table(self) -> np.ndarray:
        from .arith import _affine_add

        c = self.curve
        K, w, n = self.positions, self.window, self.n
        table = np.zeros((K, 1 << w, 2, n), dtype=np.int64)
        base = c.G
        for k in range(K):
            table[k, 1, 0] = self.to_mont(base[0])
            table[k, 1, 1] = self.to_mont(base[1])
            two = _affine_add(base, base, c)
            table[k, 2, 0] = self.to_mont(two[0])
            table[k, 2, 1] = self.to_mont(two[1])
            for _ in range(w):
                base = _affine_add(base, base, c)
        # v*B_k = (v-1)*B_k + B_k for v >= 3, one batched add across all k
        ax = np.empty((K, n), dtype=np.int64)
        ay = np.empty((K, n), dtype=np.int64)
        active = np.arange(K, dtype=np.int64)
        for v in range(3, 1 << w):
            ax[:] = table[:, v - 1, 0]
            ay[:] = table[:, v - 1, 1]
            ok = _batch_affine_add(ax, ay, table[:, 1, 0].copy(), table[:, 1, 1].copy(),
                                   active, K, self.p_limbs, self.pinv,
                                   self.exp_nibbles, self.one_m)
            if not ok:
                raise ArithmeticError("degenerate addition while building comb table")
            table[:, v, 0] = ax
            table[:, v, 1] = ay
        return table

    def digits(self, scalars) -> np.ndarray:
        """Window digits of each scalar; ``scalars`` are ints or big-endian byte rows."""
        if not isinstance(scalars, np.ndarray):
            c = self.curve
            if any(not 1 <= d < c.n for d in scalars):
                raise ArithmeticError("scalars must lie in [1, n-1]")
            blob = b"".join(d.to_bytes(c.byte_len, "big") for d in scalars)
            scalars = np.frombuffer(blob, dtype=np.uint8).reshape(-1, c.byte_len)
        out = np.empty((scalars.shape[0], self.positions), dtype=np.int64)
        _digits_from_bytes(scalars, self.window, self.positions, out)
        return out

    def _comb(self, digits, ax, ay):
        c, p, pinv = self.curve, self.p_limbs, self.pinv
        ws = _Workspace(digits.shape[0], self.n, self.lanes)
        for k in range(self.positions):
            count = _comb_gather(k, digits, self.table, p, pinv, self.one_m, ax, ay,
                                 ws.empty, ws.active, ws.x1, ws.y1, ws.x2, ws.y2, ws.dx,
                                 ws.pref, ws.m, ws.acc, ws.spref)
            if count < 0:
                raise ArithmeticError("degenerate addition: scalars must lie in [1, n-1]")
            if count == 0:
                continue
            # z = aR in Montgomery form; its inverse there is R^2 / z
            z = from_limbs(ws.spref[-1])
            ws.sinv[:] = to_limbs(pow(z, -1, c.p) * self.R2 % c.p, self.n)
            _comb_finish(count, ax, ay, ws.active, p, pinv, ws.x1, ws.y1, ws.x2, ws.y2,
                         ws.dx, ws.pref, ws.inv, ws.t1, ws.t2, ws.m, ws.acc, ws.spref,
                         ws.sinv)
        if ws.empty.any():
            raise ArithmeticError("scalars must lie in [1, n-1]")

    def public_bytes(self, scalars) -> np.ndarray:
        """Compressed encodings of ``d * G`` for every ``d`` in ``scalars``.

        ``scalars`` is a sequence of ints or a ``[B, byte_len]`` uint8 array
        of big-endian scalars, all in ``[1, n-1]``.
        """
        c = self.curve
        B = len(scalars)
        ax = np.empty((B, self.n), dtype=np.int64)
        ay = np.empty((B, self.n), dtype=np.int64)
        self._comb(self.digits(scalars), ax, ay)
        out = np.empty((B, c.byte_len + 1), dtype=np.uint8)
        _encode_compressed(ax, ay, self.p_limbs, self.pinv, c.byte_len, out)
        return out


_CONTEXTS: dict = {}


def comb_context(c: CurveParams) -> CombContext:
    ctx = _CONTEXTS.get(c.name)
    if ctx is None:
        ctx = _CONTEXTS[c.name] = CombContext(c)
    return ctx
