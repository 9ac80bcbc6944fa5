# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, nonecheck=False
"""Cython kernel backend.

Bit-exact mirror of mabc.kernels._pure: same search spaces, rounding and
tie-breaking, just tight C loops. The parity test suite compares the two
backends on randomized inputs; any divergence is a bug here.
"""

import numpy as np


# ---------------------------------------------------------------------------
# Block motion search
# ---------------------------------------------------------------------------


def block_motion_search(src, ref, int block_size, int radius, bint halfpel):
    src = np.ascontiguousarray(src, dtype=np.uint8)
    cdef int h = src.shape[0]
    cdef int w = src.shape[1]
    cdef int pad = radius + 1
    refp_arr = np.pad(np.asarray(ref), pad, mode="edge").astype(np.int32)
    cdef const int[:, ::1] rp = refp_arr
    cdef const unsigned char[:, ::1] sv = src
    cdef int nby = (h + block_size - 1) // block_size
    cdef int nbx = (w + block_size - 1) // block_size
    out = np.zeros((nby, nbx, 2), dtype=np.int32)
    cdef int[:, :, ::1] ov = out
    with nogil:
        _search_all(sv, rp, ov, h, w, nby, nbx, block_size, radius, pad, halfpel)
    return out


cdef void _search_all(const unsigned char[:, ::1] sv, const int[:, ::1] rp,
                      int[:, :, ::1] ov, int h, int w, int nby, int nbx,
                      int block_size, int radius, int pad, bint halfpel) noexcept nogil:
    cdef int by, bx, y0, x0, bh, bw, dy, dx, yy, xx, d
    cdef int best_dy, best_dx, udx, udy, hx, hy
    cdef long long sad, best_sad, norm, best_norm
    cdef int best_udy, best_udx
    cdef int fy, fx, iy0, ix0, ay, ax
    cdef long long acc
    cdef bint better

    for by in range(nby):
        y0 = by * block_size
        bh = block_size if y0 + block_size <= h else h - y0
        for bx in range(nbx):
            x0 = bx * block_size
            bw = block_size if x0 + block_size <= w else w - x0

            best_sad = -1
            best_norm = 0
            best_udy = 0
            best_udx = 0
            best_dy = 0
            best_dx = 0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    sad = 0
                    for yy in range(bh):
                        for xx in range(bw):
                            d = <int> sv[y0 + yy, x0 + xx] - rp[pad + y0 + dy + yy, pad + x0 + dx + xx]
                            sad += d if d >= 0 else -d
                        if best_sad >= 0 and sad > best_sad:
                            break
                    if best_sad >= 0 and sad > best_sad:
                        continue
                    udy = 8 * dy
                    udx = 8 * dx
                    norm = <long long> udx * udx + <long long> udy * udy
                    if best_sad < 0:
                        better = True
                    elif sad < best_sad:
                        better = True
                    elif sad == best_sad:
                        if norm < best_norm:
                            better = True
                        elif norm == best_norm and (udy < best_udy or (udy == best_udy and udx < best_udx)):
                            better = True
                        else:
                            better = False
                    else:
                        better = False
                    if better:
                        best_sad = sad
                        best_norm = norm
                        best_udy = udy
                        best_udx = udx
                        best_dy = dy
                        best_dx = dx

            if halfpel:
                for hy in range(-4, 5, 4):
                    for hx in range(-4, 5, 4):
                        if hy == 0 and hx == 0:
                            continue
                        sad = 0
                        for yy in range(bh):
                            fy = ((y0 + yy + best_dy + pad) << 3) + hy
                            iy0 = fy >> 3
                            ay = fy & 7
                            for xx in range(bw):
                                fx = ((x0 + xx + best_dx + pad) << 3) + hx
                                ix0 = fx >> 3
                                ax = fx & 7
                                acc = (
                                    (8 - ax) * (8 - ay) * rp[iy0, ix0]
                                    + ax * (8 - ay) * rp[iy0, ix0 + 1]
                                    + (8 - ax) * ay * rp[iy0 + 1, ix0]
                                    + ax * ay * rp[iy0 + 1, ix0 + 1]
                                    + 32
                                ) >> 6
                                d = <int> sv[y0 + yy, x0 + xx] - <int> acc
                                sad += d if d >= 0 else -d
                            if sad > best_sad:
                                break
                        if sad > best_sad:
                            continue
                        udy = 8 * best_dy + hy
                        udx = 8 * best_dx + hx
                        norm = <long long> udx * udx + <long long> udy * udy
                        if sad < best_sad:
                            better = True
                        elif sad == best_sad:
                            if norm < best_norm:
                                better = True
                            elif norm == best_norm and (udy < best_udy or (udy == best_udy and udx < best_udx)):
                                better = True
                            else:
                                better = False
                        else:
                            better = False
                        if better:
                            best_sad = sad
                            best_norm = norm
                            best_udy = udy
                            best_udx = udx

            ov[by, bx, 0] = best_udx
            ov[by, bx, 1] = best_udy


# ---------------------------------------------------------------------------
# Backward warping
# ---------------------------------------------------------------------------


def warp_plane(plane, dx, dy):
    plane = np.ascontiguousarray(plane, dtype=np.uint8)
    dx = np.ascontiguousarray(dx, dtype=np.int32)
    dy = np.ascontiguousarray(dy, dtype=np.int32)
    cdef const unsigned char[:, ::1] pv = plane
    cdef const int[:, ::1] dxv = dx
    cdef const int[:, ::1] dyv = dy
    cdef int h = plane.shape[0]
    cdef int w = plane.shape[1]
    out = np.empty((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] ov = out
    cdef int x, y, fx, fy, x0, y0, x1, y1, ax, ay
    cdef int maxx = (w - 1) << 3
    cdef int maxy = (h - 1) << 3
    cdef int val
    with nogil:
        for y in range(h):
            for x in range(w):
                fx = (x << 3) + dxv[y, x]
                fy = (y << 3) + dyv[y, x]
                if fx < 0:
                    fx = 0
                elif fx > maxx:
                    fx = maxx
                if fy < 0:
                    fy = 0
                elif fy > maxy:
                    fy = maxy
                x0 = fx >> 3
                y0 = fy >> 3
                ax = fx & 7
                ay = fy & 7
                x1 = x0 + 1 if x0 + 1 < w else w - 1
                y1 = y0 + 1 if y0 + 1 < h else h - 1
                val = (
                    (8 - ax) * (8 - ay) * pv[y0, x0]
                    + ax * (8 - ay) * pv[y0, x1]
                    + (8 - ax) * ay * pv[y1, x0]
                    + ax * ay * pv[y1, x1]
                    + 32
                ) >> 6
                ov[y, x] = <unsigned char> val
    return out


# ---------------------------------------------------------------------------
# Adaptive binary range coder
# ---------------------------------------------------------------------------

cdef int PROB_BITS_C = 12
cdef unsigned long long PROB_ONE_C = 4096
cdef int ADAPT_SHIFT_C = 5

PROB_BITS = 12
PROB_ONE = 4096
PROB_INIT = 2048
ADAPT_SHIFT = 5

cdef unsigned long long _TOP_C = 0xFFFFFFFFULL
cdef unsigned long long _HALF_C = 0x80000000ULL
cdef unsigned long long _QUARTER_C = 0x40000000ULL
cdef unsigned long long _THREE_Q_C = 0xC0000000ULL


cdef class RangeEncoder:
    cdef unsigned long long low, high
    cdef unsigned long long pending
    cdef unsigned short[::1] probs
    cdef object probs_obj
    cdef bytearray _buf
    cdef unsigned int _acc, _nacc

    def __init__(self, probs):
        self.probs_obj = probs
        self.probs = probs
        self.low = 0
        self.high = _TOP_C
        self.pending = 0
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0

    cdef inline void _emit(self, int bit):
        self._acc = (self._acc << 1) | <unsigned int> bit
        self._nacc += 1
        if self._nacc == 8:
            self._buf.append(self._acc & 0xFF)
            self._acc = 0
            self._nacc = 0

    cdef inline void _emit_with_pending(self, int bit):
        cdef int inv = bit ^ 1
        self._emit(bit)
        while self.pending:
            self._emit(inv)
            self.pending -= 1

    cdef inline void _renorm(self):
        while True:
            if self.high < _HALF_C:
                self._emit_with_pending(0)
            elif self.low >= _HALF_C:
                self._emit_with_pending(1)
                self.low -= _HALF_C
                self.high -= _HALF_C
            elif self.low >= _QUARTER_C and self.high < _THREE_Q_C:
                self.pending += 1
                self.low -= _QUARTER_C
                self.high -= _QUARTER_C
            else:
                return
            self.low <<= 1
            self.high = (self.high << 1) | 1

    cdef void _encode_bit(self, Py_ssize_t ctx, int bit):
        cdef unsigned long long p0 = self.probs[ctx]
        cdef unsigned long long split = self.low + (((self.high - self.low + 1) * p0) >> PROB_BITS_C) - 1
        if bit:
            self.low = split + 1
            self.probs[ctx] = <unsigned short> (p0 - (p0 >> ADAPT_SHIFT_C))
        else:
            self.high = split
            self.probs[ctx] = <unsigned short> (p0 + ((PROB_ONE_C - p0) >> ADAPT_SHIFT_C))
        self._renorm()

    cdef void _encode_bypass(self, int bit):
        cdef unsigned long long split = self.low + ((self.high - self.low + 1) >> 1) - 1
        if bit:
            self.low = split + 1
        else:
            self.high = split
        self._renorm()

    def encode_bit(self, ctx, bit):
        self._encode_bit(ctx, bit)

    def encode_bypass(self, bit):
        self._encode_bypass(bit)

    def finish(self):
        self.pending += 1
        self._emit_with_pending(0 if self.low < _QUARTER_C else 1)
        while self._nacc:
            self._emit(0)
        return bytes(self._buf)


cdef class RangeDecoder:
    cdef unsigned long long low, high, code
    cdef unsigned short[::1] probs
    cdef object probs_obj
    cdef const unsigned char[::1] data
    cdef object data_obj
    cdef Py_ssize_t _pos
    cdef unsigned int _acc, _nacc

    def __init__(self, data, probs):
        self.probs_obj = probs
        self.probs = probs
        self.data_obj = data
        self.data = data
        self.low = 0
        self.high = _TOP_C
        self._pos = 0
        self._acc = 0
        self._nacc = 0
        self.code = 0
        cdef int i
        for i in range(32):
            self.code = (self.code << 1) | <unsigned long long> self._next_bit()

    cdef inline int _next_bit(self):
        if self._nacc == 0:
            if self._pos >= self.data.shape[0]:
                return 0
            self._acc = self.data[self._pos]
            self._pos += 1
            self._nacc = 8
        self._nacc -= 1
        return (self._acc >> self._nacc) & 1

    cdef inline void _renorm(self):
        while True:
            if self.high < _HALF_C:
                pass
            elif self.low >= _HALF_C:
                self.low -= _HALF_C
                self.high -= _HALF_C
                self.code -= _HALF_C
            elif self.low >= _QUARTER_C and self.high < _THREE_Q_C:
                self.low -= _QUARTER_C
                self.high -= _QUARTER_C
                self.code -= _QUARTER_C
            else:
                return
            self.low <<= 1
            self.high = (self.high << 1) | 1
            self.code = (self.code << 1) | <unsigned long long> self._next_bit()

    cdef int _decode_bit(self, Py_ssize_t ctx):
        cdef unsigned long long p0 = self.probs[ctx]
        cdef unsigned long long split = self.low + (((self.high - self.low + 1) * p0) >> PROB_BITS_C) - 1
        cdef int bit
        if self.code <= split:
            bit = 0
            self.high = split
            self.probs[ctx] = <unsigned short> (p0 + ((PROB_ONE_C - p0) >> ADAPT_SHIFT_C))
        else:
            bit = 1
            self.low = split + 1
            self.probs[ctx] = <unsigned short> (p0 - (p0 >> ADAPT_SHIFT_C))
        self._renorm()
        return bit

    cdef int _decode_bypass(self):
        cdef unsigned long long split = self.low + ((self.high - self.low + 1) >> 1) - 1
        cdef int bit
        if self.code <= split:
            bit = 0
            self.high = split
        else:
            bit = 1
            self.low = split + 1
        self._renorm()
        return bit

    def decode_bit(self, ctx):
        return self._decode_bit(ctx)

    def decode_bypass(self):
        return self._decode_bypass()


# ---------------------------------------------------------------------------
# Coefficient block binarization
# ---------------------------------------------------------------------------


cdef inline int _sig_bucket(int k):
    if k == 0:
        return 0
    if k <= 5:
        return 1
    if k <= 20:
        return 2
    return 3


def encode_coeff_block(RangeEncoder enc, levels, int ctx_cbf, int ctx_sig, int ctx_mag):
    levels = np.ascontiguousarray(levels, dtype=np.int32)
    cdef const int[::1] lv = levels
    cdef int k, a, m, p, b, cbf = 0
    for k in range(64):
        if lv[k] != 0:
            cbf = 1
            break
    enc._encode_bit(ctx_cbf, cbf)
    if not cbf:
        return
    for k in range(64):
        if lv[k] == 0:
            enc._encode_bit(ctx_sig + _sig_bucket(k), 0)
            continue
        enc._encode_bit(ctx_sig + _sig_bucket(k), 1)
        a = lv[k] if lv[k] > 0 else -lv[k]
        m = 0
        while (a >> (m + 1)) != 0:
            m += 1
        for p in range(m):
            enc._encode_bit(ctx_mag + (p if p < 3 else 3), 1)
        enc._encode_bit(ctx_mag + (m if m < 3 else 3), 0)
        for b in range(m - 1, -1, -1):
            enc._encode_bypass((a >> b) & 1)
        enc._encode_bypass(1 if lv[k] < 0 else 0)


MAX_MAG_PREFIX = 24


def decode_coeff_block(RangeDecoder dec, int ctx_cbf, int ctx_sig, int ctx_mag):
    out = np.zeros(64, dtype=np.int32)
    cdef int[::1] lv = out
    cdef int k, a, m
    if not dec._decode_bit(ctx_cbf):
        return out
    for k in range(64):
        if not dec._decode_bit(ctx_sig + _sig_bucket(k)):
            continue
        m = 0
        while dec._decode_bit(ctx_mag + (m if m < 3 else 3)):
            m += 1
            if m > 24:
                raise ValueError("coefficient magnitude prefix too long")
        a = 1
        while m > 0:
            a = (a << 1) | dec._decode_bypass()
            m -= 1
        lv[k] = -a if dec._decode_bypass() else a
    return out
