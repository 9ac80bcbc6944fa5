"""Pure numpy/Python kernel backend.

This is the reference the Cython backend is parity-tested against: every
function here defines the exact integer arithmetic, rounding, and tie-breaking
the codec requires, and `_native` must reproduce it bit for bit.
"""

from __future__ import annotations

import numpy as np

# ---------------------------------------------------------------------------
# Block motion search
# ---------------------------------------------------------------------------


def _bilinear_block(refp: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample a padded int32 plane at 1/8-px coordinates (round-half-up)."""
    y0 = ys >> 3
    x0 = xs >> 3
    ay = (ys & 7)[:, None]
    ax = (xs & 7)[None, :]
    p00 = refp[y0[:, None], x0[None, :]]
    p01 = refp[y0[:, None], x0[None, :] + 1]
    p10 = refp[y0[:, None] + 1, x0[None, :]]
    p11 = refp[y0[:, None] + 1, x0[None, :] + 1]
    return (
        (8 - ax) * (8 - ay) * p00
        + ax * (8 - ay) * p01
        + (8 - ax) * ay * p10
        + ax * ay * p11
        + 32
    ) >> 6


def block_motion_search(
    src: np.ndarray, ref: np.ndarray, block_size: int, radius: int, halfpel: bool
) -> np.ndarray:
    """Full-search SAD block matching of src against ref with border clamping.

    Returns per-block vectors in 1/8-px units, shape (nby, nbx, 2) int32 with
    [..., 0] = dx and [..., 1] = dy. Ties break on (SAD, dx*dx+dy*dy, dy, dx),
    all compared in 1/8-px units; the optional half-pel stage evaluates the 8
    half-sample neighbors of the integer winner under the same ordering.
    """
    h, w = src.shape
    bs = block_size
    nby = (h + bs - 1) // bs
    nbx = (w + bs - 1) // bs
    pad = radius + 1
    refp = np.pad(ref, pad, mode="edge").astype(np.int32)
    srci = src.astype(np.int32)
    row_starts = np.arange(0, h, bs)
    col_starts = np.arange(0, w, bs)

    offsets = [(dy, dx) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)]
    order = sorted(range(len(offsets)), key=lambda i: (
        offsets[i][0] ** 2 + offsets[i][1] ** 2, offsets[i][0], offsets[i][1]))

    sads = np.empty((len(offsets), nby, nbx), dtype=np.int64)
    for rank, i in enumerate(order):
        dy, dx = offsets[i]
        shifted = refp[pad + dy : pad + dy + h, pad + dx : pad + dx + w]
        ad = np.abs(srci - shifted)
        sads[rank] = np.add.reduceat(np.add.reduceat(ad, row_starts, axis=0), col_starts, axis=1)

    # Rows are in increasing (norm, dy, dx) order, so the first minimum is the
    # lexicographic winner.
    win = np.argmin(sads, axis=0)

    out = np.zeros((nby, nbx, 2), dtype=np.int32)
    for by in range(nby):
        ys = np.arange(by * bs, min((by + 1) * bs, h))
        for bx in range(nbx):
            xs = np.arange(bx * bs, min((bx + 1) * bs, w))
            dy, dx = offsets[order[win[by, bx]]]
            best_sad = int(sads[win[by, bx], by, bx])
            best = (best_sad, (8 * dx) ** 2 + (8 * dy) ** 2, 8 * dy, 8 * dx)
            if halfpel:
                block = srci[ys[0] : ys[-1] + 1, xs[0] : xs[-1] + 1]
                fy_base = ((ys + dy + pad) << 3)
                fx_base = ((xs + dx + pad) << 3)
                for hy in (-4, 0, 4):
                    for hx in (-4, 0, 4):
                        if hy == 0 and hx == 0:
                            continue
                        patch = _bilinear_block(refp, fy_base + hy, fx_base + hx)
                        sad = int(np.abs(block - patch).sum())
                        du, dv = 8 * dx + hx, 8 * dy + hy
                        cand = (sad, du * du + dv * dv, dv, du)
                        if cand < best:
                            best = cand
            out[by, bx, 0] = best[3]
            out[by, bx, 1] = best[2]
    return out


# ---------------------------------------------------------------------------
# Backward warping
# ---------------------------------------------------------------------------


def warp_plane(plane: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Backward-warp an 8-bit plane by per-pixel 1/8-px displacements.

    out(p) = in(p + f(p)) with bilinear interpolation (round-half-up) and
    source coordinates clamped to the plane rectangle.
    """
    h, w = plane.shape
    xs = (np.arange(w, dtype=np.int32) << 3)[None, :] + dx
    ys = (np.arange(h, dtype=np.int32) << 3)[:, None] + dy
    np.clip(xs, 0, (w - 1) << 3, out=xs)
    np.clip(ys, 0, (h - 1) << 3, out=ys)
    x0 = xs >> 3
    y0 = ys >> 3
    ax = xs & 7
    ay = ys & 7
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    p = plane.astype(np.int32)
    val = (
        (8 - ax) * (8 - ay) * p[y0, x0]
        + ax * (8 - ay) * p[y0, x1]
        + (8 - ax) * ay * p[y1, x0]
        + ax * ay * p[y1, x1]
        + 32
    ) >> 6
    return val.astype(np.uint8)


# ---------------------------------------------------------------------------
# Adaptive binary range coder
# ---------------------------------------------------------------------------

_TOP = (1 << 32) - 1
_HALF = 1 << 31
_QUARTER = 1 << 30
_THREE_Q = 3 << 30

PROB_BITS = 12
PROB_ONE = 1 << PROB_BITS
PROB_INIT = PROB_ONE // 2
ADAPT_SHIFT = 5


class RangeEncoder:
    """Binary arithmetic encoder over 12-bit adaptive zero-probabilities.

    `probs` is a uint16 array of per-context P(bit=0) in [1, 4095], updated in
    place with shift-5 exponential adaptation. Output is byte aligned.
    """

    def __init__(self, probs: np.ndarray):
        self.probs = probs
        self.low = 0
        self.high = _TOP
        self.pending = 0
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0

    def _emit(self, bit: int) -> None:
        self._acc = (self._acc << 1) | bit
        self._nacc += 1
        if self._nacc == 8:
            self._buf.append(self._acc)
            self._acc = 0
            self._nacc = 0

    def _emit_with_pending(self, bit: int) -> None:
        self._emit(bit)
        inv = bit ^ 1
        while self.pending:
            self._emit(inv)
            self.pending -= 1

    def _renorm(self) -> None:
        while True:
            if self.high < _HALF:
                self._emit_with_pending(0)
            elif self.low >= _HALF:
                self._emit_with_pending(1)
                self.low -= _HALF
                self.high -= _HALF
            elif self.low >= _QUARTER and self.high < _THREE_Q:
                self.pending += 1
                self.low -= _QUARTER
                self.high -= _QUARTER
            else:
                return
            self.low <<= 1
            self.high = (self.high << 1) | 1

    def encode_bit(self, ctx: int, bit: int) -> None:
        p0 = int(self.probs[ctx])
        split = self.low + (((self.high - self.low + 1) * p0) >> PROB_BITS) - 1
        if bit:
            self.low = split + 1
            self.probs[ctx] = p0 - (p0 >> ADAPT_SHIFT)
        else:
            self.high = split
            self.probs[ctx] = p0 + ((PROB_ONE - p0) >> ADAPT_SHIFT)
        self._renorm()

    def encode_bypass(self, bit: int) -> None:
        split = self.low + ((self.high - self.low + 1) >> 1) - 1
        if bit:
            self.low = split + 1
        else:
            self.high = split
        self._renorm()

    def finish(self) -> bytes:
        self.pending += 1
        self._emit_with_pending(0 if self.low < _QUARTER else 1)
        while self._nacc:
            self._emit(0)
        return bytes(self._buf)


class RangeDecoder:
    """Decoder mirror of RangeEncoder; reads 0 bits past the end of input."""

    def __init__(self, data: bytes, probs: np.ndarray):
        self.probs = probs
        self.data = data
        self.low = 0
        self.high = _TOP
        self._pos = 0
        self._acc = 0
        self._nacc = 0
        self.code = 0
        for _ in range(32):
            self.code = (self.code << 1) | self._next_bit()

    def _next_bit(self) -> int:
        if self._nacc == 0:
            if self._pos >= len(self.data):
                return 0
            self._acc = self.data[self._pos]
            self._pos += 1
            self._nacc = 8
        self._nacc -= 1
        return (self._acc >> self._nacc) & 1

    def _renorm(self) -> None:
        while True:
            if self.high < _HALF:
                pass
            elif self.low >= _HALF:
                self.low -= _HALF
                self.high -= _HALF
                self.code -= _HALF
            elif self.low >= _QUARTER and self.high < _THREE_Q:
                self.low -= _QUARTER
                self.high -= _QUARTER
                self.code -= _QUARTER
            else:
                return
            self.low <<= 1
            self.high = (self.high << 1) | 1
            self.code = (self.code << 1) | self._next_bit()

    def decode_bit(self, ctx: int) -> int:
        p0 = int(self.probs[ctx])
        split = self.low + (((self.high - self.low + 1) * p0) >> PROB_BITS) - 1
        if self.code <= split:
            bit = 0
            self.high = split
            self.probs[ctx] = p0 + ((PROB_ONE - p0) >> ADAPT_SHIFT)
        else:
            bit = 1
            self.low = split + 1
            self.probs[ctx] = p0 - (p0 >> ADAPT_SHIFT)
        self._renorm()
        return bit

    def decode_bypass(self) -> int:
        split = self.low + ((self.high - self.low + 1) >> 1) - 1
        if self.code <= split:
            bit = 0
            self.high = split
        else:
            bit = 1
            self.low = split + 1
        self._renorm()
        return bit


# ---------------------------------------------------------------------------
# Coefficient block binarization (64 levels in zig-zag order)
# ---------------------------------------------------------------------------


def _sig_bucket(k: int) -> int:
    if k == 0:
        return 0
    if k <= 5:
        return 1
    if k <= 20:
        return 2
    return 3


def encode_coeff_block(enc, levels: np.ndarray, ctx_cbf: int, ctx_sig: int, ctx_mag: int) -> None:
    """Code one quantized 8x8 block: coded-block flag, significance map,
    Exp-Golomb magnitudes (adaptive prefix, bypass suffix), bypass signs."""
    nz = np.nonzero(levels)[0]
    enc.encode_bit(ctx_cbf, 1 if len(nz) else 0)
    if not len(nz):
        return
    for k in range(64):
        lv = int(levels[k])
        if lv == 0:
            enc.encode_bit(ctx_sig + _sig_bucket(k), 0)
            continue
        enc.encode_bit(ctx_sig + _sig_bucket(k), 1)
        a = abs(lv)
        m = a.bit_length() - 1
        for p in range(m):
            enc.encode_bit(ctx_mag + min(p, 3), 1)
        enc.encode_bit(ctx_mag + min(m, 3), 0)
        for b in range(m - 1, -1, -1):
            enc.encode_bypass((a >> b) & 1)
        enc.encode_bypass(1 if lv < 0 else 0)


MAX_MAG_PREFIX = 24  # legal magnitudes are < 2^15; beyond this the stream is corrupt


def decode_coeff_block(dec, ctx_cbf: int, ctx_sig: int, ctx_mag: int) -> np.ndarray:
    levels = np.zeros(64, dtype=np.int32)
    if not dec.decode_bit(ctx_cbf):
        return levels
    for k in range(64):
        if not dec.decode_bit(ctx_sig + _sig_bucket(k)):
            continue
        m = 0
        while dec.decode_bit(ctx_mag + min(m, 3)):
            m += 1
            if m > MAX_MAG_PREFIX:
                raise ValueError("coefficient magnitude prefix too long")
        a = 1
        for _ in range(m):
            a = (a << 1) | dec.decode_bypass()
        levels[k] = -a if dec.decode_bypass() else a
    return levels
