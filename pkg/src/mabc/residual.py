"""Residual and intra plane coding plus the entropy-coded side payloads.

Every payload is an independent byte string coded by the adaptive binary
range coder with freshly initialized context models, so payloads can be
decoded knowing only their geometry. The decoder's plane reconstruction is
bit-exact with the encoder's local reconstruction by construction: both run
dequantize + inverse transform on the same integer levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConformanceError, InvalidInputError
from .frame import Frame, frame_from_arrays
from .mcp import BLOCK, LEVEL_STEP_UNITS, REFINE_LEVELS, BlendModeMap, RefinementField
from .transform import (
    ZIGZAG,
    ZIGZAG_INV,
    forward_transform_blocks,
    inverse_transform_blocks,
)

# Context layout of a residual-plane payload.
CTX_CBF = 0
CTX_SIG = 1  # 4 significance buckets by zig-zag position
CTX_MAG = 5  # 4 magnitude-prefix positions
RESIDUAL_CTX_COUNT = 9

# Blend-mode payload: "is AVERAGE", then "is FUTURE_ONLY".
BLEND_CTX_COUNT = 2

# Refinement payload: per level, a zero flag and a magnitude-prefix context.
REFINE_CTX_COUNT = 2 * REFINE_LEVELS

PRESET_BASE_Q = (4, 8, 16, 32)
LOSSLESS_BASE_Q = 1

# Hierarchy-depth quantizer multipliers, in tenths: I frames, then reference
# distance 8+, 4, 2, 1.
_MULT10_INTRA = 8
_MULT10_BY_DISTANCE = {8: 10, 4: 11, 2: 12, 1: 13}


@dataclass(frozen=True)
class QualityPreset:
    """Rate point: base luma step plus fixed per-hierarchy-level multipliers."""

    index: int

    def __post_init__(self):
        if not 0 <= self.index < len(PRESET_BASE_Q):
            raise InvalidInputError(f"preset index must be 0..{len(PRESET_BASE_Q) - 1}")

    @property
    def base_q(self) -> int:
        return PRESET_BASE_Q[self.index]


def level_steps(base_q: int, ref_distance: int | None) -> tuple[int, int]:
    """(luma, chroma) quantizer steps for a frame at the given hierarchy depth.

    ref_distance None means an intra frame. base_q 1 is the lossless mode:
    every step is forced to 1, chroma included.
    """
    if base_q < 1:
        raise InvalidInputError("base quantizer must be >= 1")
    if base_q == 1:
        return 1, 1
    if ref_distance is None:
        m10 = _MULT10_INTRA
    else:
        m10 = _MULT10_BY_DISTANCE.get(ref_distance, 10) if ref_distance < 8 else 10
    luma = max(1, (base_q * m10 + 5) // 10)
    chroma = (5 * luma + 3) // 4  # ceil(1.25 * luma)
    return luma, chroma


def new_models(count: int) -> np.ndarray:
    return np.full(count, kernels.PROB_INIT, dtype=np.uint16)


def entropy_encode(symbols, models: np.ndarray) -> bytes:
    """Range-code a stream of (context, bit) pairs; context None is a bypass
    bit. `models` is mutated in place (pass a fresh new_models per payload)."""
    enc = kernels.RangeEncoder(models)
    for ctx, bit in symbols:
        if ctx is None:
            enc.encode_bypass(bit)
        else:
            enc.encode_bit(ctx, bit)
    return enc.finish()


def entropy_decode(data: bytes, contexts, models: np.ndarray) -> list[int]:
    """Inverse of entropy_encode given the same context sequence and fresh
    identical models; decode(encode(s)) == s exactly."""
    dec = kernels.RangeDecoder(data, models)
    return [
        dec.decode_bypass() if ctx is None else dec.decode_bit(ctx)
        for ctx in contexts
    ]


# ---------------------------------------------------------------------------
# Residual plane coding
# ---------------------------------------------------------------------------


def _plane_to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)


def _blocks_to_plane(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    return blocks.reshape(h // 8, w // 8, 8, 8).transpose(0, 2, 1, 3).reshape(h, w)


def code_plane(residual: np.ndarray, step: int) -> tuple[bytes, np.ndarray]:
    """Transform-code one residual plane; returns (payload, reconstruction)."""
    h, w = residual.shape
    if h % 8 or w % 8:
        raise InvalidInputError("plane dimensions must be multiples of 8")
    blocks = _plane_to_blocks(residual.astype(np.int32))
    coeffs = forward_transform_blocks(blocks)
    levels = np.sign(coeffs) * (np.abs(coeffs) // step)
    zz = levels.reshape(-1, 64)[:, ZIGZAG].astype(np.int32)

    enc = kernels.RangeEncoder(new_models(RESIDUAL_CTX_COUNT))
    for row in zz:
        kernels.encode_coeff_block(enc, row, CTX_CBF, CTX_SIG, CTX_MAG)
    payload = enc.finish()

    recon = inverse_transform_blocks(levels.astype(np.int32) * step)
    return payload, _blocks_to_plane(recon, h, w)


def decode_plane(payload: bytes, step: int, h: int, w: int) -> np.ndarray:
    """Decode a residual plane coded by code_plane."""
    if h % 8 or w % 8:
        raise InvalidInputError("plane dimensions must be multiples of 8")
    nblocks = (h // 8) * (w // 8)
    dec = kernels.RangeDecoder(payload, new_models(RESIDUAL_CTX_COUNT))
    zz = np.empty((nblocks, 64), dtype=np.int32)
    try:
        for i in range(nblocks):
            zz[i] = kernels.decode_coeff_block(dec, CTX_CBF, CTX_SIG, CTX_MAG)
    except ValueError as exc:
        raise ConformanceError(f"residual plane: {exc}") from exc
    levels = zz[:, ZIGZAG_INV].reshape(-1, 8, 8)
    recon = inverse_transform_blocks(levels.astype(np.int64) * step)
    return _blocks_to_plane(recon, h, w)


# ---------------------------------------------------------------------------
# Intra coding (per-block DC prediction from reconstructed neighbors)
# ---------------------------------------------------------------------------


def _dc_predict(recon: np.ndarray, y0: int, x0: int) -> int:
    total = 0
    count = 0
    if x0 > 0:
        total += int(recon[y0 : y0 + 8, x0 - 1].astype(np.uint32).sum())
        count += 8
    if y0 > 0:
        total += int(recon[y0 - 1, x0 : x0 + 8].astype(np.uint32).sum())
        count += 8
    if count == 0:
        return 128
    return (total + count // 2) // count


def code_intra_plane(plane: np.ndarray, step: int) -> tuple[bytes, np.ndarray]:
    """DC-predicted intra coding of an 8-bit plane; returns (payload, recon)."""
    h, w = plane.shape
    if h % 8 or w % 8:
        raise InvalidInputError("plane dimensions must be multiples of 8")
    recon = np.zeros((h, w), dtype=np.uint8)
    enc = kernels.RangeEncoder(new_models(RESIDUAL_CTX_COUNT))
    for y0 in range(0, h, 8):
        for x0 in range(0, w, 8):
            pred = _dc_predict(recon, y0, x0)
            res = plane[y0 : y0 + 8, x0 : x0 + 8].astype(np.int32) - pred
            coeffs = forward_transform_blocks(res)
            levels = (np.sign(coeffs) * (np.abs(coeffs) // step)).astype(np.int32)
            kernels.encode_coeff_block(enc, levels.reshape(64)[ZIGZAG], CTX_CBF, CTX_SIG, CTX_MAG)
            rec_res = inverse_transform_blocks(levels * step)
            recon[y0 : y0 + 8, x0 : x0 + 8] = np.clip(pred + rec_res, 0, 255).astype(np.uint8)
    return enc.finish(), recon


def decode_intra_plane(payload: bytes, step: int, h: int, w: int) -> np.ndarray:
    if h % 8 or w % 8:
        raise InvalidInputError("plane dimensions must be multiples of 8")
    recon = np.zeros((h, w), dtype=np.uint8)
    dec = kernels.RangeDecoder(payload, new_models(RESIDUAL_CTX_COUNT))
    for y0 in range(0, h, 8):
        for x0 in range(0, w, 8):
            pred = _dc_predict(recon, y0, x0)
            try:
                zz = kernels.decode_coeff_block(dec, CTX_CBF, CTX_SIG, CTX_MAG)
            except ValueError as exc:
                raise ConformanceError(f"intra plane: {exc}") from exc
            levels = zz[ZIGZAG_INV].reshape(8, 8)
            rec_res = inverse_transform_blocks(levels.astype(np.int64) * step)
            recon[y0 : y0 + 8, x0 : x0 + 8] = np.clip(pred + rec_res, 0, 255).astype(np.uint8)
    return recon


# ---------------------------------------------------------------------------
# Frame-level helpers (prediction residual per plane, closed-loop clip)
# ---------------------------------------------------------------------------


def code_inter_frame(
    original: Frame, prediction: Frame, base_q: int, ref_distance: int
) -> tuple[list[bytes], Frame]:
    luma_q, chroma_q = level_steps(base_q, ref_distance)
    payloads = []
    planes = []
    for orig_p, pred_p, step in (
        (original.y.data, prediction.y.data, luma_q),
        (original.u.data, prediction.u.data, chroma_q),
        (original.v.data, prediction.v.data, chroma_q),
    ):
        residual = orig_p.astype(np.int32) - pred_p.astype(np.int32)
        payload, rec_res = code_plane(residual, step)
        payloads.append(payload)
        planes.append(np.clip(pred_p.astype(np.int32) + rec_res, 0, 255).astype(np.uint8))
    return payloads, frame_from_arrays(*planes, original.display_index)


def decode_inter_frame(
    payloads: list[bytes], prediction: Frame, base_q: int, ref_distance: int, display_index: int
) -> Frame:
    luma_q, chroma_q = level_steps(base_q, ref_distance)
    planes = []
    for payload, pred_p, step in (
        (payloads[0], prediction.y.data, luma_q),
        (payloads[1], prediction.u.data, chroma_q),
        (payloads[2], prediction.v.data, chroma_q),
    ):
        rec_res = decode_plane(payload, step, pred_p.shape[0], pred_p.shape[1])
        planes.append(np.clip(pred_p.astype(np.int32) + rec_res, 0, 255).astype(np.uint8))
    return frame_from_arrays(*planes, display_index)


def code_intra_frame(original: Frame, base_q: int) -> tuple[list[bytes], Frame]:
    luma_q, chroma_q = level_steps(base_q, None)
    py, ry = code_intra_plane(original.y.data, luma_q)
    pu, ru = code_intra_plane(original.u.data, chroma_q)
    pv, rv = code_intra_plane(original.v.data, chroma_q)
    return [py, pu, pv], frame_from_arrays(ry, ru, rv, original.display_index)


def decode_intra_frame(
    payloads: list[bytes], base_q: int, width: int, height: int, display_index: int
) -> Frame:
    luma_q, chroma_q = level_steps(base_q, None)
    ry = decode_intra_plane(payloads[0], luma_q, height, width)
    ru = decode_intra_plane(payloads[1], chroma_q, height // 2, width // 2)
    rv = decode_intra_plane(payloads[2], chroma_q, height // 2, width // 2)
    return frame_from_arrays(ry, ru, rv, display_index)


# ---------------------------------------------------------------------------
# Side payloads: blend modes and refinement corrections
# ---------------------------------------------------------------------------


def encode_blend_payload(modes: BlendModeMap) -> bytes:
    enc = kernels.RangeEncoder(new_models(BLEND_CTX_COUNT))
    for mode in modes.modes.reshape(-1):
        enc.encode_bit(0, 0 if mode == 0 else 1)
        if mode:
            enc.encode_bit(1, 1 if mode == 2 else 0)
    return enc.finish()


def decode_blend_payload(payload: bytes, nby: int, nbx: int) -> BlendModeMap:
    dec = kernels.RangeDecoder(payload, new_models(BLEND_CTX_COUNT))
    out = np.empty(nby * nbx, dtype=np.uint8)
    for i in range(out.size):
        if dec.decode_bit(0):
            out[i] = 2 if dec.decode_bit(1) else 1
        else:
            out[i] = 0
    return BlendModeMap(out.reshape(nby, nbx))


def _refine_steps(alphas_units: tuple[int, int, int]) -> list[int]:
    return [alphas_units[j] // LEVEL_STEP_UNITS[j] for j in range(REFINE_LEVELS)]


def encode_refinement_payload(refinement: RefinementField) -> bytes:
    """Per level and block: zero flag, bypass sign, truncated-unary magnitude."""
    enc = kernels.RangeEncoder(new_models(REFINE_CTX_COUNT))
    nsteps = _refine_steps(refinement.alphas_units)
    for j in range(REFINE_LEVELS):
        step = LEVEL_STEP_UNITS[j]
        cap = nsteps[j] - 1
        ctx_zero, ctx_mag = 2 * j, 2 * j + 1
        for value in refinement.corrections[j].reshape(-1):
            t = int(value) // step
            enc.encode_bit(ctx_zero, 1 if t else 0)
            if t:
                enc.encode_bypass(1 if t < 0 else 0)
                mag = abs(t) - 1
                for _ in range(mag):
                    enc.encode_bit(ctx_mag, 1)
                if mag < cap:
                    enc.encode_bit(ctx_mag, 0)
    return enc.finish()


def decode_refinement_payload(
    payload: bytes, height: int, width: int, alphas_units: tuple[int, int, int]
) -> RefinementField:
    dec = kernels.RangeDecoder(payload, new_models(REFINE_CTX_COUNT))
    nsteps = _refine_steps(alphas_units)
    corrections = []
    for j in range(REFINE_LEVELS):
        h, w = height >> j, width >> j
        nby, nbx = (h + BLOCK - 1) // BLOCK, (w + BLOCK - 1) // BLOCK
        step = LEVEL_STEP_UNITS[j]
        cap = nsteps[j] - 1
        ctx_zero, ctx_mag = 2 * j, 2 * j + 1
        flat = np.zeros(nby * nbx * 2, dtype=np.int32)
        for i in range(flat.size):
            if not dec.decode_bit(ctx_zero):
                continue
            if cap < 0:
                raise ConformanceError(f"refinement level {j} carries values but alpha is 0")
            sign = dec.decode_bypass()
            mag = 0
            while mag < cap and dec.decode_bit(ctx_mag):
                mag += 1
            t = mag + 1
            flat[i] = -t * step if sign else t * step
        corrections.append(flat.reshape(nby, nbx, 2))
    try:
        return RefinementField(tuple(corrections), alphas_units)
    except InvalidInputError as exc:
        raise ConformanceError(str(exc)) from exc
