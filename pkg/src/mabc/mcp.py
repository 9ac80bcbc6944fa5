"""Motion-compensated prediction: backward warping, multi-scale warped
pyramids, transmitted per-block blend modes, and flow-guided bounded offset
refinement.

The refinement is a coarse-to-fine search over levels 2, 1, 0 of a per-block
correction added to the half-flow warp offsets. Corrections at level j are
bounded by alpha_j and transmitted; one field serves both references with
mirrored sign (the future reference gets +c, the past -c). Compensation runs
identically at encoder and decoder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .adapt import FlowPyramid, rhu_half
from .errors import InvalidInputError
from .flow import FlowField
from .frame import Frame, PixelPlane, block_mean_downsample, frame_from_arrays

BLOCK = 16
PYRAMID_LEVELS = 4
REFINE_LEVELS = 3

# Default correction bounds per level (1/8-px units at that level's scale):
# 0.5 px at full resolution, 1 px at half, 2 px at quarter.
DEFAULT_ALPHAS_UNITS = (4, 8, 16)
# Correction granularity: 1/8-px steps at level 0, integer px at levels 1-2.
LEVEL_STEP_UNITS = (1, 8, 8)

AVERAGE = 0
PAST_ONLY = 1
FUTURE_ONLY = 2


@dataclass(frozen=True)
class ImagePyramid:
    """Luma planes at levels 0..3, each a 2x block mean of the previous."""

    levels: tuple[np.ndarray, ...]

    @property
    def base_shape(self) -> tuple[int, int]:
        return self.levels[0].shape


def build_image_pyramid(y: np.ndarray) -> ImagePyramid:
    levels = [np.ascontiguousarray(y, dtype=np.uint8)]
    for _ in range(PYRAMID_LEVELS - 1):
        levels.append(block_mean_downsample(levels[-1], 2))
    return ImagePyramid(tuple(levels))


@dataclass(frozen=True)
class BlendModeMap:
    """Per-16x16-block combination mode: AVERAGE, PAST_ONLY or FUTURE_ONLY."""

    modes: np.ndarray  # (nby, nbx) uint8

    def __post_init__(self):
        m = np.ascontiguousarray(self.modes, dtype=np.uint8)
        if m.ndim != 2:
            raise InvalidInputError("blend mode map must be 2-D")
        if m.max(initial=0) > FUTURE_ONLY:
            raise InvalidInputError("blend mode codes are 0, 1, 2 (3 is reserved)")
        if m is self.modes:
            m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "modes", m)


@dataclass(frozen=True)
class RefinementField:
    """Transmitted per-block offset corrections for levels 0..2.

    corrections[j] has shape (nby_j, nbx_j, 2) in 1/8-px units at level j's
    scale; every component must lie within +-alphas_units[j]."""

    corrections: tuple[np.ndarray, ...]
    alphas_units: tuple[int, int, int] = DEFAULT_ALPHAS_UNITS

    def __post_init__(self):
        if len(self.corrections) != REFINE_LEVELS:
            raise InvalidInputError("refinement needs corrections for levels 0..2")
        frozen = []
        for j, c in enumerate(self.corrections):
            arr = np.ascontiguousarray(c, dtype=np.int32)
            if arr.ndim != 3 or arr.shape[2] != 2:
                raise InvalidInputError("corrections must have shape (nby, nbx, 2)")
            if np.abs(arr).max(initial=0) > self.alphas_units[j]:
                raise InvalidInputError(
                    f"level {j} correction exceeds bound {self.alphas_units[j]} units"
                )
            if arr is self.corrections[j]:
                arr = arr.copy()
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "corrections", tuple(frozen))


def zero_refinement(height: int, width: int,
                    alphas_units: tuple[int, int, int] = DEFAULT_ALPHAS_UNITS) -> RefinementField:
    corrections = []
    for j in range(REFINE_LEVELS):
        h, w = height >> j, width >> j
        nby, nbx = (h + BLOCK - 1) // BLOCK, (w + BLOCK - 1) // BLOCK
        corrections.append(np.zeros((nby, nbx, 2), dtype=np.int32))
    return RefinementField(tuple(corrections), alphas_units)


# ---------------------------------------------------------------------------
# Warping
# ---------------------------------------------------------------------------


def warp(plane: PixelPlane, flow: FlowField) -> PixelPlane:
    """Backward-warp a plane: out(p) = in(p + f(p)), bilinear, border clamped."""
    if (flow.grid_height, flow.grid_width) != (plane.height, plane.width):
        raise InvalidInputError("flow grid must match plane dimensions")
    return PixelPlane(kernels.warp_plane(plane.data, flow.dx, flow.dy))


def warp_pyramids(
    past_pyr: ImagePyramid,
    future_pyr: ImagePyramid,
    flows: tuple[FlowPyramid, FlowPyramid],
) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Warp each pyramid level halfway toward the current frame.

    Level j of the future reference is warped with half of flow_a level j, the
    past reference with half of flow_b level j. Returns (warped_past levels,
    warped_future levels)."""
    flows_a, flows_b = flows
    warped_past = []
    warped_future = []
    for j in range(PYRAMID_LEVELS):
        fa = flows_a.levels[j]
        fb = flows_b.levels[j]
        for pyr in (past_pyr, future_pyr):
            if pyr.levels[j].shape != (fa.grid_height, fa.grid_width):
                raise InvalidInputError(f"pyramid/flow level {j} dimensions mismatch")
        half_a = rhu_half(fa.vectors)
        half_b = rhu_half(fb.vectors)
        warped_future.append(kernels.warp_plane(future_pyr.levels[j], half_a[:, :, 0], half_a[:, :, 1]))
        warped_past.append(kernels.warp_plane(past_pyr.levels[j], half_b[:, :, 0], half_b[:, :, 1]))
    return tuple(warped_past), tuple(warped_future)


# ---------------------------------------------------------------------------
# Coarse-to-fine bounded offset refinement (encoder side)
# ---------------------------------------------------------------------------


def _expand_blocks(per_block: np.ndarray, block_size: int, h: int, w: int) -> np.ndarray:
    rows = np.minimum(np.arange(h) // block_size, per_block.shape[0] - 1)
    cols = np.minimum(np.arange(w) // block_size, per_block.shape[1] - 1)
    return per_block[rows][:, cols]


def _upscale_double(field: np.ndarray, h: int, w: int) -> np.ndarray:
    """Carry a per-pixel field one level finer: 2x nearest upsample, magnitudes
    doubled (a displacement at level j+1 spans twice the pixels at level j)."""
    rows = np.minimum(np.arange(h) // 2, field.shape[0] - 1)
    cols = np.minimum(np.arange(w) // 2, field.shape[1] - 1)
    return field[rows][:, cols] * 2


def _block_sads(diff: np.ndarray, block_size: int) -> np.ndarray:
    h, w = diff.shape
    row_starts = np.arange(0, h, block_size)
    col_starts = np.arange(0, w, block_size)
    return np.add.reduceat(np.add.reduceat(diff, row_starts, axis=0), col_starts, axis=1)


def _candidate_offsets(alpha_units: int, step_units: int) -> list[tuple[int, int]]:
    if alpha_units <= 0:
        return [(0, 0)]
    reach = (alpha_units // step_units) * step_units
    steps = range(-reach, reach + 1, step_units)
    cands = [(cy, cx) for cy in steps for cx in steps]
    cands.sort(key=lambda c: (c[0] * c[0] + c[1] * c[1], c[0], c[1]))
    return cands


def refine_offsets(
    current_pyr: ImagePyramid,
    past_pyr: ImagePyramid,
    future_pyr: ImagePyramid,
    flows: tuple[FlowPyramid, FlowPyramid],
    alphas_units: tuple[int, int, int] = DEFAULT_ALPHAS_UNITS,
) -> RefinementField:
    """Search the transmitted per-block corrections, coarse to fine.

    At each level j in (2, 1, 0), for every 16x16 block, every correction c
    within +-alpha_j of the guided position (level half-flows plus the 2x
    upsampled accumulated coarser correction) is tried; the one minimizing the
    SAD of the averaged two-reference prediction against the current level
    wins. Ties break on (SAD, cy*cy+cx*cx, cy, cx). The zero correction is
    always a candidate, so refinement never hurts the averaged prediction.
    """
    flows_a, flows_b = flows
    corrections: list[np.ndarray | None] = [None] * REFINE_LEVELS
    total = None  # accumulated per-pixel correction at the previous (coarser) level

    for j in (2, 1, 0):
        cur = current_pyr.levels[j].astype(np.int32)
        past = past_pyr.levels[j]
        future = future_pyr.levels[j]
        h, w = cur.shape
        guide = np.zeros((h, w, 2), dtype=np.int32) if total is None else _upscale_double(total, h, w)
        base_f = rhu_half(flows_a.levels[j].vectors) + guide
        base_p = rhu_half(flows_b.levels[j].vectors) - guide

        cands = _candidate_offsets(alphas_units[j], LEVEL_STEP_UNITS[j])
        nby, nbx = (h + BLOCK - 1) // BLOCK, (w + BLOCK - 1) // BLOCK
        sads = np.empty((len(cands), nby, nbx), dtype=np.int64)
        for rank, (cy, cx) in enumerate(cands):
            wf = kernels.warp_plane(future, base_f[:, :, 0] + cx, base_f[:, :, 1] + cy)
            wp = kernels.warp_plane(past, base_p[:, :, 0] - cx, base_p[:, :, 1] - cy)
            blend = (wf.astype(np.uint16) + wp + 1) >> 1
            sads[rank] = _block_sads(np.abs(cur - blend), BLOCK)
        win = np.argmin(sads, axis=0)  # candidates pre-sorted by tie-break key

        level_c = np.zeros((nby, nbx, 2), dtype=np.int32)
        cand_arr = np.array(cands, dtype=np.int32)  # (n, 2) as (cy, cx)
        level_c[:, :, 0] = cand_arr[win, 1]
        level_c[:, :, 1] = cand_arr[win, 0]
        corrections[j] = level_c
        total = guide + _expand_blocks(level_c, BLOCK, h, w)

    return RefinementField(tuple(corrections), alphas_units)


def accumulated_correction(refinement: RefinementField, height: int, width: int) -> np.ndarray:
    """Replay the coarse-to-fine accumulation to the full-resolution field."""
    total = None
    for j in (2, 1, 0):
        h, w = height >> j, width >> j
        guide = np.zeros((h, w, 2), dtype=np.int32) if total is None else _upscale_double(total, h, w)
        total = guide + _expand_blocks(refinement.corrections[j], BLOCK, h, w)
    return total


# ---------------------------------------------------------------------------
# Blend modes and final compensation
# ---------------------------------------------------------------------------


def choose_blend_modes(current_y: np.ndarray, warped_past_y: np.ndarray,
                       warped_future_y: np.ndarray) -> BlendModeMap:
    """Pick AVERAGE / PAST_ONLY / FUTURE_ONLY per block by luma SAD.

    Encoder side. Ties resolve in that order."""
    if current_y.shape != warped_past_y.shape or current_y.shape != warped_future_y.shape:
        raise InvalidInputError("plane dimensions must match")
    cur = current_y.astype(np.int32)
    avg = (warped_past_y.astype(np.uint16) + warped_future_y + 1) >> 1
    sads = np.stack(
        [
            _block_sads(np.abs(cur - avg), BLOCK),
            _block_sads(np.abs(cur - warped_past_y), BLOCK),
            _block_sads(np.abs(cur - warped_future_y), BLOCK),
        ]
    )
    return BlendModeMap(np.argmin(sads, axis=0).astype(np.uint8))


def _blend(past_arr: np.ndarray, future_arr: np.ndarray, modes: np.ndarray,
           block_size: int) -> np.ndarray:
    mode_px = _expand_blocks(modes, block_size, *past_arr.shape)
    avg = ((past_arr.astype(np.uint16) + future_arr + 1) >> 1).astype(np.uint8)
    return np.where(mode_px == PAST_ONLY, past_arr, np.where(mode_px == FUTURE_ONLY, future_arr, avg))


def refined_offsets(flows: tuple[FlowField, FlowField], refinement: RefinementField,
                    height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Full-resolution warp offsets: half-flow plus/minus the correction."""
    total = accumulated_correction(refinement, height, width)
    off_future = rhu_half(flows[0].vectors) + total
    off_past = rhu_half(flows[1].vectors) - total
    return off_future, off_past


def compensate(
    past: Frame,
    future: Frame,
    flows: tuple[FlowField, FlowField],
    refinement: RefinementField,
    modes: BlendModeMap,
) -> Frame:
    """Produce the motion-compensated prediction of the current frame.

    Pure function of decoded references and transmitted side data, so encoder
    and decoder reconstruct bit-identical predictions. Chroma reuses the luma
    offsets subsampled and halved for the 4:2:0 grid; chroma blocks are 8x8 and
    follow the luma block's blend mode.
    """
    h, w = past.height, past.width
    if (future.height, future.width) != (h, w):
        raise InvalidInputError("reference dimensions must match")
    if flows[0].vectors.shape[:2] != (h, w):
        raise InvalidInputError("flow grid must match frame dimensions")
    nby, nbx = (h + BLOCK - 1) // BLOCK, (w + BLOCK - 1) // BLOCK
    if modes.modes.shape != (nby, nbx):
        raise InvalidInputError("blend mode map geometry mismatch")

    off_f, off_p = refined_offsets(flows, refinement, h, w)
    wf_y = kernels.warp_plane(future.y.data, off_f[:, :, 0], off_f[:, :, 1])
    wp_y = kernels.warp_plane(past.y.data, off_p[:, :, 0], off_p[:, :, 1])
    out_y = _blend(wp_y, wf_y, modes.modes, BLOCK)

    ch, cw = past.u.height, past.u.width
    off_fc = rhu_half(off_f[::2, ::2][:ch, :cw])
    off_pc = rhu_half(off_p[::2, ::2][:ch, :cw])
    chroma = []
    for past_p, future_p in ((past.u.data, future.u.data), (past.v.data, future.v.data)):
        wf = kernels.warp_plane(future_p, off_fc[:, :, 0], off_fc[:, :, 1])
        wp = kernels.warp_plane(past_p, off_pc[:, :, 0], off_pc[:, :, 1])
        chroma.append(_blend(wp, wf, modes.modes, BLOCK // 2))
    return frame_from_arrays(out_y, chroma[0], chroma[1])
