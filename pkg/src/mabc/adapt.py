"""Per-frame selection of the reference downsampling factor for flow
prediction, plus the flow rescaling and multi-scale pyramid machinery.

The encoder evaluates d in {1, 2, 4, 8}: estimate flow on d-downsampled
references, scale the vectors back up by d, form the bidirectional half-flow
prediction of the current frame, and keep the factor whose prediction PSNR is
highest. Only the winning 2-bit factor is transmitted; the decoder repeats the
flow estimation on its own decoded references, so flows cost no bits.

Everything here is pure integer fixed-point arithmetic: the decoder must
re-derive the exact same flows from the same decoded references.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidFactorError, InvalidInputError
from .flow import EstimatorConfig, FlowField, estimate_bidirectional, estimate_flow_luma
from .frame import Frame, block_mean_downsample, frame_from_arrays, plane_psnr

FACTORS = (1, 2, 4, 8)
_CODE_OF = {1: 0, 2: 1, 4: 2, 8: 3}


@dataclass(frozen=True)
class DownsampleFactor:
    """One of {1, 2, 4, 8}, carried in the bitstream as a 2-bit code."""

    value: int

    def __post_init__(self):
        if self.value not in FACTORS:
            raise InvalidInputError(f"factor must be one of {FACTORS}, got {self.value}")

    @property
    def code(self) -> int:
        return _CODE_OF[self.value]

    @classmethod
    def from_code(cls, code: int) -> "DownsampleFactor":
        if not 0 <= code <= 3:
            raise InvalidInputError(f"factor code must be 2-bit, got {code}")
        return cls(FACTORS[code])


@dataclass(frozen=True)
class FlowPyramid:
    """Flow fields at levels j = 0..3; level j+1 is the 2x2 block mean of
    level j with magnitudes halved (round-half-up at both steps)."""

    levels: tuple[FlowField, ...]

    def __post_init__(self):
        if len(self.levels) != 4:
            raise InvalidInputError("flow pyramid must have levels 0..3")


@dataclass(frozen=True)
class AdaptationReport:
    """The four candidate prediction PSNRs and the winning factor.

    Inadmissible candidates (frame too small) are recorded as -inf. The
    chosen flows are kept so the encoder does not re-estimate them.
    """

    psnr_per_factor: tuple[float, float, float, float]
    chosen: DownsampleFactor
    chosen_flows: tuple[FlowField, FlowField] = field(repr=False, compare=False, default=None)


def rhu_half(values: np.ndarray) -> np.ndarray:
    """Halve fixed-point values with round-half-up (arithmetic shift)."""
    return (values + 1) >> 1


def factor_admissible(width: int, height: int, d: int, cfg: EstimatorConfig) -> bool:
    return width >= d * cfg.block_size and height >= d * cfg.block_size


def predict_flows_at_factor(
    past: Frame, future: Frame, d: DownsampleFactor | int, cfg: EstimatorConfig = EstimatorConfig()
) -> tuple[FlowField, FlowField]:
    """Bidirectional flows estimated at 1/d scale and rescaled to full grid.

    Reference luma is d-downsampled, flows are estimated there, each vector is
    multiplied by d (exact, in 1/8-px units), and the reduced grid is expanded
    by nearest-block replication. d = 1 is exactly estimate_bidirectional.
    """
    dval = d.value if isinstance(d, DownsampleFactor) else int(d)
    if dval not in FACTORS:
        raise InvalidInputError(f"factor must be one of {FACTORS}")
    if (past.width, past.height) != (future.width, future.height):
        raise InvalidInputError("reference dimensions must match")
    if not factor_admissible(past.width, past.height, dval, cfg):
        raise InvalidFactorError(
            f"frame {past.width}x{past.height} too small for factor {dval} "
            f"(needs at least {dval * cfg.block_size} per axis)"
        )
    if dval == 1:
        return estimate_bidirectional(past, future, cfg)

    h, w = past.height, past.width
    past_small = block_mean_downsample(past.y.data, dval)
    future_small = block_mean_downsample(future.y.data, dval)
    small_a = estimate_flow_luma(past_small, future_small, cfg)
    small_b = estimate_flow_luma(future_small, past_small, cfg)

    def upscale(small: FlowField) -> FlowField:
        scaled = small.vectors * dval
        rh, rw = scaled.shape[:2]
        rows = np.minimum(np.arange(h) // dval, rh - 1)
        cols = np.minimum(np.arange(w) // dval, rw - 1)
        return FlowField(scaled[rows][:, cols], produced_factor=dval, search_radius=cfg.search_radius)

    return upscale(small_a), upscale(small_b)


def _predict_luma(
    past_y: np.ndarray, future_y: np.ndarray, flow_a: FlowField, flow_b: FlowField
) -> np.ndarray:
    half_a = rhu_half(flow_a.vectors)
    half_b = rhu_half(flow_b.vectors)
    warped_future = kernels.warp_plane(future_y, half_a[:, :, 0], half_a[:, :, 1])
    warped_past = kernels.warp_plane(past_y, half_b[:, :, 0], half_b[:, :, 1])
    return ((warped_future.astype(np.uint16) + warped_past + 1) >> 1).astype(np.uint8)


def _chroma_field(half_field: np.ndarray, ch: int, cw: int) -> np.ndarray:
    sub = half_field[::2, ::2][:ch, :cw]
    return rhu_half(sub)


def bidirectional_predict(past: Frame, future: Frame, flow_a: FlowField, flow_b: FlowField) -> Frame:
    """Average of the two references warped halfway toward the current frame.

    The future reference is warped with half of flow_a, the past with half of
    flow_b; chroma reuses the luma field subsampled and halved once more for
    the 4:2:0 grid.
    """
    if flow_a.vectors.shape[:2] != (past.height, past.width):
        raise InvalidInputError("flow grid must match frame dimensions")
    out_y = _predict_luma(past.y.data, future.y.data, flow_a, flow_b)

    ch, cw = past.u.height, past.u.width
    half_a = rhu_half(flow_a.vectors)
    half_b = rhu_half(flow_b.vectors)
    ca = _chroma_field(half_a, ch, cw)
    cb = _chroma_field(half_b, ch, cw)
    planes = []
    for past_p, future_p in ((past.u.data, future.u.data), (past.v.data, future.v.data)):
        wf = kernels.warp_plane(future_p, ca[:, :, 0], ca[:, :, 1])
        wp = kernels.warp_plane(past_p, cb[:, :, 0], cb[:, :, 1])
        planes.append(((wf.astype(np.uint16) + wp + 1) >> 1).astype(np.uint8))
    return frame_from_arrays(out_y, planes[0], planes[1])


def prediction_psnr(current: Frame, past: Frame, future: Frame,
                    flows: tuple[FlowField, FlowField]) -> float:
    """Luma PSNR of the bidirectional prediction against the current frame."""
    pred_y = _predict_luma(past.y.data, future.y.data, flows[0], flows[1])
    return plane_psnr(current.y.data, pred_y)


def choose_downsampling_factor(
    current: Frame,
    past: Frame,
    future: Frame,
    cfg: EstimatorConfig = EstimatorConfig(),
    threads: int = 1,
) -> AdaptationReport:
    """Evaluate all admissible factors and keep the best prediction PSNR.

    Encoder-side only (needs the uncoded current frame). Ties resolve to the
    smallest factor; inadmissible candidates score -inf. The candidates are
    independent computations, so they may be evaluated concurrently; the
    report is assembled in factor order either way.
    """

    def evaluate(dval: int):
        if not factor_admissible(past.width, past.height, dval, cfg):
            return float("-inf"), None
        flows = predict_flows_at_factor(past, future, dval, cfg)
        return prediction_psnr(current, past, future, flows), flows

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(evaluate, FACTORS))
    else:
        results = [evaluate(d) for d in FACTORS]

    best_idx = None
    for idx, (score, _) in enumerate(results):
        if score != float("-inf") and (best_idx is None or score > results[best_idx][0]):
            best_idx = idx
    if best_idx is None:
        raise InvalidInputError("no admissible downsampling factor for this frame size")

    return AdaptationReport(
        psnr_per_factor=tuple(score for score, _ in results),
        chosen=DownsampleFactor(FACTORS[best_idx]),
        chosen_flows=results[best_idx][1],
    )


def _pyramid_stage(vectors: np.ndarray) -> np.ndarray:
    h, w = vectors.shape[:2]
    grouped = vectors[: h // 2 * 2, : w // 2 * 2].reshape(h // 2, 2, w // 2, 2, 2)
    mean = (grouped.sum(axis=(1, 3), dtype=np.int32) + 2) >> 2
    return rhu_half(mean)


def derive_flow_pyramid(flow0: FlowField) -> FlowPyramid:
    """Levels 1..3 from level 0: per stage, 2x2 component mean then halve."""
    if flow0.grid_width % 8 or flow0.grid_height % 8:
        raise InvalidInputError("flow grid dimensions must be divisible by 8")
    levels = [flow0]
    for _ in range(3):
        levels.append(
            FlowField(
                _pyramid_stage(levels[-1].vectors),
                produced_factor=flow0.produced_factor,
                search_radius=flow0.search_radius,
            )
        )
    return FlowPyramid(tuple(levels))
