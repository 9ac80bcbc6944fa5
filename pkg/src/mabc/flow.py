"""Bounded-range bidirectional flow estimation between decoded references.

Deterministic full-search block matching on luma with optional half-pel
refinement. The search radius is a hard bound: motion outside [-R, +R] px is
simply not representable at the scale the estimator runs at, which is what
makes the reference-downsampling adaptation observable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError
from .frame import Frame

FIXED_POINT_UNITS = 8  # flow components are stored in 1/8-px units


@dataclass(frozen=True)
class EstimatorConfig:
    block_size: int = 16
    search_radius: int = 8
    halfpel_refine: bool = True

    def __post_init__(self):
        if self.block_size not in (8, 16):
            raise InvalidInputError("block_size must be 8 or 16")
        if not 1 <= self.search_radius <= 64:
            raise InvalidInputError("search_radius must be in [1, 64]")


@dataclass(frozen=True)
class FlowField:
    """Dense displacement field in signed 1/8-px fixed point.

    vectors has shape (grid_height, grid_width, 2) with [..., 0] = dx and
    [..., 1] = dy. produced_factor and search_radius record the range bound
    the field was produced under: |component| <= 8 * factor * (radius + 1).
    """

    vectors: np.ndarray
    produced_factor: int = 1
    search_radius: int = 8

    def __post_init__(self):
        v = np.ascontiguousarray(self.vectors, dtype=np.int32)
        if v is self.vectors:
            v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        if v.ndim != 3 or v.shape[2] != 2:
            raise InvalidInputError("flow vectors must have shape (h, w, 2)")

    @property
    def grid_width(self) -> int:
        return self.vectors.shape[1]

    @property
    def grid_height(self) -> int:
        return self.vectors.shape[0]

    @property
    def range_bound_units(self) -> int:
        return FIXED_POINT_UNITS * self.produced_factor * (self.search_radius + 1)

    @property
    def dx(self) -> np.ndarray:
        return self.vectors[:, :, 0]

    @property
    def dy(self) -> np.ndarray:
        return self.vectors[:, :, 1]


def zero_flow(height: int, width: int) -> FlowField:
    return FlowField(np.zeros((height, width, 2), dtype=np.int32))


def _expand_block_vectors(block_vecs: np.ndarray, block_size: int, height: int, width: int) -> np.ndarray:
    dense = np.repeat(np.repeat(block_vecs, block_size, axis=0), block_size, axis=1)
    return dense[:height, :width]


def estimate_flow_luma(src_y: np.ndarray, dst_y: np.ndarray, cfg: EstimatorConfig) -> FlowField:
    """Array-level estimator used both directly and at reduced resolutions."""
    if src_y.shape != dst_y.shape:
        raise InvalidInputError("src and dst dimensions must match")
    h, w = src_y.shape
    block_vecs = kernels.block_motion_search(
        src_y, dst_y, cfg.block_size, cfg.search_radius, cfg.halfpel_refine
    )
    dense = _expand_block_vectors(block_vecs, cfg.block_size, h, w)
    return FlowField(dense, produced_factor=1, search_radius=cfg.search_radius)


def estimate_flow(src: Frame, dst: Frame, cfg: EstimatorConfig = EstimatorConfig()) -> FlowField:
    """Estimate dense flow f such that Warp(dst, f) approximates src.

    Per luma block: full-search SAD over integer offsets in [-R, +R]^2 with
    border-clamped sampling, then half-pel refinement over the 8 half-sample
    neighbors of the winner. The block vector is replicated to its pixels.
    """
    return estimate_flow_luma(src.y.data, dst.y.data, cfg)


def estimate_bidirectional(
    past: Frame, future: Frame, cfg: EstimatorConfig = EstimatorConfig()
) -> tuple[FlowField, FlowField]:
    """(flow_a, flow_b): past-to-future flow anchored on past, and the reverse."""
    flow_a = estimate_flow(past, future, cfg)
    flow_b = estimate_flow(future, past, cfg)
    return flow_a, flow_b
