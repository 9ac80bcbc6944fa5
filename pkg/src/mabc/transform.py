"""8x8 integer transform and scalar quantizer.

The transform is the sequency-ordered 8-point Walsh-Hadamard basis (entries
+-1, rows sorted by sign-change count so zig-zag scanning sees energy fall
off). Forward: Y = W X W with no rounding (|coeff| <= 64 * 255 for 8-bit
residuals). Inverse: X = (W Y W + 32) >> 6, a single round-half-up stage.
Because W W = 8 I exactly, inverse(forward(x)) == x for every integer block,
which is what makes the Q = 1 path lossless end to end.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def _walsh8() -> np.ndarray:
    h = np.array([[1]], dtype=np.int32)
    for _ in range(3):
        h = np.block([[h, h], [h, -h]])
    sign_changes = (np.diff(h, axis=1) != 0).sum(axis=1)
    return h[np.argsort(sign_changes, kind="stable")]


WALSH8 = _walsh8()
WALSH8.setflags(write=False)


def _zigzag_order() -> np.ndarray:
    coords = sorted(
        ((y, x) for y in range(8) for x in range(8)),
        key=lambda p: (p[0] + p[1], p[0] if (p[0] + p[1]) % 2 else p[1]),
    )
    return np.array([y * 8 + x for y, x in coords], dtype=np.intp)


ZIGZAG = _zigzag_order()
ZIGZAG.setflags(write=False)
ZIGZAG_INV = np.argsort(ZIGZAG)
ZIGZAG_INV.setflags(write=False)


def forward_transform_blocks(blocks: np.ndarray) -> np.ndarray:
    """Transform a stack of 8x8 integer blocks (shape (..., 8, 8)) exactly."""
    x = blocks.astype(np.int64)
    return np.einsum("ij,...jk,kl->...il", WALSH8, x, WALSH8).astype(np.int32)


def inverse_transform_blocks(coeffs: np.ndarray) -> np.ndarray:
    y = coeffs.astype(np.int64)
    v = np.einsum("ij,...jk,kl->...il", WALSH8, y, WALSH8)
    return ((v + 32) >> 6).astype(np.int32)


def forward_transform(block: np.ndarray) -> np.ndarray:
    """Forward transform of one 8x8 residual block with inputs in [-255, 255]."""
    block = np.asarray(block)
    if block.shape != (8, 8):
        raise InvalidInputError("transform blocks are 8x8")
    if block.min() < -255 or block.max() > 255:
        raise InvalidInputError("residual samples must lie in [-255, 255]")
    return forward_transform_blocks(block)


def inverse_transform(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (8, 8):
        raise InvalidInputError("transform blocks are 8x8")
    return inverse_transform_blocks(coeffs)


def quantize(coeffs: np.ndarray, step: int) -> np.ndarray:
    """Uniform mid-tread quantizer: level = sign(c) * floor(|c| / step)."""
    if step < 1:
        raise InvalidInputError("quantizer step must be >= 1")
    c = np.asarray(coeffs)
    return (np.sign(c) * (np.abs(c) // step)).astype(np.int32)


def dequantize(levels: np.ndarray, step: int) -> np.ndarray:
    if step < 1:
        raise InvalidInputError("quantizer step must be >= 1")
    return np.asarray(levels, dtype=np.int32) * step
