"""Deterministic synthetic and photographic test sequences.

Everything is integer arithmetic over seeded RNG output (or bundled sample
photographs), so the same bytes come out on every platform and run; golden
values in the tests rely on that.
"""

from functools import lru_cache

import numpy as np

from mabc.frame import Frame, VideoSequence, block_mean_downsample, frame_from_arrays

FRAMES = 17  # one full GOP of 16 plus the shared boundary I frame


def smooth_texture(height: int, width: int, seed: int, octaves: int = 3) -> np.ndarray:
    """Aperiodic multi-scale texture: smoothed uniform noise, full 0..255 range."""
    rng = np.random.default_rng(seed)
    acc = rng.integers(0, 256, (height, width)).astype(np.float64)
    for k in range(1, octaves + 1):
        step = 2**k
        coarse = rng.integers(0, 256, (height // step + 2, width // step + 2)).astype(np.float64)
        up = np.repeat(np.repeat(coarse, step, 0), step, 1)[:height, :width]
        acc += up * step
    acc -= acc.min()
    acc *= 255.0 / acc.max()
    return np.round(acc).astype(np.uint8)


def _color_master(height: int, width: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    y = smooth_texture(height, width, seed)
    u = smooth_texture(height, width, seed + 1000, octaves=4)
    v = smooth_texture(height, width, seed + 2000, octaves=4)
    return y, u, v


def _window_frame(master, x0: int, y0: int, width: int, height: int, t: int) -> Frame:
    my, mu, mv = master
    y = my[y0 : y0 + height, x0 : x0 + width]
    u = block_mean_downsample(mu[y0 : y0 + height, x0 : x0 + width], 2)
    v = block_mean_downsample(mv[y0 : y0 + height, x0 : x0 + width], 2)
    return frame_from_arrays(y, u, v, t)


@lru_cache(maxsize=None)
def static_sequence(frames: int = FRAMES, width: int = 64, height: int = 64) -> VideoSequence:
    master = _color_master(height, width, seed=11)
    out = [_window_frame(master, 0, 0, width, height, t) for t in range(frames)]
    return VideoSequence(tuple(out), width, height)


@lru_cache(maxsize=None)
def pan_sequence(
    speed: int, frames: int = FRAMES, width: int = 320, height: int = 128
) -> VideoSequence:
    """Global horizontal pan of `speed` px/frame over a wide panorama."""
    span = width + speed * (frames - 1)
    master = _color_master(height, span, seed=23 + speed)
    out = [_window_frame(master, speed * t, 0, width, height, t) for t in range(frames)]
    return VideoSequence(tuple(out), width, height)


def _zoom_plane(tex: np.ndarray, scale_fp: int, out_h: int, out_w: int) -> np.ndarray:
    """Sample tex at (c + (p - c) * scale) with 16.16 fixed point, bilinear."""
    h, w = tex.shape
    cy, cx = (out_h - 1) << 15, (out_w - 1) << 15  # center * 2^16 / 2
    ys = ((np.arange(out_h, dtype=np.int64) << 16) - cy) * scale_fp // 65536 + cy
    xs = ((np.arange(out_w, dtype=np.int64) << 16) - cx) * scale_fp // 65536 + cx
    ys = np.clip(ys, 0, (h - 1) << 16)
    xs = np.clip(xs, 0, (w - 1) << 16)
    y0 = (ys >> 16).astype(np.intp)
    x0 = (xs >> 16).astype(np.intp)
    fy = ((ys >> 8) & 0xFF)[:, None]
    fx = ((xs >> 8) & 0xFF)[None, :]
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    t = tex.astype(np.int64)
    val = (
        (256 - fx) * (256 - fy) * t[y0[:, None], x0[None, :]]
        + fx * (256 - fy) * t[y0[:, None], x1[None, :]]
        + (256 - fx) * fy * t[y1[:, None], x0[None, :]]
        + fx * fy * t[y1[:, None], x1[None, :]]
        + (1 << 15)
    ) >> 16
    return val.astype(np.uint8)


@lru_cache(maxsize=None)
def zoom_sequence(frames: int = FRAMES, width: int = 64, height: int = 64) -> VideoSequence:
    """Slow zoom-in about the frame center (about 0.4% per frame)."""
    my, mu, mv = _color_master(height, width, seed=47)
    out = []
    for t in range(frames):
        scale_fp = (65536 * 1000) // (1000 + 4 * t)
        y = _zoom_plane(my, scale_fp, height, width)
        u = block_mean_downsample(_zoom_plane(mu, scale_fp, height, width), 2)
        v = block_mean_downsample(_zoom_plane(mv, scale_fp, height, width), 2)
        out.append(frame_from_arrays(y, u, v, t))
    return VideoSequence(tuple(out), width, height)


def _bt601(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = rgb[:, :, 0].astype(np.int64)
    g = rgb[:, :, 1].astype(np.int64)
    b = rgb[:, :, 2].astype(np.int64)
    # Full-range BT.601 in 16-bit fixed point.
    y = (19595 * r + 38470 * g + 7471 * b + 32768) >> 16
    u = ((-11059 * r - 21709 * g + 32768 * b + 32768) >> 16) + 128
    v = ((32768 * r - 27439 * g - 5329 * b + 32768) >> 16) + 128
    return (
        np.clip(y, 0, 255).astype(np.uint8),
        np.clip(u, 0, 255).astype(np.uint8),
        np.clip(v, 0, 255).astype(np.uint8),
    )


@lru_cache(maxsize=None)
def natural_sequence(frames: int = FRAMES, size: int = 64) -> VideoSequence:
    """64x64 crop panning across a bundled photograph (scikit-image astronaut)."""
    from skimage.data import astronaut

    y, u, v = _bt601(astronaut())
    out = []
    for t in range(frames):
        x0, y0 = 96 + 2 * t, 120 + 2 * t
        yy = y[y0 : y0 + size, x0 : x0 + size]
        uu = block_mean_downsample(u[y0 : y0 + size, x0 : x0 + size], 2)
        vv = block_mean_downsample(v[y0 : y0 + size, x0 : x0 + size], 2)
        out.append(frame_from_arrays(yy, uu, vv, t))
    return VideoSequence(tuple(out), size, size)


def acceptance_fixtures() -> dict[str, VideoSequence]:
    """The five closed-loop conformance sequences."""
    return {
        "static": static_sequence(),
        "pan4": pan_sequence(4),
        "pan12": pan_sequence(12),
        "zoom": zoom_sequence(),
        "natural": natural_sequence(),
    }


def translated_frame_pair(
    shift: tuple[int, int], width: int = 96, height: int = 96, seed: int = 5
) -> tuple[Frame, Frame]:
    """(src, dst) where dst content is src translated by shift (dx, dy) px.

    Both are windows into one master texture, so the translation is exact with
    fresh content entering at the borders (clamp-free interior)."""
    dx, dy = shift
    mh, mw = height + abs(dy) + 2, width + abs(dx) + 2
    master = _color_master(mh, mw, seed=seed)
    sx, sy = max(dx, 0), max(dy, 0)
    src = _window_frame(master, sx, sy, width, height, 0)
    dst = _window_frame(master, sx - dx, sy - dy, width, height, 1)
    return src, dst
