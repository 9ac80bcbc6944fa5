"""Planar 8-bit 4:2:0 frames, YUV4MPEG2 container I/O, and the fixed-rounding
resampling primitives the rest of the codec is built on.

All integer averaging in this package rounds half up (ties toward +infinity),
implemented as an add-then-arithmetic-shift so the same bits come out on every
platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import BinaryIO, NamedTuple

import numpy as np

from .errors import InvalidInputError, TruncationError, UnsupportedFormatError, Y4MParseError

PSNR_CAP_DB = 99.0

_Y4M_MAGIC = b"YUV4MPEG2"
_C420_OK = {"420", "420jpeg", "420mpeg2", "420paldv"}


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.uint8)
    if out is arr:
        out = arr.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PixelPlane:
    """One 8-bit sample plane, immutable after construction."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2:
            raise InvalidInputError("plane data must be 2-D (height, width)")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise InvalidInputError("plane dimensions must be at least 1x1")
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def samples(self) -> bytes:
        return self.data.tobytes()


@dataclass(frozen=True)
class Frame:
    """A 4:2:0 picture: full-resolution luma plus two quarter chroma planes."""

    y: PixelPlane
    u: PixelPlane
    v: PixelPlane
    display_index: int = 0

    def __post_init__(self):
        cw = (self.y.width + 1) // 2
        ch = (self.y.height + 1) // 2
        for name, plane in (("u", self.u), ("v", self.v)):
            if (plane.width, plane.height) != (cw, ch):
                raise InvalidInputError(
                    f"{name} plane is {plane.width}x{plane.height}, expected {cw}x{ch} for 4:2:0"
                )
        if self.display_index < 0:
            raise InvalidInputError("display_index must be nonnegative")

    @property
    def width(self) -> int:
        return self.y.width

    @property
    def height(self) -> int:
        return self.y.height


@dataclass(frozen=True)
class VideoSequence:
    """Frames in display order with shared geometry and a rational frame rate."""

    frames: tuple[Frame, ...]
    width: int
    height: int
    fps: tuple[int, int] = (25, 1)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        for f in self.frames:
            if (f.width, f.height) != (self.width, self.height):
                raise InvalidInputError(
                    f"frame {f.display_index} is {f.width}x{f.height}, sequence is {self.width}x{self.height}"
                )
        if self.fps[0] <= 0 or self.fps[1] <= 0:
            raise InvalidInputError("fps must be a positive rational")

    def __len__(self) -> int:
        return len(self.frames)


def frame_from_arrays(y: np.ndarray, u: np.ndarray, v: np.ndarray, display_index: int = 0) -> Frame:
    return Frame(PixelPlane(y), PixelPlane(u), PixelPlane(v), display_index)


def sequence_from_frames(frames, fps=(25, 1)) -> VideoSequence:
    frames = list(frames)
    if not frames:
        raise InvalidInputError("sequence must contain at least one frame")
    return VideoSequence(tuple(frames), frames[0].width, frames[0].height, tuple(fps))


# ---------------------------------------------------------------------------
# Y4M container
# ---------------------------------------------------------------------------


def read_y4m(source: bytes | bytearray | BinaryIO) -> VideoSequence:
    """Parse a YUV4MPEG2 byte stream into a sequence of 4:2:0 frames."""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    data = bytes(data)

    nl = data.find(b"\n")
    if nl < 0:
        raise Y4MParseError("missing end of signature line", len(data))
    header = data[:nl]
    if not header.startswith(_Y4M_MAGIC):
        raise Y4MParseError("stream does not start with YUV4MPEG2", 0)

    width = height = None
    fps = None
    for token in header[len(_Y4M_MAGIC):].split(b" "):
        if not token:
            continue
        tag, value = chr(token[0]), token[1:].decode("ascii", "replace")
        if tag == "W":
            width = int(value)
        elif tag == "H":
            height = int(value)
        elif tag == "F":
            num, _, den = value.partition(":")
            fps = (int(num), int(den))
        elif tag == "C":
            if value not in _C420_OK:
                raise UnsupportedFormatError(f"chroma subsampling C{value} not supported (4:2:0 only)")
        elif tag == "I":
            if value not in ("p", "?"):
                raise UnsupportedFormatError("interlaced Y4M input not supported")
        # A (aspect) and X (extension) tokens carry no coding semantics here.
    if width is None or height is None or fps is None:
        raise Y4MParseError("signature line must declare W, H and F", 0)
    if width < 1 or height < 1:
        raise Y4MParseError("declared dimensions must be positive", 0)

    cw, ch = (width + 1) // 2, (height + 1) // 2
    frame_bytes = width * height + 2 * cw * ch

    frames = []
    pos = nl + 1
    while pos < len(data):
        marker_end = data.find(b"\n", pos)
        if marker_end < 0:
            raise Y4MParseError("unterminated FRAME marker", pos)
        if not data[pos:marker_end].startswith(b"FRAME"):
            raise Y4MParseError("expected FRAME marker", pos)
        payload_start = marker_end + 1
        payload = data[payload_start:payload_start + frame_bytes]
        if len(payload) < frame_bytes:
            raise TruncationError(
                f"frame {len(frames)} payload truncated: expected {frame_bytes} bytes, got {len(payload)}"
            )
        buf = np.frombuffer(payload, dtype=np.uint8)
        y = buf[: width * height].reshape(height, width)
        u = buf[width * height : width * height + cw * ch].reshape(ch, cw)
        v = buf[width * height + cw * ch :].reshape(ch, cw)
        frames.append(frame_from_arrays(y, u, v, display_index=len(frames)))
        pos = payload_start + frame_bytes

    return VideoSequence(tuple(frames), width, height, fps)


def write_y4m(seq: VideoSequence) -> bytes:
    """Serialize a sequence as YUV4MPEG2; read_y4m(write_y4m(s)) is plane-exact."""
    if len(seq.frames) == 0:
        raise InvalidInputError("cannot write an empty sequence")
    out = bytearray()
    out += b"YUV4MPEG2 W%d H%d F%d:%d Ip A1:1 C420mpeg2\n" % (
        seq.width,
        seq.height,
        seq.fps[0],
        seq.fps[1],
    )
    for frame in seq.frames:
        out += b"FRAME\n"
        out += frame.y.data.tobytes()
        out += frame.u.data.tobytes()
        out += frame.v.data.tobytes()
    return bytes(out)


# ---------------------------------------------------------------------------
# Resampling and quality metrics
# ---------------------------------------------------------------------------


def block_mean_downsample(arr: np.ndarray, d: int) -> np.ndarray:
    """d x d block mean with round-half-up; output dims are floor(input / d)."""
    if d == 1:
        return arr.copy()
    h, w = arr.shape
    oh, ow = h // d, w // d
    cropped = arr[: oh * d, : ow * d].astype(np.uint32)
    sums = cropped.reshape(oh, d, ow, d).sum(axis=(1, 3))
    shift = 2 * int(math.log2(d))
    return ((sums + (1 << (shift - 1))) >> shift).astype(arr.dtype)


def downsample_plane(plane: PixelPlane, d: int) -> PixelPlane:
    """Reduce a plane by an integer factor using the codec's fixed rounding."""
    if d not in (1, 2, 4, 8):
        raise InvalidInputError(f"downsampling factor must be one of 1, 2, 4, 8, got {d}")
    if plane.width < d or plane.height < d:
        raise InvalidInputError(
            f"plane {plane.width}x{plane.height} too small to downsample by {d}"
        )
    if d == 1:
        return plane
    return PixelPlane(block_mean_downsample(plane.data, d))


def plane_psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB between two 8-bit planes, capped at 99 dB for identical input."""
    if a.shape != b.shape:
        raise InvalidInputError(f"plane shapes differ: {a.shape} vs {b.shape}")
    diff = a.astype(np.int64) - b.astype(np.int64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(255.0 * 255.0 / mse), PSNR_CAP_DB)


class PsnrValues(NamedTuple):
    y: float
    u: float
    v: float
    combined: float


def psnr(reference: Frame, test: Frame) -> PsnrValues:
    """Per-plane PSNR plus the (6*Y + U + V) / 8 weighted combination."""
    if (reference.width, reference.height) != (test.width, test.height):
        raise InvalidInputError("frames must have identical dimensions")
    py = plane_psnr(reference.y.data, test.y.data)
    pu = plane_psnr(reference.u.data, test.u.data)
    pv = plane_psnr(reference.v.data, test.v.data)
    return PsnrValues(py, pu, pv, (6.0 * py + pu + pv) / 8.0)


# ---------------------------------------------------------------------------
# Padding (encode-side alignment; interior modules assume multiples of 16)
# ---------------------------------------------------------------------------


def pad_to_multiple(arr: np.ndarray, mult: int) -> np.ndarray:
    """Pad right/bottom by edge replication up to the next multiple of mult."""
    h, w = arr.shape
    ph = (-h) % mult
    pw = (-w) % mult
    if ph == 0 and pw == 0:
        return arr
    return np.pad(arr, ((0, ph), (0, pw)), mode="edge")


def pad_frame(frame: Frame, mult: int = 16) -> Frame:
    """Edge-replicate a frame so luma dims are multiples of mult (chroma mult/2)."""
    y = pad_to_multiple(frame.y.data, mult)
    # Chroma is padded to exactly half the padded luma geometry.
    th, tw = y.shape[0] // 2, y.shape[1] // 2
    u = frame.u.data
    v = frame.v.data
    u = np.pad(u, ((0, th - u.shape[0]), (0, tw - u.shape[1])), mode="edge")
    v = np.pad(v, ((0, th - v.shape[0]), (0, tw - v.shape[1])), mode="edge")
    return frame_from_arrays(y, u, v, frame.display_index)


def crop_frame(frame: Frame, width: int, height: int) -> Frame:
    """Undo pad_frame: crop back to the original geometry."""
    cw, ch = (width + 1) // 2, (height + 1) // 2
    return frame_from_arrays(
        frame.y.data[:height, :width],
        frame.u.data[:ch, :cw],
        frame.v.data[:ch, :cw],
        frame.display_index,
    )


def frames_equal(a: Frame, b: Frame) -> bool:
    return (
        np.array_equal(a.y.data, b.y.data)
        and np.array_equal(a.u.data, b.u.data)
        and np.array_equal(a.v.data, b.v.data)
    )
