"""Rate-distortion measurement, Bjontegaard delta bitrate, and CSV reports.

BD-rate follows the classic recipe: least-squares cubic fit of log10(bpp) as
a function of PSNR for each curve, integrate the difference over the
overlapping PSNR interval, and convert the mean log-domain gap back to a
percentage. Negative means the test codec spends less rate at equal quality.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError, NoOverlapError
from .frame import PSNR_CAP_DB, VideoSequence, psnr


@dataclass(frozen=True)
class RdPoint:
    bpp: float
    psnr: float

    def __post_init__(self):
        if not self.bpp > 0:
            raise InvalidInputError("bpp must be positive")
        if not 0 < self.psnr <= PSNR_CAP_DB:
            raise InvalidInputError(f"psnr must be in (0, {PSNR_CAP_DB}]")


@dataclass(frozen=True)
class RdCurve:
    points: tuple[RdPoint, ...]
    label: str = ""

    def __post_init__(self):
        pts = tuple(sorted(self.points, key=lambda p: p.bpp))
        if len(pts) < 2:
            raise InvalidInputError("an RD curve needs at least 2 points")
        bpps = [p.bpp for p in pts]
        if len(set(bpps)) != len(bpps):
            raise InvalidInputError("RD points must have distinct bpp")
        psnrs = [p.psnr for p in pts]
        if any(b > a for a, b in zip(psnrs[1:], psnrs)):
            warnings.warn(f"RD curve {self.label!r}: PSNR not nondecreasing with bpp", stacklevel=2)
        object.__setattr__(self, "points", pts)

    @property
    def bpps(self) -> np.ndarray:
        return np.array([p.bpp for p in self.points])

    @property
    def psnrs(self) -> np.ndarray:
        return np.array([p.psnr for p in self.points])


class FrameRow(NamedTuple):
    frame: int
    y: float
    u: float
    v: float
    combined: float
    bits: int | None


class MeasureResult(NamedTuple):
    point: RdPoint
    rows: list[FrameRow]


def measure(
    original: VideoSequence,
    decoded: VideoSequence,
    stream_bits: int | Sequence[int],
) -> MeasureResult:
    """Sequence RD point plus per-frame PSNR rows.

    stream_bits may be the total bit count or a per-frame list (then the rows
    carry per-frame bits and the total is their sum). bpp is total bits over
    total pixels; the sequence PSNR is the mean per-frame weighted PSNR.
    """
    if len(original.frames) != len(decoded.frames):
        raise InvalidInputError("sequences must have equal frame counts")
    if (original.width, original.height) != (decoded.width, decoded.height):
        raise InvalidInputError("sequences must have equal dimensions")
    if isinstance(stream_bits, (int, np.integer)):
        total_bits = int(stream_bits)
        per_frame = [None] * len(original.frames)
    else:
        per_frame = [int(b) for b in stream_bits]
        if len(per_frame) != len(original.frames):
            raise InvalidInputError("per-frame bits length must match frame count")
        total_bits = sum(per_frame)

    rows = []
    for idx, (a, b) in enumerate(zip(original.frames, decoded.frames)):
        p = psnr(a, b)
        rows.append(FrameRow(idx, p.y, p.u, p.v, p.combined, per_frame[idx]))
    pixels = original.width * original.height * len(original.frames)
    point = RdPoint(total_bits / pixels, sum(r.combined for r in rows) / len(rows))
    return MeasureResult(point, rows)


def _log_rate_poly(curve: RdCurve) -> np.ndarray:
    return np.polyfit(curve.psnrs, np.log10(curve.bpps), 3)


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Average bitrate difference of test vs anchor, percent; negative = better."""
    for c in (anchor, test):
        if len(c.points) < 4:
            raise InvalidInputError("BD-rate needs at least 4 points per curve")
    lo = max(anchor.psnrs.min(), test.psnrs.min())
    hi = min(anchor.psnrs.max(), test.psnrs.max())
    if not hi > lo:
        raise NoOverlapError(f"PSNR ranges do not overlap ({lo:.2f} vs {hi:.2f})")
    int_anchor = np.polyint(_log_rate_poly(anchor))
    int_test = np.polyint(_log_rate_poly(test))
    avg_diff = (
        (np.polyval(int_test, hi) - np.polyval(int_test, lo))
        - (np.polyval(int_anchor, hi) - np.polyval(int_anchor, lo))
    ) / (hi - lo)
    return float((10.0 ** avg_diff - 1.0) * 100.0)


def report(
    curves: dict[tuple[str, str], RdCurve],
    configs: Iterable[str],
    anchor_config: str,
) -> str:
    """BD-rate table as CSV: one row per sequence, one column per
    configuration (vs the anchor configuration), plus an Average row."""
    configs = list(configs)
    if anchor_config not in configs:
        raise InvalidInputError(f"anchor configuration {anchor_config!r} not among configs")
    sequences = sorted({seq for seq, _ in curves})
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["sequence"] + [f"bd_rate_{c}" for c in configs])

    sums = {c: 0.0 for c in configs}
    counts = {c: 0 for c in configs}
    for seq in sequences:
        row: list[object] = [seq]
        anchor_curve = curves.get((seq, anchor_config))
        for config in configs:
            curve = curves.get((seq, config))
            if curve is None or anchor_curve is None:
                warnings.warn(f"missing RD curve for {seq}/{config}", stacklevel=2)
                row.append("")
                continue
            value = bd_rate(anchor_curve, curve)
            row.append(f"{value:.2f}")
            sums[config] += value
            counts[config] += 1
        writer.writerow(row)

    avg_row: list[object] = ["Average"]
    for config in configs:
        avg_row.append(f"{sums[config] / counts[config]:.2f}" if counts[config] else "")
    writer.writerow(avg_row)
    return buf.getvalue()
