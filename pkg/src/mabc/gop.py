"""Hierarchical GOP scheduling, the MABC bitstream container, and the full
encode/decode loops.

Coding order within a GOP of size G: the I frame at display 0, the next GOP's
I frame at display G (shared as the future reference), then B frames level by
level with reference distance i = G/2 down to 1, ascending display index
within a level. A trailing partial GOP is coded as the largest dyadic GOP
that fits, recursively; a final straggler frame is coded as I.

The encoder's reference buffer holds exactly what the decoder will
reconstruct, so decode(encode(s)) reproduces the encoder's local
reconstruction bit for bit. Flows are never written to the stream; the
decoder re-runs flow prediction at the signaled downsampling factor on its
own decoded references.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .adapt import (
    DownsampleFactor,
    choose_downsampling_factor,
    derive_flow_pyramid,
    predict_flows_at_factor,
)
from .bitstream import ByteReader, write_varint
from .errors import (
    BitstreamFormatError,
    ConformanceError,
    InvalidFactorError,
    InvalidInputError,
    TruncationError,
)
from .flow import EstimatorConfig, zero_flow
from .frame import (
    Frame,
    PsnrValues,
    VideoSequence,
    crop_frame,
    frames_equal,
    pad_frame,
    psnr,
)
from .mcp import (
    BLOCK,
    DEFAULT_ALPHAS_UNITS,
    build_image_pyramid,
    choose_blend_modes,
    compensate,
    refine_offsets,
    refined_offsets,
    zero_refinement,
)
from . import kernels
from .residual import (
    PRESET_BASE_Q,
    code_inter_frame,
    code_intra_frame,
    decode_blend_payload,
    decode_inter_frame,
    decode_intra_frame,
    decode_refinement_payload,
    encode_blend_payload,
    encode_refinement_payload,
)

MAGIC = b"MABC"
VERSION = 1
LOSSLESS_PRESET = 4  # preset byte value selecting the all-steps-1 mode

_FLAG_HALFPEL = 1
_FLAG_ADAPTIVE_DOWNSAMPLING = 2
_FLAG_FLOW_PREDICTION = 4
_FLAG_REFINEMENT = 8

_MARKER_B = 1
_MARKER_D_SHIFT = 1
_MARKER_Q_OVERRIDE = 8


# ---------------------------------------------------------------------------
# GOP planning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GopSlot:
    display_index: int
    coding_order: int
    frame_type: str  # "I" or "B"
    ref_distance: int = 0
    past_ref: int | None = None
    future_ref: int | None = None


@dataclass(frozen=True)
class GopPlan:
    gop_size: int
    slots: tuple[GopSlot, ...]


def _b_slots(start: int, g: int):
    """B slots of the GOP spanning displays [start, start+g], coding order."""
    i = g // 2
    while i >= 1:
        for t in range(start + i, start + g, 2 * i):
            yield t, i
        i //= 2


def build_gop_plan(gop_size: int) -> GopPlan:
    """Canonical plan for one GOP: displays 0..G including both boundary I frames."""
    if gop_size < 2 or gop_size > 64 or gop_size & (gop_size - 1):
        raise InvalidInputError("GOP size must be a power of two in [2, 64]")
    slots = [
        GopSlot(0, 0, "I"),
        GopSlot(gop_size, 1, "I"),
    ]
    order = 2
    for t, i in _b_slots(0, gop_size):
        slots.append(GopSlot(t, order, "B", i, t - i, t + i))
        order += 1
    return GopPlan(gop_size, tuple(slots))


@dataclass(frozen=True)
class CodingStep:
    display_index: int
    frame_type: str
    ref_distance: int = 0
    past_ref: int | None = None
    future_ref: int | None = None


def build_sequence_schedule(frame_count: int, gop_size: int) -> list[CodingStep]:
    """Coding order for a whole sequence, including trailing dyadic GOPs."""
    if frame_count < 1:
        raise InvalidInputError("sequence must contain at least one frame")
    if gop_size < 2 or gop_size > 64 or gop_size & (gop_size - 1):
        raise InvalidInputError("GOP size must be a power of two in [2, 64]")
    steps = [CodingStep(0, "I")]
    start = 0
    while start < frame_count - 1:
        remaining = frame_count - 1 - start
        g = 1
        while g * 2 <= min(remaining, gop_size):
            g *= 2
        if g < 2:
            steps.append(CodingStep(start + 1, "I"))
            start += 1
            continue
        steps.append(CodingStep(start + g, "I"))
        for t, i in _b_slots(start, g):
            steps.append(CodingStep(t, "B", i, t - i, t + i))
        start += g
    return steps


# ---------------------------------------------------------------------------
# Settings and headers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EncoderSettings:
    """Everything the encoder needs beyond the input sequence.

    quality 0..3 selects the base quantizer (4, 8, 16, 32); quality 4 is the
    lossless mode (every step 1). fixed_d pins the downsampling factor when
    adaptive selection is off; it implies adaptive_downsampling=False.
    """

    quality: int = 1
    gop_size: int = 16
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    alphas_units: tuple[int, int, int] = DEFAULT_ALPHAS_UNITS
    adaptive_downsampling: bool = True
    flow_prediction: bool = True
    refinement: bool = True
    fixed_d: int | None = None
    threads: int = 1
    q_overrides: dict[int, int] | None = None  # display index -> base quantizer
    self_check: bool = False  # re-decode every payload while encoding

    def __post_init__(self):
        if not (0 <= self.quality <= LOSSLESS_PRESET):
            raise InvalidInputError("quality must be 0..3, or 4 for lossless")
        if self.fixed_d is not None:
            if self.fixed_d not in (1, 2, 4, 8):
                raise InvalidInputError("fixed_d must be one of 1, 2, 4, 8")
            object.__setattr__(self, "adaptive_downsampling", False)
        if self.threads < 1:
            raise InvalidInputError("threads must be >= 1")
        for q in (self.q_overrides or {}).values():
            if not 1 <= q <= 65535:
                raise InvalidInputError("quantizer overrides must be in [1, 65535]")

    @property
    def base_q(self) -> int:
        return 1 if self.quality == LOSSLESS_PRESET else PRESET_BASE_Q[self.quality]


@dataclass(frozen=True)
class SequenceHeader:
    width: int
    height: int
    fps: tuple[int, int]
    frame_count: int
    gop_size: int
    estimator: EstimatorConfig
    alphas_units: tuple[int, int, int]
    quality: int
    adaptive_downsampling: bool
    flow_prediction: bool
    refinement: bool

    @property
    def base_q(self) -> int:
        return 1 if self.quality == LOSSLESS_PRESET else PRESET_BASE_Q[self.quality]

    @property
    def padded_size(self) -> tuple[int, int]:
        return ((self.width + 15) // 16 * 16, (self.height + 15) // 16 * 16)


def _header_bytes(h: SequenceHeader) -> bytes:
    out = bytearray(MAGIC)
    out.append(VERSION)
    write_varint(out, h.width)
    write_varint(out, h.height)
    write_varint(out, h.fps[0])
    write_varint(out, h.fps[1])
    write_varint(out, h.frame_count)
    out.append(h.gop_size)
    out.append(h.estimator.block_size)
    out.append(h.estimator.search_radius)
    flags = 0
    if h.estimator.halfpel_refine:
        flags |= _FLAG_HALFPEL
    if h.adaptive_downsampling:
        flags |= _FLAG_ADAPTIVE_DOWNSAMPLING
    if h.flow_prediction:
        flags |= _FLAG_FLOW_PREDICTION
    if h.refinement:
        flags |= _FLAG_REFINEMENT
    out.append(flags)
    for a in h.alphas_units:
        out.append(a)
    out.append(h.quality)
    return bytes(out)


def _parse_header(reader: ByteReader) -> SequenceHeader:
    if reader.read_bytes(4) != MAGIC:
        raise BitstreamFormatError("not an MABC stream (bad magic)")
    version = reader.read_u8()
    if version != VERSION:
        raise BitstreamFormatError(f"unsupported stream version {version}")
    width = reader.read_varint()
    height = reader.read_varint()
    fps = (reader.read_varint(), reader.read_varint())
    frame_count = reader.read_varint()
    gop_size = reader.read_u8()
    block_size = reader.read_u8()
    radius = reader.read_u8()
    flags = reader.read_u8()
    alphas = (reader.read_u8(), reader.read_u8(), reader.read_u8())
    quality = reader.read_u8()
    if width < 1 or height < 1:
        raise BitstreamFormatError("header declares empty dimensions")
    if width > 16384 or height > 16384:
        raise BitstreamFormatError("header dimensions exceed the 16384 limit")
    if quality > LOSSLESS_PRESET:
        raise BitstreamFormatError(f"unknown quality preset {quality}")
    if frame_count > reader.remaining():
        raise TruncationError(
            f"header declares {frame_count} frames but only {reader.remaining()} bytes follow"
        )
    return SequenceHeader(
        width=width,
        height=height,
        fps=fps,
        frame_count=frame_count,
        gop_size=gop_size,
        estimator=EstimatorConfig(block_size, radius, bool(flags & _FLAG_HALFPEL)),
        alphas_units=alphas,
        quality=quality,
        adaptive_downsampling=bool(flags & _FLAG_ADAPTIVE_DOWNSAMPLING),
        flow_prediction=bool(flags & _FLAG_FLOW_PREDICTION),
        refinement=bool(flags & _FLAG_REFINEMENT),
    )


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameStats:
    display_index: int
    frame_type: str
    ref_distance: int
    d_value: int | None
    bits: int
    psnr: PsnrValues


@dataclass(frozen=True)
class EncodeResult:
    bitstream: bytes
    stats: tuple[FrameStats, ...]
    reconstruction: VideoSequence

    @property
    def total_bits(self) -> int:
        return 8 * len(self.bitstream)


def _predict_b_frame(current, past, future, settings_like, threads):
    """Shared encoder-side B-frame prediction: flows, refinement, blend modes."""
    h, w = past.height, past.width
    d_value = None
    if settings_like.flow_prediction:
        if settings_like.adaptive_downsampling:
            report = choose_downsampling_factor(current, past, future, settings_like.estimator, threads)
            flows = report.chosen_flows
            d_value = report.chosen.value
        else:
            fixed = settings_like.fixed_d or 1
            flows = predict_flows_at_factor(past, future, fixed, settings_like.estimator)
            d_value = fixed
    else:
        flows = (zero_flow(h, w), zero_flow(h, w))

    if settings_like.refinement:
        flow_pyrs = (derive_flow_pyramid(flows[0]), derive_flow_pyramid(flows[1]))
        refinement = refine_offsets(
            build_image_pyramid(current.y.data),
            build_image_pyramid(past.y.data),
            build_image_pyramid(future.y.data),
            flow_pyrs,
            settings_like.alphas_units,
        )
    else:
        refinement = zero_refinement(h, w, settings_like.alphas_units)

    off_f, off_p = refined_offsets(flows, refinement, h, w)
    warped_future = kernels.warp_plane(future.y.data, off_f[:, :, 0], off_f[:, :, 1])
    warped_past = kernels.warp_plane(past.y.data, off_p[:, :, 0], off_p[:, :, 1])
    modes = choose_blend_modes(current.y.data, warped_past, warped_future)

    prediction = compensate(past, future, flows, refinement, modes)
    return d_value, flows, refinement, modes, prediction


def _self_check_frame(step, payloads, refinement, modes, prediction, recon,
                      base_q, header, pw, ph):
    """Decode the just-written payloads and compare against the encoder's own
    structures; any mismatch is an internal consistency failure."""
    t = step.display_index
    if step.frame_type == "I":
        redecoded = decode_intra_frame(payloads, base_q, pw, ph, t)
        if not frames_equal(redecoded, recon):
            raise ConformanceError(f"internal consistency failure: intra frame {t} reconstruction")
        return
    idx = 0
    if header.refinement:
        field = decode_refinement_payload(payloads[idx], ph, pw, header.alphas_units)
        idx += 1
        for j, (a, b) in enumerate(zip(field.corrections, refinement.corrections)):
            if not (a == b).all():
                raise ConformanceError(
                    f"internal consistency failure: frame {t} refinement level {j}"
                )
    redecoded_modes = decode_blend_payload(payloads[idx], ph // BLOCK, pw // BLOCK)
    idx += 1
    if not (redecoded_modes.modes == modes.modes).all():
        raise ConformanceError(f"internal consistency failure: frame {t} blend modes")
    redecoded = decode_inter_frame(payloads[idx:], prediction, base_q, step.ref_distance, t)
    if not frames_equal(redecoded, recon):
        raise ConformanceError(f"internal consistency failure: frame {t} reconstruction")


def encode_sequence(seq: VideoSequence, settings: EncoderSettings = EncoderSettings()) -> EncodeResult:
    """Encode a sequence to an MABC stream; also returns per-frame stats and
    the encoder-side reconstruction (what the decoder must reproduce)."""
    if len(seq.frames) == 0:
        raise InvalidInputError("cannot encode an empty sequence")
    if settings.fixed_d is not None and not settings.flow_prediction:
        raise InvalidInputError("fixed_d requires flow prediction to be enabled")

    header = SequenceHeader(
        width=seq.width,
        height=seq.height,
        fps=seq.fps,
        frame_count=len(seq.frames),
        gop_size=settings.gop_size,
        estimator=settings.estimator,
        alphas_units=settings.alphas_units,
        quality=settings.quality,
        adaptive_downsampling=settings.adaptive_downsampling,
        flow_prediction=settings.flow_prediction,
        refinement=settings.refinement,
    )
    schedule = build_sequence_schedule(len(seq.frames), settings.gop_size)

    padded = {f.display_index: pad_frame(f) for f in seq.frames}
    decoded: dict[int, Frame] = {}
    out = bytearray(_header_bytes(header))
    stats: list[FrameStats] = []
    overrides = settings.q_overrides or {}

    for step in schedule:
        t = step.display_index
        base_q = overrides.get(t, settings.base_q)
        section = bytearray()
        if step.frame_type == "I":
            marker = 0
            if t in overrides:
                marker |= _MARKER_Q_OVERRIDE
            section.append(marker)
            if t in overrides:
                write_varint(section, overrides[t])
            payloads, recon = code_intra_frame(padded[t], base_q)
            d_value = None
            if settings.self_check:
                pw, ph = header.padded_size
                _self_check_frame(step, payloads, None, None, None, recon, base_q, header, pw, ph)
        else:
            past = decoded[step.past_ref]
            future = decoded[step.future_ref]
            d_value, flows, refinement, modes, prediction = _predict_b_frame(
                padded[t], past, future, settings, settings.threads
            )
            marker = _MARKER_B
            if d_value is not None:
                marker |= DownsampleFactor(d_value).code << _MARKER_D_SHIFT
            if t in overrides:
                marker |= _MARKER_Q_OVERRIDE
            section.append(marker)
            if t in overrides:
                write_varint(section, overrides[t])
            payloads, recon = code_inter_frame(padded[t], prediction, base_q, step.ref_distance)
            side = []
            if settings.refinement:
                side.append(encode_refinement_payload(refinement))
            side.append(encode_blend_payload(modes))
            payloads = side + payloads
            if settings.self_check:
                pw, ph = header.padded_size
                _self_check_frame(step, payloads, refinement, modes, prediction,
                                  recon, base_q, header, pw, ph)
        for p in payloads:
            write_varint(section, len(p))
        for p in payloads:
            section.extend(p)
        decoded[t] = recon
        out.extend(section)
        stats.append(
            FrameStats(
                display_index=t,
                frame_type=step.frame_type,
                ref_distance=step.ref_distance,
                d_value=d_value,
                bits=8 * len(section),
                psnr=psnr(seq.frames[t], crop_frame(recon, seq.width, seq.height)),
            )
        )

    stats.sort(key=lambda s: s.display_index)
    recon_frames = [crop_frame(decoded[t], seq.width, seq.height) for t in sorted(decoded)]
    recon_seq = VideoSequence(tuple(recon_frames), seq.width, seq.height, seq.fps)
    return EncodeResult(bytes(out), tuple(stats), recon_seq)


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------


def decode_sequence(data: bytes) -> VideoSequence:
    """Decode an MABC stream to frames in display order, cropped to the
    original dimensions."""
    reader = ByteReader(data, "stream header")
    header = _parse_header(reader)
    schedule = build_sequence_schedule(header.frame_count, header.gop_size)
    pw, ph = header.padded_size
    nby, nbx = ph // BLOCK, pw // BLOCK

    decoded: dict[int, Frame] = {}
    for k, step in enumerate(schedule):
        t = step.display_index
        reader.context = f"frame {k} (display {t})"
        marker = reader.read_u8()
        is_b = bool(marker & _MARKER_B)
        if is_b != (step.frame_type == "B"):
            raise ConformanceError(
                f"frame {k}: marker type {'B' if is_b else 'I'} does not match schedule"
            )
        base_q = header.base_q
        if marker & _MARKER_Q_OVERRIDE:
            base_q = reader.read_varint()
            if not 1 <= base_q <= 65535:
                raise ConformanceError(f"frame {k}: quantizer override {base_q} out of range")

        if not is_b:
            lengths = [reader.read_varint() for _ in range(3)]
            payloads = [reader.read_bytes(n) for n in lengths]
            recon = decode_intra_frame(payloads, base_q, pw, ph, t)
        else:
            n_payloads = 4 + (1 if header.refinement else 0)
            lengths = [reader.read_varint() for _ in range(n_payloads)]
            payloads = [reader.read_bytes(n) for n in lengths]
            past = decoded[step.past_ref]
            future = decoded[step.future_ref]

            if header.flow_prediction:
                d = DownsampleFactor.from_code((marker >> _MARKER_D_SHIFT) & 3)
                try:
                    flows = predict_flows_at_factor(past, future, d, header.estimator)
                except InvalidFactorError as exc:
                    raise ConformanceError(f"frame {k}: {exc}") from exc
            else:
                flows = (zero_flow(ph, pw), zero_flow(ph, pw))

            idx = 0
            if header.refinement:
                refinement = decode_refinement_payload(payloads[idx], ph, pw, header.alphas_units)
                idx += 1
            else:
                refinement = zero_refinement(ph, pw, header.alphas_units)
            modes = decode_blend_payload(payloads[idx], nby, nbx)
            idx += 1
            prediction = compensate(past, future, flows, refinement, modes)
            recon = decode_inter_frame(payloads[idx:], prediction, base_q, step.ref_distance, t)
        decoded[t] = recon

    frames = [crop_frame(decoded[t], header.width, header.height) for t in sorted(decoded)]
    return VideoSequence(tuple(frames), header.width, header.height, header.fps)
