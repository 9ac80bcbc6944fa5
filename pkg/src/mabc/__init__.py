"""mabc: a hierarchical B-frame video codec that adapts the reference-frame
downsampling factor per frame for bounded-range flow prediction, plus the
RD-curve / BD-rate evaluation tools around it."""

from .adapt import (
    AdaptationReport,
    DownsampleFactor,
    FlowPyramid,
    bidirectional_predict,
    choose_downsampling_factor,
    derive_flow_pyramid,
    predict_flows_at_factor,
    prediction_psnr,
)
from .errors import CodecError
from .flow import EstimatorConfig, FlowField, estimate_bidirectional, estimate_flow
from .frame import (
    Frame,
    PixelPlane,
    VideoSequence,
    downsample_plane,
    psnr,
    read_y4m,
    write_y4m,
)
from .gop import (
    EncodeResult,
    EncoderSettings,
    GopPlan,
    SequenceHeader,
    build_gop_plan,
    decode_sequence,
    encode_sequence,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .mcp import BlendModeMap, ImagePyramid, RefinementField, compensate, refine_offsets, warp
from .rd import RdCurve, RdPoint, bd_rate, measure, report
from .residual import QualityPreset

__version__ = "0.1.0"

__all__ = [
    "AdaptationReport",
    "BlendModeMap",
    "CodecError",
    "DownsampleFactor",
    "EncodeResult",
    "EncoderSettings",
    "EstimatorConfig",
    "FlowField",
    "FlowPyramid",
    "Frame",
    "GopPlan",
    "ImagePyramid",
    "KERNEL_BACKEND",
    "PixelPlane",
    "QualityPreset",
    "RdCurve",
    "RdPoint",
    "RefinementField",
    "SequenceHeader",
    "VideoSequence",
    "bd_rate",
    "bidirectional_predict",
    "build_gop_plan",
    "choose_downsampling_factor",
    "compensate",
    "decode_sequence",
    "derive_flow_pyramid",
    "downsample_plane",
    "encode_sequence",
    "estimate_bidirectional",
    "estimate_flow",
    "measure",
    "predict_flows_at_factor",
    "prediction_psnr",
    "psnr",
    "read_y4m",
    "refine_offsets",
    "report",
    "warp",
    "write_y4m",
]
