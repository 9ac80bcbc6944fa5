"""Exception hierarchy shared by all codec modules."""


class CodecError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(CodecError, ValueError):
    """Arguments violate an operation's preconditions."""


class InvalidFactorError(InvalidInputError):
    """Requested downsampling factor is not admissible for this frame size."""


class Y4MParseError(CodecError):
    """Malformed YUV4MPEG2 container data."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TruncationError(CodecError):
    """Input ended before a complete frame payload."""


class UnsupportedFormatError(CodecError):
    """Well-formed input in a format outside this codec's scope."""


class BitstreamFormatError(CodecError):
    """Compressed stream does not start with a recognized header."""


class ConformanceError(CodecError):
    """Decoded stream violates a bitstream invariant (corrupt or non-conforming)."""


class NoOverlapError(CodecError, ValueError):
    """RD curves share no PSNR range, so BD-rate is undefined."""
