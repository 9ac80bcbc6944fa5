"""Frozen-artifact conformance: the stream format must not drift.

Artifacts live in tests/golden/ and are regenerated only deliberately via
tools/make_golden.py (see its docstring).
"""

import pathlib

import pytest

from mabc.frame import frames_equal, read_y4m
from mabc.gop import EncoderSettings, decode_sequence, encode_sequence
from mabc.rd import measure

GOLDEN = pathlib.Path(__file__).parent / "golden"

# Reference values from the run that produced the committed artifacts.
GOLDEN_BPP = 3.9375
GOLDEN_PSNR = 54.6696


def test_golden_stream_decodes_to_golden_yuv():
    decoded = decode_sequence((GOLDEN / "golden.mabc").read_bytes())
    expect = read_y4m((GOLDEN / "golden.y4m").read_bytes())
    assert len(decoded.frames) == len(expect.frames)
    for a, b in zip(decoded.frames, expect.frames):
        assert frames_equal(a, b)


def test_reencoding_source_reproduces_golden_stream():
    source = read_y4m((GOLDEN / "source.y4m").read_bytes())
    result = encode_sequence(source, EncoderSettings(quality=1, gop_size=4))
    assert result.bitstream == (GOLDEN / "golden.mabc").read_bytes()


def test_cli_decodes_golden_stream(tmp_path):
    from mabc.cli import main

    out = tmp_path / "out.y4m"
    assert main(["decode", "-i", str(GOLDEN / "golden.mabc"), "-o", str(out)]) == 0
    assert out.read_bytes() == (GOLDEN / "golden.y4m").read_bytes()


def test_golden_rd_point():
    source = read_y4m((GOLDEN / "source.y4m").read_bytes())
    stream = (GOLDEN / "golden.mabc").read_bytes()
    decoded = decode_sequence(stream)
    point, _ = measure(source, decoded, 8 * len(stream))
    assert point.bpp == pytest.approx(GOLDEN_BPP, abs=1e-9)
    assert point.psnr == pytest.approx(GOLDEN_PSNR, abs=5e-4)
