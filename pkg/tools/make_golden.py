#!/usr/bin/env python3
"""Regenerate the golden conformance fixtures in tests/golden/.

The golden stream pins the bitstream format: if an intentional format change
lands, rerun this script and commit the new artifacts together with the
change. tests/test_golden.py compares against these byte for byte.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent))
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from mabc.frame import write_y4m
from mabc.gop import EncoderSettings, decode_sequence, encode_sequence
from mabc.rd import measure
from tests.fixtures import pan_sequence

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "golden"

SETTINGS = EncoderSettings(quality=1, gop_size=4)


def main() -> None:
    OUT.mkdir(exist_ok=True)
    seq = pan_sequence(2, frames=5, width=48, height=48)
    result = encode_sequence(seq, SETTINGS)
    decoded = decode_sequence(result.bitstream)
    point, _ = measure(seq, decoded, result.total_bits)

    (OUT / "source.y4m").write_bytes(write_y4m(seq))
    (OUT / "golden.mabc").write_bytes(result.bitstream)
    (OUT / "golden.y4m").write_bytes(write_y4m(decoded))
    print(f"stream: {len(result.bitstream)} bytes")
    print(f"rd point: bpp={point.bpp:.6f} psnr={point.psnr:.4f}")
    print(f"wrote {OUT}/source.y4m, golden.mabc, golden.y4m")


if __name__ == "__main__":
    main()
