"""Command-line interface: encode, decode, rdsweep, bdrate, metrics.

Exit codes: 0 success, 1 runtime/codec error, 2 usage error. The ablation
flags (--no-adaptive-downsampling, --no-flow-prediction, --no-refinement,
--fixed-d) select the same configurations the BD-rate tables compare.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .errors import CodecError
from .flow import EstimatorConfig
from .frame import read_y4m, write_y4m
from .gop import EncoderSettings, decode_sequence, encode_sequence
from .rd import RdCurve, RdPoint, bd_rate, measure

LOSSLESS_QUALITY = 4


def _settings_from_args(args, quality: int) -> EncoderSettings:
    return EncoderSettings(
        quality=quality,
        gop_size=args.gop,
        estimator=EstimatorConfig(
            block_size=args.block_size,
            search_radius=args.search_radius,
            halfpel_refine=not args.no_halfpel,
        ),
        adaptive_downsampling=not args.no_adaptive_downsampling and args.fixed_d is None,
        flow_prediction=not args.no_flow_prediction,
        refinement=not args.no_refinement,
        fixed_d=args.fixed_d,
        threads=args.threads,
    )


def _add_encode_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gop", type=int, default=16, help="GOP size (power of two, default 16)")
    p.add_argument("--block-size", type=int, choices=(8, 16), default=16)
    p.add_argument("--search-radius", type=int, default=8, metavar="R")
    p.add_argument("--no-halfpel", action="store_true", help="disable half-pel refinement")
    p.add_argument("--no-adaptive-downsampling", action="store_true",
                   help="always estimate flow at the fixed factor (default 1)")
    p.add_argument("--no-flow-prediction", action="store_true",
                   help="use zero flows (no per-frame factor is signaled)")
    p.add_argument("--no-refinement", action="store_true",
                   help="do not transmit offset corrections")
    p.add_argument("--fixed-d", type=int, choices=(1, 2, 4, 8), default=None,
                   help="pin the downsampling factor (implies --no-adaptive-downsampling)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads; never changes the output bytes")


def _write_stats_csv(path: str, stats) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "type", "i", "d", "bits", "y_psnr", "u_psnr", "v_psnr", "psnr"])
        for s in stats:
            writer.writerow([
                s.display_index, s.frame_type, s.ref_distance,
                s.d_value if s.d_value is not None else "-",
                s.bits,
                f"{s.psnr.y:.4f}", f"{s.psnr.u:.4f}", f"{s.psnr.v:.4f}", f"{s.psnr.combined:.4f}",
            ])


def _print_stats(stats, total_bits: int, pixels: int) -> None:
    for s in stats:
        d = str(s.d_value) if s.d_value is not None else "-"
        print(
            f"frame {s.display_index:4d}  type {s.frame_type}  i={s.ref_distance}  d={d}  "
            f"bits={s.bits}  psnr={s.psnr.combined:.2f}"
        )
    mean_psnr = sum(s.psnr.combined for s in stats) / len(stats)
    print(f"total {total_bits // 8} bytes  bpp={total_bits / pixels:.4f}  mean psnr={mean_psnr:.2f} dB")


def cmd_encode(args) -> int:
    with open(args.input, "rb") as fh:
        seq = read_y4m(fh)
    quality = LOSSLESS_QUALITY if args.lossless else args.quality
    result = encode_sequence(seq, _settings_from_args(args, quality))
    with open(args.output, "wb") as fh:
        fh.write(result.bitstream)
    pixels = seq.width * seq.height * len(seq.frames)
    _print_stats(result.stats, result.total_bits, pixels)
    if args.stats:
        _write_stats_csv(args.stats, result.stats)
    return 0


def cmd_decode(args) -> int:
    with open(args.input, "rb") as fh:
        data = fh.read()
    seq = decode_sequence(data)
    with open(args.output, "wb") as fh:
        fh.write(write_y4m(seq))
    print(f"decoded {len(seq.frames)} frames ({seq.width}x{seq.height})")
    return 0


def cmd_rdsweep(args) -> int:
    if len(args.qualities) < 2:
        print("rdsweep needs at least 2 qualities", file=sys.stderr)
        return 2
    with open(args.input, "rb") as fh:
        seq = read_y4m(fh)
    rows = []
    for quality in args.qualities:
        result = encode_sequence(seq, _settings_from_args(args, quality))
        decoded = decode_sequence(result.bitstream)
        point, _ = measure(seq, decoded, result.total_bits)
        rows.append((quality, point))
        print(f"quality {quality}: bpp={point.bpp:.4f} psnr={point.psnr:.2f}")
    with open(args.csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "quality", "bpp", "psnr"])
        for quality, point in rows:
            writer.writerow([args.label, quality, f"{point.bpp:.8f}", f"{point.psnr:.6f}"])
    return 0


def _read_curve_csv(path: str) -> RdCurve:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        points = [RdPoint(float(row["bpp"]), float(row["psnr"])) for row in reader]
    return RdCurve(tuple(points), label=path)


def cmd_bdrate(args) -> int:
    anchor = _read_curve_csv(args.anchor)
    test = _read_curve_csv(args.test)
    value = bd_rate(anchor, test)
    print(f"BD-rate: {value:+.2f}%")
    return 0


def cmd_metrics(args) -> int:
    with open(args.original, "rb") as fh:
        original = read_y4m(fh)
    with open(args.decoded, "rb") as fh:
        decoded = read_y4m(fh)
    if args.bits:
        point, rows = measure(original, decoded, args.bits)
        mean_psnr = point.psnr
    else:
        _, rows = measure(original, decoded, 1)  # placeholder bit count, bpp unused
        mean_psnr = sum(r.combined for r in rows) / len(rows)
    for r in rows:
        print(f"frame {r.frame:4d}  Y={r.y:.2f}  U={r.u:.2f}  V={r.v:.2f}  psnr={r.combined:.2f}")
    line = f"mean psnr={mean_psnr:.4f} dB"
    if args.bits:
        line += f"  bpp={args.bits / (original.width * original.height * len(original.frames)):.6f}"
    print(line)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "y_psnr", "u_psnr", "v_psnr", "psnr"])
            for r in rows:
                writer.writerow([r.frame, f"{r.y:.4f}", f"{r.u:.4f}", f"{r.v:.4f}", f"{r.combined:.4f}"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mabc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a Y4M file to an .mabc stream")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--quality", "-q", type=int, choices=(0, 1, 2, 3), default=1)
    p.add_argument("--lossless", action="store_true", help="all quantizer steps 1")
    p.add_argument("--stats", help="write per-frame stats CSV here")
    _add_encode_options(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode an .mabc stream to Y4M")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("rdsweep", help="encode at several qualities and write an RD curve CSV")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--qualities", type=int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--csv", required=True)
    p.add_argument("--label", default="mabc")
    _add_encode_options(p)
    p.set_defaults(func=cmd_rdsweep)

    p = sub.add_parser("bdrate", help="BD-rate between two RD curve CSVs")
    p.add_argument("anchor")
    p.add_argument("test")
    p.set_defaults(func=cmd_bdrate)

    p = sub.add_parser("metrics", help="PSNR (and bpp) between two Y4M files")
    p.add_argument("--original", required=True)
    p.add_argument("--decoded", required=True)
    p.add_argument("--bits", type=int, default=None, help="stream bits for bpp")
    p.add_argument("--csv", help="write per-frame PSNR CSV here")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
