#!/usr/bin/env python3
"""Benchmark the pure-numpy kernels against the Cython extension.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the four kernel groups on codec-realistic inputs and, as an end-to-end
number, a full GOP encode. Outputs are asserted equal across backends while
timing, so a parity break shows up here too.
"""

import argparse
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent))

from mabc.kernels import available_backends, get_backend
from mabc.residual import new_models


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_motion(mod, repeat):
    rng = np.random.default_rng(0)
    src = rng.integers(0, 256, (128, 320), dtype=np.uint8)
    ref = np.roll(src, 5, axis=1)
    return timeit(lambda: mod.block_motion_search(src, ref, 16, 8, True), repeat)


def bench_warp(mod, repeat):
    rng = np.random.default_rng(1)
    plane = rng.integers(0, 256, (128, 320), dtype=np.uint8)
    dx = rng.integers(-64, 65, (128, 320)).astype(np.int32)
    dy = rng.integers(-64, 65, (128, 320)).astype(np.int32)
    return timeit(lambda: mod.warp_plane(plane, dx, dy), repeat)


def bench_coder(mod, repeat):
    rng = np.random.default_rng(2)
    n = 200_000
    ctxs = rng.integers(0, 8, n).tolist()
    bits = (rng.random(n) < 0.2).astype(int).tolist()

    def run():
        enc = mod.RangeEncoder(new_models(8))
        for ctx, bit in zip(ctxs, bits):
            enc.encode_bit(ctx, bit)
        return enc.finish()

    return timeit(run, repeat)


def bench_coeff_blocks(mod, repeat):
    rng = np.random.default_rng(3)
    blocks = []
    for _ in range(320):
        levels = rng.integers(-40, 41, 64).astype(np.int32)
        levels[rng.random(64) < 0.7] = 0
        blocks.append(levels)

    def run():
        enc = mod.RangeEncoder(new_models(9))
        for levels in blocks:
            mod.encode_coeff_block(enc, levels, 0, 1, 5)
        return enc.finish()

    return timeit(run, repeat)


def bench_encode(backend_name, repeat):
    # Import-time backend selection: run in-process by rebinding module funcs.
    import mabc.kernels as K

    mod = get_backend(backend_name)
    saved = (K.block_motion_search, K.warp_plane, K.RangeEncoder, K.RangeDecoder,
             K.encode_coeff_block, K.decode_coeff_block)
    K.block_motion_search = mod.block_motion_search
    K.warp_plane = mod.warp_plane
    K.RangeEncoder = mod.RangeEncoder
    K.RangeDecoder = mod.RangeDecoder
    K.encode_coeff_block = mod.encode_coeff_block
    K.decode_coeff_block = mod.decode_coeff_block
    try:
        from mabc.gop import EncoderSettings, encode_sequence
        from tests.fixtures import pan_sequence

        seq = pan_sequence(4, frames=5, width=128, height=128)
        return timeit(lambda: encode_sequence(seq, EncoderSettings(quality=1, gop_size=4)).bitstream, repeat)
    finally:
        (K.block_motion_search, K.warp_plane, K.RangeEncoder, K.RangeDecoder,
         K.encode_coeff_block, K.decode_coeff_block) = saved


BENCHES = [
    ("block_motion_search 320x128 R=8", bench_motion),
    ("warp_plane 320x128", bench_warp),
    ("range coder 200k bins", bench_coder),
    ("coeff blocks 320x8x8", bench_coeff_blocks),
]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    if "native" not in backends:
        print("native backend not built; showing pure only")

    rows = []
    for name, bench in BENCHES:
        times = {}
        outs = {}
        for b in backends:
            times[b], outs[b] = bench(get_backend(b), args.repeat)
        if len(backends) == 2:
            a, c = outs["pure"], outs["native"]
            same = np.array_equal(a, c) if isinstance(a, np.ndarray) else a == c
            assert same, f"backend outputs differ in {name}"
        rows.append((name, times))

    for b in backends:
        t, _ = bench_encode(b, max(1, args.repeat - 1))
        rows.append((f"full encode 128x128x5 ({b})", {b: t}))

    width = max(len(r[0]) for r in rows)
    print(f"{'benchmark':<{width}}  {'pure':>10}  {'native':>10}  {'speedup':>8}")
    for name, times in rows:
        pure = times.get("pure")
        native = times.get("native")
        cells = [
            f"{pure * 1e3:9.1f}ms" if pure is not None else " " * 11,
            f"{native * 1e3:9.1f}ms" if native is not None else " " * 11,
            f"{pure / native:7.1f}x" if pure and native else "",
        ]
        print(f"{name:<{width}}  {cells[0]}  {cells[1]}  {cells[2]}")


if __name__ == "__main__":
    main()
