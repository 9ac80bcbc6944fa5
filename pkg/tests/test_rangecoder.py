import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mabc import kernels
from mabc.residual import new_models


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 1)), max_size=400))
@settings(max_examples=50)
def test_adaptive_round_trip(pairs):
    enc = kernels.RangeEncoder(new_models(8))
    for ctx, bit in pairs:
        enc.encode_bit(ctx, bit)
    data = enc.finish()
    dec = kernels.RangeDecoder(data, new_models(8))
    assert [dec.decode_bit(ctx) for ctx, _ in pairs] == [bit for _, bit in pairs]


@given(st.integers(0, 2**31))
@settings(max_examples=20)
def test_mixed_bypass_round_trip(seed):
    rng = np.random.default_rng(seed)
    kinds = rng.integers(0, 2, 300)
    bits = rng.integers(0, 2, 300)
    enc = kernels.RangeEncoder(new_models(4))
    for kind, bit in zip(kinds, bits):
        if kind:
            enc.encode_bypass(int(bit))
        else:
            enc.encode_bit(int(bit) & 3, int(bit))
    data = enc.finish()
    dec = kernels.RangeDecoder(data, new_models(4))
    for kind, bit in zip(kinds, bits):
        got = dec.decode_bypass() if kind else dec.decode_bit(int(bit) & 3)
        assert got == bit


def test_bypass_costs_one_bit_per_symbol():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, 10_000)
    enc = kernels.RangeEncoder(new_models(1))
    for b in bits:
        enc.encode_bypass(int(b))
    data = enc.finish()
    assert abs(len(data) - 1250) <= 5


def test_skewed_source_compresses_below_040_bits():
    rng = np.random.default_rng(2)
    bits = (rng.random(10_000) > 0.95).astype(int)  # p(0) = 0.95
    enc = kernels.RangeEncoder(new_models(1))
    for b in bits:
        enc.encode_bit(0, int(b))
    data = enc.finish()
    assert len(data) * 8 / 10_000 <= 0.40


def test_probabilities_stay_in_range():
    models = new_models(1)
    enc = kernels.RangeEncoder(models)
    for _ in range(10_000):
        enc.encode_bit(0, 1)
    assert 1 <= models[0] <= 4095
    for _ in range(10_000):
        enc.encode_bit(0, 0)
    assert 1 <= models[0] <= 4095
    enc.finish()


@given(st.integers(0, 2**31))
@settings(max_examples=30)
def test_coeff_block_round_trip(seed):
    rng = np.random.default_rng(seed)
    levels = rng.integers(-60, 61, 64).astype(np.int32)
    levels[rng.random(64) < 0.6] = 0
    levels[0] = rng.integers(-16320, 16321)  # DC can be large
    enc = kernels.RangeEncoder(new_models(9))
    kernels.encode_coeff_block(enc, levels, 0, 1, 5)
    data = enc.finish()
    dec = kernels.RangeDecoder(data, new_models(9))
    assert np.array_equal(kernels.decode_coeff_block(dec, 0, 1, 5), levels)


def test_all_zero_block_costs_one_bin():
    enc = kernels.RangeEncoder(new_models(9))
    for _ in range(100):
        kernels.encode_coeff_block(enc, np.zeros(64, np.int32), 0, 1, 5)
    assert len(enc.finish()) < 30  # 100 highly skewed cbf bins


@given(st.lists(st.tuples(st.one_of(st.none(), st.integers(0, 3)), st.integers(0, 1)),
                max_size=300))
@settings(max_examples=30)
def test_entropy_stream_surface_round_trip(pairs):
    from mabc.residual import entropy_decode, entropy_encode

    data = entropy_encode(pairs, new_models(4))
    got = entropy_decode(data, [ctx for ctx, _ in pairs], new_models(4))
    assert got == [bit for _, bit in pairs]
