import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mabc.errors import InvalidInputError
from mabc.flow import EstimatorConfig, estimate_bidirectional, estimate_flow
from tests.fixtures import smooth_texture, translated_frame_pair
from tests.oracles import full_search_oracle

CFG = EstimatorConfig()


def luma_frame(y):
    from mabc.frame import frame_from_arrays

    h, w = y.shape
    c = np.full((h // 2, w // 2), 128, np.uint8)
    return frame_from_arrays(y, c, c)


def interior_blocks(field, margin_px, block=16):
    mb = (margin_px + block - 1) // block
    return field.vectors[mb * block : -mb * block or None, mb * block : -mb * block or None]


class TestEstimateFlow:
    def test_identical_frames_zero_field(self):
        src, _ = translated_frame_pair((0, 0))
        field = estimate_flow(src, src, CFG)
        assert not field.vectors.any()

    def test_flat_frames_zero_field(self):
        f = luma_frame(np.full((32, 32), 77, np.uint8))
        assert not estimate_flow(f, f, CFG).vectors.any()

    def test_translation_within_range_matches_oracle(self):
        src, dst = translated_frame_pair((3, 0))
        field = estimate_flow(src, dst, CFG)
        interior = interior_blocks(field, margin_px=8)
        assert np.all(interior[:, :, 0] == 24)
        assert np.all(interior[:, :, 1] == 0)
        # Brute-force oracle confirms the global SAD minimum block by block.
        for by, bx in ((1, 1), (2, 3), (3, 2)):
            (dx, dy), sad = full_search_oracle(src.y.data, dst.y.data, by, bx, 16, 8)
            assert (dx, dy) == (3, 0)
            assert sad == 0

    def test_translation_beyond_range_is_clamped(self):
        src, dst = translated_frame_pair((30, 0), width=128, height=96)
        field = estimate_flow(src, dst, CFG)
        assert np.abs(field.vectors).max() <= field.range_bound_units
        # The oracle agrees no in-window offset matches exactly.
        (dx, dy), sad = full_search_oracle(src.y.data, dst.y.data, 2, 3, 16, 8)
        assert sad > 0
        assert abs(dx) <= 8 and abs(dy) <= 8

    def test_dimension_mismatch(self):
        a = luma_frame(np.zeros((32, 32), np.uint8))
        b = luma_frame(np.zeros((32, 48), np.uint8))
        with pytest.raises(InvalidInputError):
            estimate_flow(a, b, CFG)

    def test_determinism_across_runs(self):
        src, dst = translated_frame_pair((5, -2))
        a = estimate_flow(src, dst, CFG)
        b = estimate_flow(src, dst, CFG)
        assert np.array_equal(a.vectors, b.vectors)

    def test_halfpel_finds_half_sample_shift(self):
        # dst(q) = src(q + 0.5) horizontally, i.e. content moved by -0.5 px.
        y = smooth_texture(48, 64, seed=3)
        shifted = ((y[:, :-1].astype(np.uint16) + y[:, 1:] + 1) >> 1).astype(np.uint8)
        src = luma_frame(y[:, :48])
        dst = luma_frame(shifted[:, :48])
        field = estimate_flow(src, dst, CFG)
        inner = field.vectors[16:32, 16:32]
        assert np.all(inner[:, :, 0] == -4)  # -0.5 px in 1/8-px units


class TestBidirectional:
    def test_static_zero(self):
        src, _ = translated_frame_pair((0, 0))
        fa, fb = estimate_bidirectional(src, src, CFG)
        assert not fa.vectors.any() and not fb.vectors.any()

    def test_constant_translation_antisymmetry(self):
        past, future = translated_frame_pair((6, 0), width=128, height=96)
        fa, fb = estimate_bidirectional(past, future, CFG)
        ia = interior_blocks(fa, margin_px=8)
        ib = interior_blocks(fb, margin_px=8)
        assert np.all(ia[:, :, 0] == 48) and np.all(ia[:, :, 1] == 0)
        assert np.all(ib[:, :, 0] == -48) and np.all(ib[:, :, 1] == 0)
        assert np.array_equal(ia, -ib)


@given(st.integers(0, 2**31), st.integers(1, 3))
@settings(max_examples=15)
def test_range_bound_property(seed, radius):
    rng = np.random.default_rng(seed)
    cfg = EstimatorConfig(block_size=16, search_radius=radius)
    src = luma_frame(rng.integers(0, 256, (32, 32), dtype=np.uint8))
    dst = luma_frame(rng.integers(0, 256, (32, 32), dtype=np.uint8))
    field = estimate_flow(src, dst, cfg)
    assert np.abs(field.vectors).max() <= 8 * (radius + 1)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        EstimatorConfig(block_size=12)
    with pytest.raises(InvalidInputError):
        EstimatorConfig(search_radius=0)
