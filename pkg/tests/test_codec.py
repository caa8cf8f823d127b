import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sceneroute.codec import (
    QualityFactor,
    dct8_forward,
    dct8_inverse,
    lossy_cycle,
    scaled_quant_table,
)

from conftest import make_image
from oracles import dct2_ref, jpeg_cycle_ref, quant_table_ref


def _random_block(seed):
    return np.random.default_rng(seed).uniform(0.0, 255.0, (8, 8))


class TestDct:
    def test_zero_block(self):
        np.testing.assert_array_equal(dct8_forward(np.zeros((8, 8))), np.zeros((8, 8)))

    def test_constant_block_dc_only(self):
        coeffs = dct8_forward(np.full((8, 8), 9.0))
        assert coeffs[0, 0] == pytest.approx(72.0, abs=1e-9)
        ac = coeffs.copy()
        ac[0, 0] = 0.0
        assert np.abs(ac).max() < 1e-12

    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        block = _random_block(seed)
        assert np.abs(dct8_inverse(dct8_forward(block)) - block).max() < 1e-10

    @given(st.integers(0, 2**32 - 1))
    def test_parseval(self, seed):
        block = _random_block(seed)
        coeffs = dct8_forward(block)
        assert abs(np.linalg.norm(coeffs) - np.linalg.norm(block)) < 1e-9

    def test_matches_quadruple_sum_reference(self):
        block = _random_block(31)
        np.testing.assert_allclose(dct8_forward(block), dct2_ref(block), atol=1e-9)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            dct8_forward(np.zeros((4, 4)))


class TestQuantTable:
    @pytest.mark.parametrize("q", [1, 10, 50, 75, 90, 100])
    def test_matches_reference(self, q):
        np.testing.assert_array_equal(scaled_quant_table(q), quant_table_ref(q))

    def test_q50_is_base_table_and_q100_all_ones(self):
        assert scaled_quant_table(50)[0, 0] == 16.0
        assert set(scaled_quant_table(100).reshape(-1)) == {1.0}

    @pytest.mark.parametrize("bad", [0, 101, -5])
    def test_quality_bounds(self, bad):
        with pytest.raises(ValueError):
            QualityFactor(bad)


class TestLossyCycle:
    def test_constant_128_exact(self):
        img = make_image(np.full((24, 40), 128))
        assert lossy_cycle(img, 50).same_pixels(img)

    def test_constant_77_within_dc_rounding(self):
        img = make_image(np.full((16, 16), 77))
        out = lossy_cycle(img, 50)
        assert np.abs(out.pixels.astype(int) - 77).max() <= 1

    def test_q100_residual_is_pure_rounding(self):
        rng = np.random.default_rng(8)
        img = make_image(rng.integers(0, 256, (8, 8)))
        out = lossy_cycle(img, 100)
        diff = np.abs(out.pixels.astype(float) - img.pixels.astype(float))
        assert diff.mean() <= 1.0

    def test_monotone_degradation(self, noise_canvas):
        r10 = np.abs(
            lossy_cycle(noise_canvas, 10).pixels.astype(float)
            - noise_canvas.pixels.astype(float)
        ).mean()
        r90 = np.abs(
            lossy_cycle(noise_canvas, 90).pixels.astype(float)
            - noise_canvas.pixels.astype(float)
        ).mean()
        assert r10 >= r90

    def test_near_idempotent(self, noise_canvas):
        once = lossy_cycle(noise_canvas, 50)
        twice = lossy_cycle(once, 50)
        r1 = np.abs(once.pixels.astype(float) - noise_canvas.pixels.astype(float)).mean()
        r2 = np.abs(twice.pixels.astype(float) - once.pixels.astype(float)).mean()
        assert r2 <= r1 + 0.5

    def test_deterministic(self, noise_canvas):
        a = lossy_cycle(noise_canvas, 35)
        b = lossy_cycle(noise_canvas, 35)
        assert a.same_pixels(b)

    def test_non_multiple_of_8_dimensions(self):
        rng = np.random.default_rng(9)
        img = make_image(rng.integers(0, 256, (13, 21)))
        out = lossy_cycle(img, 50)
        assert (out.height, out.width) == (13, 21)

    @pytest.mark.parametrize("q", [10, 50, 90])
    def test_matches_per_block_reference(self, q):
        rng = np.random.default_rng(q)
        img = make_image(rng.integers(0, 256, (32, 24)))
        out = lossy_cycle(img, q)
        np.testing.assert_array_equal(out.pixels, jpeg_cycle_ref(img.pixels, q))
