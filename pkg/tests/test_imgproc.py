import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from sceneroute.errors import (
    CorruptImageError,
    InvalidDimensionError,
    UnsupportedFormatError,
)
from sceneroute.imgproc import GrayImage, load_grayscale, resize_to_canvas, save_pgm

from conftest import make_image
from oracles import bilinear_resize_ref


class TestGrayImage:
    def test_fields(self):
        img = make_image([[0, 64], [128, 255]])
        assert img.width == 2 and img.height == 2
        assert list(img.data) == [0, 64, 128, 255]

    def test_rejects_empty(self):
        with pytest.raises(InvalidDimensionError):
            GrayImage(np.zeros((0, 4), dtype=np.uint8))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GrayImage(np.array([[0, 300]]))

    def test_immutable(self):
        img = make_image([[1, 2], [3, 4]])
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 9


class TestLoadGrayscale:
    def test_pgm_passthrough(self, tmp_path):
        save_pgm(make_image([[0, 64], [128, 255]]), tmp_path / "t.pgm")
        img = load_grayscale(tmp_path / "t.pgm")
        assert (img.width, img.height) == (2, 2)
        assert list(img.data) == [0, 64, 128, 255]

    def test_red_pixel_png_luma(self, tmp_path):
        Image.new("RGB", (1, 1), (255, 0, 0)).save(tmp_path / "r.png")
        img = load_grayscale(tmp_path / "r.png")
        assert list(img.data) == [76]

    def test_green_pixel_rounds_half_up(self, tmp_path):
        # 0.587 * 255 = 149.685 -> 150; truncating converters give 149
        Image.new("RGB", (1, 1), (0, 255, 0)).save(tmp_path / "g.png")
        assert list(load_grayscale(tmp_path / "g.png").data) == [150]

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError) as exc:
            load_grayscale(tmp_path / "nope.png")
        assert "nope.png" in str(exc.value)

    def test_unsupported_format(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("not an image")
        with pytest.raises(UnsupportedFormatError) as exc:
            load_grayscale(p)
        assert "t.txt" in str(exc.value)

    def test_unsupported_pil_format(self, tmp_path):
        p = tmp_path / "t.gif"
        Image.new("L", (2, 2)).save(p, format="GIF")
        with pytest.raises(UnsupportedFormatError):
            load_grayscale(p)

    def test_sixteen_bit_png_rejected(self, tmp_path):
        p = tmp_path / "deep.png"
        Image.new("I;16", (2, 2), 1000).save(p)
        with pytest.raises(UnsupportedFormatError) as exc:
            load_grayscale(p)
        assert "deep.png" in str(exc.value)

    def test_corrupt_png(self, tmp_path):
        good = tmp_path / "ok.png"
        Image.new("L", (32, 32), 7).save(good)
        raw = good.read_bytes()
        bad = tmp_path / "bad.png"
        bad.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(CorruptImageError) as exc:
            load_grayscale(bad)
        assert "bad.png" in str(exc.value)

    def test_bmp_and_jpeg_decode(self, tmp_path):
        Image.new("L", (4, 4), 99).save(tmp_path / "t.bmp")
        assert set(load_grayscale(tmp_path / "t.bmp").data) == {99}
        Image.new("L", (8, 8), 120).save(tmp_path / "t.jpg", quality=95)
        img = load_grayscale(tmp_path / "t.jpg")
        assert (img.width, img.height) == (8, 8)

    def test_pgm_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(100)
        for i in range(25):
            h, w = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            img = make_image(rng.integers(0, 256, (h, w)))
            p = tmp_path / f"x{i}.pgm"
            save_pgm(img, p)
            assert img.same_pixels(load_grayscale(p))


class TestResize:
    def test_identity_bypass(self, noise_canvas):
        out = resize_to_canvas(noise_canvas, 192)
        assert out is noise_canvas

    def test_constant_stays_constant(self):
        img = make_image(np.full((37, 61), 100))
        out = resize_to_canvas(img, 192)
        assert (out.width, out.height) == (192, 192)
        assert set(out.data) == {100}

    def test_matches_scalar_oracle(self):
        img = make_image([[0, 255], [0, 255]])
        out = resize_to_canvas(img, 4)
        expected = bilinear_resize_ref(img.pixels, 4)
        np.testing.assert_array_equal(out.pixels, expected)

    @given(st.integers(0, 2**32 - 1), st.integers(2, 9), st.integers(2, 9), st.integers(2, 17))
    @settings(max_examples=40)
    def test_random_matches_oracle(self, seed, h, w, c):
        rng = np.random.default_rng(seed)
        img = make_image(rng.integers(0, 256, (h, w)))
        out = resize_to_canvas(img, c)
        np.testing.assert_array_equal(out.pixels, bilinear_resize_ref(img.pixels, c))

    @given(st.integers(0, 2**32 - 1))
    def test_output_within_input_range(self, seed):
        rng = np.random.default_rng(seed)
        img = make_image(rng.integers(40, 200, (7, 5)))
        out = resize_to_canvas(img, 24)
        assert out.pixels.min() >= img.pixels.min()
        assert out.pixels.max() <= img.pixels.max()

    def test_rejects_small_canvas(self, noise_canvas):
        with pytest.raises(InvalidDimensionError):
            resize_to_canvas(noise_canvas, 1)
