import numpy as np
import pytest

from qbheat import (BadMagicError, ExtractorConfig, FormatError, Image,
                    TruncatedPayloadError, ValidationError, extract_features,
                    read_image)
from qbheat.extractor import extractor_weights


def pgm(width, height, pixels, maxval=255, header_extra=b""):
    head = b"P5" + header_extra + b" %d %d %d\n" % (width, height, maxval)
    return head + bytes(pixels)


class TestReadImage:
    def test_small_pgm(self):
        img = read_image(pgm(2, 2, [0, 64, 128, 255]))
        assert (img.height, img.width, img.channels) == (2, 2, 1)
        np.testing.assert_array_equal(img.values[:, :, 0],
                                      [[0, 64], [128, 255]])

    def test_small_ppm(self):
        img = read_image(b"P6 1 1 255\n" + bytes([255, 0, 0]))
        assert (img.height, img.width, img.channels) == (1, 1, 3)
        np.testing.assert_array_equal(img.values[0, 0], [255, 0, 0])

    def test_comments_and_whitespace(self):
        data = (b"P5\n# a comment line\n  2 # widths\n\t2\n# more\n255\n"
                + bytes([1, 2, 3, 4]))
        img = read_image(data)
        np.testing.assert_array_equal(img.values[:, :, 0], [[1, 2], [3, 4]])

    def test_truncated_payload(self):
        with pytest.raises(TruncatedPayloadError):
            read_image(pgm(2, 2, [0, 64, 128]))

    def test_bad_magic(self):
        with pytest.raises(BadMagicError):
            read_image(b"P3 1 1 255\n0")

    def test_wrong_maxval(self):
        with pytest.raises(FormatError):
            read_image(pgm(1, 1, [0], maxval=65535) + b"\x00")

    def test_value_range_enforced_on_image_type(self):
        with pytest.raises(ValidationError):
            Image(np.array([[[300]]], dtype=np.int32))


class TestExtractorConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            ExtractorConfig(seed=0, out_channels=0)
        with pytest.raises(ValidationError):
            ExtractorConfig(seed=0, out_channels=1, kernel=4)
        with pytest.raises(ValidationError):
            ExtractorConfig(seed=0, out_channels=1, stride=0)
        with pytest.raises(ValidationError):
            ExtractorConfig(seed=0, out_channels=1, nonlinearity="tanh")

    def test_weight_scale_bound(self):
        cfg = ExtractorConfig(seed=9, out_channels=4, kernel=3)
        w = extractor_weights(cfg, 3)
        bound = 1.0 / np.sqrt(9.0 * 3.0)
        assert w.shape == (4, 3, 3, 3)
        assert np.all(np.abs(w) <= bound)


class TestExtractFeatures:
    def gray_image(self, seed, side=64):
        rng = np.random.default_rng(seed)
        return Image(rng.integers(0, 256, size=(side, side, 1),
                                  dtype=np.int64).astype(np.uint8))

    def test_documented_geometry(self):
        img = self.gray_image(0)
        cfg = ExtractorConfig(seed=1, out_channels=8, kernel=3, stride=4)
        field = extract_features(img, cfg)
        assert (field.height, field.width, field.channels) == (16, 16, 8)
        assert field.spacing == 1.0

    def test_deterministic_per_seed(self):
        img = self.gray_image(1)
        cfg = ExtractorConfig(seed=7, out_channels=4)
        f1 = extract_features(img, cfg)
        f2 = extract_features(img, cfg)
        assert np.array_equal(f1.values, f2.values)

    def test_different_seeds_differ(self):
        img = self.gray_image(2)
        f1 = extract_features(img, ExtractorConfig(seed=1, out_channels=4))
        f2 = extract_features(img, ExtractorConfig(seed=2, out_channels=4))
        assert np.max(np.abs(f1.values - f2.values)) > 0.0

    def test_relu_nonnegative(self):
        img = self.gray_image(3)
        f = extract_features(img, ExtractorConfig(seed=3, out_channels=5))
        assert np.min(f.values) >= 0.0

    def test_too_small_image(self):
        img = Image(np.zeros((2, 2, 1), dtype=np.uint8))
        with pytest.raises(ValidationError):
            extract_features(img, ExtractorConfig(seed=0, out_channels=2,
                                                  kernel=3))

    def test_shift_equivariance_in_interior(self):
        img = self.gray_image(4)
        cfg = ExtractorConfig(seed=11, out_channels=3, kernel=3, stride=4)
        base = extract_features(img, cfg)
        shifted_pixels = np.roll(img.values, cfg.stride, axis=1)
        shifted = extract_features(Image(shifted_pixels), cfg)
        # interior cells shift by one column; boundary cells see the wrap
        np.testing.assert_allclose(shifted.values[:, 2:-1, :],
                                   base.values[:, 1:-2, :], atol=1e-12)


class TestSplitMix:
    def test_reference_sequence(self):
        # SplitMix64 from seed 0: first outputs of the pinned algorithm
        from qbheat import SplitMix64
        gen = SplitMix64(0)
        assert gen.next_u64() == 0xE220A8397B1DCDAF
        assert gen.next_u64() == 0x6E789E6AA1B965F4
        assert gen.next_u64() == 0x06C45D188009454F

    def test_uniform_in_unit_interval(self):
        from qbheat import SplitMix64
        gen = SplitMix64(123)
        xs = [gen.uniform() for _ in range(1000)]
        assert all(0.0 <= x < 1.0 for x in xs)
        assert 0.4 < sum(xs) / len(xs) < 0.6
