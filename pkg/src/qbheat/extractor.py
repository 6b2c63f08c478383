"""Images to feature fields: netpbm decoding plus a deterministic
seeded random-convolution extractor."""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import (BadMagicError, FormatError, ShapeError,
                     TruncatedPayloadError, ValidationError)
from .field import FeatureField
from .rng import SplitMix64


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit grayscale or RGB raster."""

    values: np.ndarray  # (H, W, channels) uint8

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.ndim != 3 or v.shape[2] not in (1, 3):
            raise ShapeError(f"image must be (H, W, 1|3), got {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ShapeError("image dimensions must be positive")
        if v.dtype != np.uint8:
            arr = np.asarray(v)
            if arr.min() < 0 or arr.max() > 255:
                raise ValidationError("pixel values must lie in 0..255")
            v = arr.astype(np.uint8)
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class ExtractorConfig:
    """Seeded single-layer random convolution settings."""

    seed: int
    out_channels: int
    kernel: int = 3
    stride: int = 4
    nonlinearity: str = "relu"

    def __post_init__(self):
        if self.out_channels < 1:
            raise ValidationError("out_channels must be at least 1")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValidationError("kernel size must be odd and positive")
        if self.stride < 1:
            raise ValidationError("stride must be at least 1")
        if self.nonlinearity != "relu":
            raise ValidationError(f"unsupported nonlinearity "
                                  f"{self.nonlinearity!r}")


class _TokenReader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def _skip_filler(self):
        d = self.data
        n = len(d)
        while self.pos < n:
            ch = d[self.pos]
            if ch in b" \t\r\n\x0b\x0c":
                self.pos += 1
            elif ch == 0x23:  # '#' comment to end of line
                while self.pos < n and d[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def next_int(self, what: str) -> int:
        self._skip_filler()
        d = self.data
        n = len(d)
        start = self.pos
        while self.pos < n and 0x30 <= d[self.pos] <= 0x39:
            self.pos += 1
        if self.pos == start:
            if start >= n:
                raise TruncatedPayloadError(f"header ended before {what}")
            raise FormatError(f"expected a decimal {what} at byte {start}")
        return int(d[start:self.pos])


def read_image(data: bytes) -> Image:
    """Decode binary PGM (P5) or PPM (P6) with maxval 255."""
    if len(data) < 2:
        raise TruncatedPayloadError("image data shorter than a magic number")
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise BadMagicError(f"bad magic {magic!r}; expected P5 or P6")
    reader = _TokenReader(data, 2)
    width = reader.next_int("width")
    height = reader.next_int("height")
    maxval = reader.next_int("maxval")
    if width < 1 or height < 1:
        raise FormatError(f"invalid image dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}; only 255 is handled")
    if reader.pos >= len(data) or data[reader.pos] not in b" \t\r\n\x0b\x0c":
        raise FormatError("maxval must be followed by one whitespace byte")
    start = reader.pos + 1
    need = width * height * channels
    payload = data[start:start + need]
    if len(payload) < need:
        raise TruncatedPayloadError(
            f"pixel payload holds {len(payload)} bytes, needs {need}")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width,
                                                         channels)
    return Image(arr)


def extractor_weights(cfg: ExtractorConfig, in_channels: int) -> np.ndarray:
    """Deterministic conv weights: uniform in [-s, s] with
    s = 1/sqrt(kernel^2 * in_channels), drawn in (out, in, ky, kx) order."""
    gen = SplitMix64(cfg.seed)
    s = 1.0 / math.sqrt(cfg.kernel * cfg.kernel * in_channels)
    w = np.empty((cfg.out_channels, in_channels, cfg.kernel, cfg.kernel))
    for oc in range(cfg.out_channels):
        for ic in range(in_channels):
            for ky in range(cfg.kernel):
                for kx in range(cfg.kernel):
                    w[oc, ic, ky, kx] = gen.uniform_signed(s)
    return w


def extract_features(img: Image, cfg: ExtractorConfig) -> FeatureField:
    """Seeded random convolution (valid padding, strided, ReLU).

    Pixels are scaled to [0, 1] before convolution; the output grid has
    spacing 1.
    """
    if img.height < cfg.kernel or img.width < cfg.kernel:
        raise ValidationError(
            f"image {img.height}x{img.width} is too small for a "
            f"{cfg.kernel}x{cfg.kernel} kernel")
    weights = extractor_weights(cfg, img.channels)
    pixels = img.values.astype(np.float64) / 255.0
    vals = backend.kernels().conv2d_valid(
        np.ascontiguousarray(pixels), np.ascontiguousarray(weights),
        cfg.stride)
    return FeatureField(vals, 1.0)
