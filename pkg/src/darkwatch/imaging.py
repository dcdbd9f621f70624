"""Grayscale images: netpbm I/O, denoising filters and HOG descriptors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    BadMagic,
    BadRadius,
    BadSigma,
    DataError,
    ImageTooSmall,
    MaxvalUnsupported,
    ParameterError,
    TruncatedData,
)

LUMA = (0.299, 0.587, 0.114)
_WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Intensities in [0, 255], stored as a ``(height, width)`` float array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise DataError(f"pixels must be a non-empty 2-D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 255.0:
            raise DataError("pixel values must lie in [0, 255]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.all(self.pixels == other.pixels))

    __hash__ = None


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 2

    def token(self) -> bytes:
        data = self.data
        n = len(data)
        while self.pos < n:
            c = data[self.pos:self.pos + 1]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == b"#":
                while self.pos < n and data[self.pos:self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            else:
                break
        if self.pos >= n:
            raise TruncatedData("unexpected end of image data")
        start = self.pos
        while self.pos < n and data[self.pos:self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        return data[start:self.pos]

    def integer(self, what: str) -> int:
        tok = self.token()
        if not tok.isdigit():
            raise DataError(f"expected {what}, got {tok[:16]!r}")
        return int(tok)


def decode_pnm(data: bytes) -> GrayImage:
    """Decode P2/P5 (gray) or P3/P6 (color, converted by luma) with maxval <= 255."""
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise BadMagic(f"unsupported netpbm magic {magic!r}")
    channels = 3 if magic in (b"P3", b"P6") else 1
    r = _Reader(data)
    width = r.integer("width")
    height = r.integer("height")
    maxval = r.integer("maxval")
    if width < 1 or height < 1:
        raise DataError(f"bad image size {width}x{height}")
    if not 1 <= maxval <= 255:
        raise MaxvalUnsupported(f"maxval {maxval} not in [1, 255]")
    count = width * height * channels

    if magic in (b"P5", b"P6"):
        # exactly one whitespace byte separates the header from the raster
        start = r.pos + 1
        raster = data[start:start + count]
        if len(raster) < count:
            raise TruncatedData(f"expected {count} raster bytes, got {len(raster)}")
        samples = np.frombuffer(raster, dtype=np.uint8).astype(float)
    else:
        samples = np.array([r.integer("sample") for _ in range(count)], dtype=float)

    if samples.max(initial=0) > maxval:
        raise DataError(f"sample exceeds maxval {maxval}")
    if maxval != 255:
        samples = samples * (255.0 / maxval)
    if channels == 3:
        rgb = samples.reshape(height, width, 3)
        gray = LUMA[0] * rgb[..., 0] + LUMA[1] * rgb[..., 1] + LUMA[2] * rgb[..., 2]
        return GrayImage(np.clip(gray, 0.0, 255.0))
    return GrayImage(samples.reshape(height, width))


def encode_pnm(img: GrayImage, binary: bool = True) -> bytes:
    """Write a P5 (or ASCII P2) image; pixels are rounded to the nearest integer."""
    q = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n255\n".encode("ascii")
    if binary:
        return header + q.tobytes()
    lines = [" ".join(str(int(v)) for v in row) for row in q]
    return header + ("\n".join(lines) + "\n").encode("ascii")


def read_image(path) -> GrayImage:
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def median_denoise(img: GrayImage, radius: int = 1) -> GrayImage:
    """Median over the ``(2r+1) x (2r+1)`` neighbourhood with edge replication."""
    if not isinstance(radius, (int, np.integer)) or radius < 1:
        raise BadRadius(f"radius must be an integer >= 1, got {radius!r}")
    k = 2 * radius + 1
    padded = np.pad(img.pixels, radius, mode="edge")
    windows = sliding_window_view(padded, (k, k))
    return GrayImage(np.median(windows.reshape(img.height, img.width, k * k), axis=-1))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D normalized kernel of radius ``ceil(3 * sigma)``."""
    if not sigma > 0 or not math.isfinite(sigma):
        raise BadSigma(f"sigma must be a positive finite number, got {sigma!r}")
    radius = math.ceil(3 * sigma)
    d = np.arange(-radius, radius + 1, dtype=float)
    w = np.exp(-d * d / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_blur(img: GrayImage, sigma: float) -> GrayImage:
    kernel = gaussian_kernel(sigma)
    r = kernel.size // 2
    padded = np.pad(img.pixels, r, mode="edge")
    h, w = img.height, img.width
    rows = np.zeros((h + 2 * r, w))
    for k, weight in enumerate(kernel):
        rows += weight * padded[:, k:k + w]
    out = np.zeros((h, w))
    for k, weight in enumerate(kernel):
        out += weight * rows[k:k + h, :]
    return GrayImage(np.clip(out, 0.0, 255.0))


def denoise(img: GrayImage, method: str = "median", radius: int = 1, sigma: float = 1.0) -> GrayImage:
    if method == "median":
        return median_denoise(img, radius)
    if method == "gaussian":
        return gaussian_blur(img, sigma)
    if method == "none":
        return img
    raise ParameterError(f"unknown denoise method {method!r}")


@dataclass(frozen=True)
class HogParams:
    cell_size: int = 8
    block_size: int = 2
    bins: int = 9
    signed: bool = False
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.cell_size < 1 or self.block_size < 1 or self.bins < 2 or not self.epsilon > 0:
            raise ParameterError(f"invalid HOG parameters {self}")


@dataclass(frozen=True, eq=False)
class HogDescriptor:
    values: np.ndarray
    layout: tuple[int, int, int]  # (blocks_x, blocks_y, block_len)

    def blocks(self) -> np.ndarray:
        """Values reshaped to ``(blocks_y, blocks_x, block_len)``."""
        bx, by, n = self.layout
        return self.values.reshape(by, bx, n)

    def to_dict(self) -> dict:
        return {"layout": list(self.layout), "values": [float(v) for v in self.values]}

    def to_csv(self) -> str:
        return ",".join(repr(float(v)) for v in self.values) + "\n"


def image_gradients(img: GrayImage):
    """Central differences ``[-1, 0, 1]`` in x and y with edge replication."""
    p = np.pad(img.pixels, 1, mode="edge")
    gx = p[1:-1, 2:] - p[1:-1, :-2]
    gy = p[2:, 1:-1] - p[:-2, 1:-1]
    return gx, gy


def cell_histograms(img: GrayImage, params: HogParams) -> np.ndarray:
    """Orientation histograms per cell, shape ``(cells_y, cells_x, bins)``.

    Bin ``i`` is centred on ``i * span / bins`` degrees and each pixel splits
    its gradient magnitude linearly between the two nearest centres, wrapping
    around the orientation circle.
    """
    cs = params.cell_size
    ncx, ncy = img.width // cs, img.height // cs
    gx, gy = image_gradients(img)
    gx, gy = gx[:ncy * cs, :ncx * cs], gy[:ncy * cs, :ncx * cs]
    mag = np.hypot(gx, gy)
    span = 360.0 if params.signed else 180.0
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), span)
    pos = angle / (span / params.bins)
    base = np.floor(pos)
    frac = pos - base
    lo = base.astype(np.int64) % params.bins
    hi = (lo + 1) % params.bins

    cy = (np.arange(ncy * cs) // cs)[:, None].repeat(ncx * cs, axis=1)
    cx = (np.arange(ncx * cs) // cs)[None, :].repeat(ncy * cs, axis=0)
    hist = np.zeros((ncy, ncx, params.bins))
    np.add.at(hist, (cy, cx, lo), mag * (1.0 - frac))
    np.add.at(hist, (cy, cx, hi), mag * frac)
    return hist


def hog(img: GrayImage, params: HogParams = HogParams()) -> HogDescriptor:
    """Block-normalized HOG descriptor.

    Blocks of ``block_size x block_size`` cells slide one cell at a time; each
    block vector is divided by ``sqrt(||v||^2 + eps^2)``. Pixels past the last
    whole cell are ignored.
    """
    side = params.cell_size * params.block_size
    if img.width < side or img.height < side:
        raise ImageTooSmall(f"image {img.width}x{img.height} smaller than one {side}px block")
    hist = cell_histograms(img, params)
    ncy, ncx, _ = hist.shape
    bs = params.block_size
    nbx, nby = ncx - bs + 1, ncy - bs + 1
    block_len = bs * bs * params.bins
    out = np.empty((nby, nbx, block_len))
    for by in range(nby):
        for bx in range(nbx):
            v = hist[by:by + bs, bx:bx + bs, :].ravel()
            out[by, bx] = v / math.sqrt(float(v @ v) + params.epsilon ** 2)
    return HogDescriptor(out.ravel(), (nbx, nby, block_len))
