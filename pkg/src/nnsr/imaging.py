"""Grayscale image and multispectral harness.

Images are held as ``ImagePlane`` objects with pixels scaled to [0, 1] in a
(height, width) array. Only binary Netpbm is supported: P5 (grayscale) and
P6 (colour, converted to Rec.601 luma), maxval up to 65535.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from scipy.ndimage import correlate1d

from .matrix import ShapeError
from .synth import rng_for

_OUTLIER_STREAM, _MASK_STREAM = 10, 11
LUMA = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    pass


@dataclass
class ImagePlane:
    pixels: np.ndarray  # (height, width), float64
    source_depth: int = 8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2 or min(self.pixels.shape) < 1:
            raise ShapeError(f"image must be a non-empty 2-D raster, got {self.pixels.shape}")
        if self.source_depth not in (8, 16):
            raise ValueError(f"source_depth must be 8 or 16, got {self.source_depth}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def maxval(self) -> int:
        return 255 if self.source_depth == 8 else 65535

    def quantized(self) -> ImagePlane:
        """Clamp to [0, 1] and round to the source bit depth."""
        q = np.round(np.clip(self.pixels, 0.0, 1.0) * self.maxval) / self.maxval
        return ImagePlane(q, self.source_depth)


def _pixels(img) -> np.ndarray:
    return img.pixels if isinstance(img, ImagePlane) else np.asarray(img, dtype=np.float64)


# -- Netpbm I/O ---------------------------------------------------------------

def _header(data: bytes) -> tuple[bytes, list[int], int]:
    if len(data) < 2:
        raise ImageFormatError("truncated file: missing magic number at byte offset 0")
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"unsupported magic {magic!r} at byte offset 0")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise ImageFormatError(f"truncated header at byte offset {pos}")
        c = data[pos:pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise ImageFormatError(f"unterminated comment at byte offset {pos}")
            pos = nl + 1
        elif c.isspace():
            pos += 1
        elif c.isdigit():
            start = pos
            while pos < len(data) and data[pos:pos + 1].isdigit():
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise ImageFormatError(f"malformed header byte {c!r} at byte offset {pos}")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError(f"missing whitespace after maxval at byte offset {pos}")
    width, height, maxval = fields
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise ImageFormatError(f"invalid dimensions or maxval {fields} ending at byte offset {pos}")
    return magic, fields, pos + 1


def read_image(path) -> ImagePlane:
    data = Path(path).read_bytes()
    magic, (width, height, maxval), offset = _header(data)
    channels = 3 if magic == b"P6" else 1
    bps = 1 if maxval < 256 else 2
    need = width * height * channels * bps
    if len(data) - offset < need:
        raise ImageFormatError(
            f"truncated payload: expected {need} bytes from byte offset {offset}, "
            f"file ends at byte offset {len(data)}"
        )
    dtype = np.uint8 if bps == 1 else np.dtype(">u2")
    raw = np.frombuffer(data, dtype=dtype, count=width * height * channels, offset=offset)
    px = raw.astype(np.float64).reshape(height, width, channels) / maxval
    if channels == 3:
        px = px @ np.array(LUMA)
    else:
        px = px[..., 0]
    return ImagePlane(px, 8 if maxval < 256 else 16)


def write_image(plane: ImagePlane, path) -> None:
    """Write a P5 file at the plane's source depth; values are clamped first."""
    maxval = plane.maxval
    q = np.round(np.clip(plane.pixels, 0.0, 1.0) * maxval)
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{plane.width} {plane.height}\n{maxval}\n".encode("ascii"))
        fh.write(q.astype(dtype).tobytes())


# -- degradation --------------------------------------------------------------

@dataclass(frozen=True)
class DegradeSpec:
    mask_kind: Literal["random", "stripe"] = "random"
    gamma: float = 0.8
    stripe_width: int = 4
    stripe_period: int = 16
    stripe_orientation: Literal["vertical", "diagonal"] = "vertical"
    outlier_frac: float = 0.2
    outlier_mag: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.mask_kind not in ("random", "stripe"):
            raise ValueError(f"unknown mask kind {self.mask_kind!r}")
        if not 0 <= self.gamma <= 1 or not 0 <= self.outlier_frac <= 1:
            raise ValueError("gamma and outlier_frac must lie in [0, 1]")
        if not 0 <= self.stripe_width < self.stripe_period:
            raise ValueError("need 0 <= stripe_width < stripe_period")
        if self.stripe_orientation not in ("vertical", "diagonal"):
            raise ValueError(f"unknown stripe orientation {self.stripe_orientation!r}")
        if self.outlier_mag < 0:
            raise ValueError("outlier_mag must be >= 0")


@dataclass
class Degraded:
    x: np.ndarray  # corrupted pixels, zero off the mask
    mask: np.ndarray
    outlier_count: int
    masked_columns: int


def stripe_mask(height: int, width: int, stripe_width: int, stripe_period: int,
                orientation: str = "vertical") -> np.ndarray:
    """Deterministic stripes; pixels with (c mod period) < width are missing.

    Vertical stripes remove whole columns, which no low-rank model can fill
    in. Diagonal stripes use (r + c) instead of c and leave every row and
    column partly observed.
    """
    rows, cols = np.indices((height, width))
    phase = cols if orientation == "vertical" else rows + cols
    return (phase % stripe_period) >= stripe_width


def degrade(plane: ImagePlane, spec: DegradeSpec) -> Degraded:
    """Add uniform outliers (unclamped) to all pixels, then mask."""
    h, w = plane.pixels.shape
    x = plane.pixels.copy()
    count = int(round(spec.outlier_frac * h * w))
    rng = rng_for(spec.seed, _OUTLIER_STREAM)
    idx = rng.choice(h * w, size=count, replace=False)
    x.flat[idx] += rng.uniform(-spec.outlier_mag, spec.outlier_mag, size=count)

    if spec.mask_kind == "stripe":
        mask = stripe_mask(h, w, spec.stripe_width, spec.stripe_period,
                           spec.stripe_orientation)
    elif spec.gamma >= 1:
        mask = np.ones((h, w), dtype=bool)
    else:
        mask = rng_for(spec.seed, _MASK_STREAM).random((h, w)) < spec.gamma
    masked_cols = int(np.count_nonzero(~mask.any(axis=0)))
    return Degraded(x=np.where(mask, x, 0.0), mask=mask, outlier_count=count,
                    masked_columns=masked_cols)


def salt_pepper(x, density: float, seed: int) -> np.ndarray:
    """Set round(density * size) random entries to 0 or to max(x), equiprobably."""
    if not 0 <= density <= 1:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    count = int(round(density * x.size))
    rng = rng_for(seed, 20)
    idx = rng.choice(x.size, size=count, replace=False)
    salt = rng.random(count) < 0.5
    out.flat[idx] = np.where(salt, x.max(), 0.0)
    return out


def snr_db_to_density(snr_db: float) -> float:
    """Impulse density 1/SNR with SNR given in dB (10 dB -> 0.1)."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return 1.0 / 10.0 ** (snr_db / 10.0)


# -- metrics -------------------------------------------------------------------

def psnr(reference, test, peak: float = 1.0) -> float:
    a, b = _pixels(reference), _pixels(test)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size: int = 11, std: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r * r) / (2 * std * std))
    return g / g.sum()


def ssim(reference, test, dynamic_range: float = 1.0, win_size: int = 11,
         std: float = 1.5, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian windows."""
    a, b = _pixels(reference), _pixels(test)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < win_size:
        raise ShapeError(f"image {a.shape} is smaller than the {win_size}x{win_size} window")
    g = _gaussian_window(win_size, std)
    pad = (win_size - 1) // 2

    def filt(z):
        z = correlate1d(correlate1d(z, g, axis=0, mode="reflect"), g, axis=1, mode="reflect")
        return z[pad:z.shape[0] - pad, pad:z.shape[1] - pad]

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    smap = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    return float(np.mean(smap))


# -- multispectral stacking ----------------------------------------------------

def msi_stack(bands: Sequence[ImagePlane]) -> np.ndarray:
    """(height*width) x B matrix; column b is band b vectorized column-major."""
    if not bands:
        raise ShapeError("no bands to stack")
    shape = _pixels(bands[0]).shape
    cols = []
    for i, band in enumerate(bands):
        px = _pixels(band)
        if px.shape != shape:
            raise ShapeError(f"band {i} has shape {px.shape}, expected {shape}")
        cols.append(px.reshape(-1, order="F"))
    return np.stack(cols, axis=1)


def msi_unstack(matrix, width: int, height: int, source_depth: int = 8) -> list[ImagePlane]:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != width * height:
        raise ShapeError(f"matrix of shape {matrix.shape} cannot hold {height}x{width} bands")
    return [ImagePlane(matrix[:, b].reshape((height, width), order="F"), source_depth)
            for b in range(matrix.shape[1])]


def write_metrics_json(path, psnr_db: float, ssim_value: float, per_band=None) -> None:
    payload = {"psnr_db": psnr_db, "ssim": ssim_value, "per_band": list(per_band or [])}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)  # inf is written as Infinity
        fh.write("\n")
