"""Core raster types and quality metrics.

Images hold float64 intensities in [0, 1] with shape (n_y, n_x, channels);
masks hold per-pixel confidences in [0, 1] and know whether they are binary.
Known data couples a binary mask with the stored values at its pixels. All
instances are treated as immutable after construction: no function in this
package mutates its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .netpbm import read_pnm, write_pnm


class InvalidMaskError(ValueError):
    """A mask file contains samples other than 0 and 255."""


@dataclass
class Image:
    """A rectangular raster of intensities, 1 (grey) or 3 (RGB) channels.

    Parameters
    ----------
    data : np.ndarray
        Shape (n_y, n_x, channels) float array. Loading scales to [0, 1];
        intermediate results (e.g. tonally optimised reconstructions) may
        leave that range and are only clamped on 8-bit export.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, np.newaxis]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ValueError(f"expected (n_y, n_x, 1|3) data, got shape {np.shape(self.data)}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("empty image")
        self.data = data

    @property
    def n_x(self) -> int:
        return self.data.shape[1]

    @property
    def n_y(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def clamped(self) -> "Image":
        """Copy with intensities clamped to [0, 1]."""
        return Image(np.clip(self.data, 0.0, 1.0))


@dataclass
class Mask:
    """Per-pixel confidence raster in [0, 1].

    ``kind`` is "binary" (every value exactly 0 or 1) or "confidence".
    """

    values: np.ndarray
    kind: str = "binary"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"expected 2-D mask values, got shape {values.shape}")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("mask values outside [0, 1]")
        if self.kind not in ("binary", "confidence"):
            raise ValueError(f"unknown mask kind {self.kind!r}")
        if self.kind == "binary" and not np.all((values == 0.0) | (values == 1.0)):
            raise ValueError("binary mask contains non-binary values")
        self.values = values

    @property
    def n_x(self) -> int:
        return self.values.shape[1]

    @property
    def n_y(self) -> int:
        return self.values.shape[0]

    def density(self) -> float:
        """L1 mass divided by the pixel count."""
        return float(self.values.sum() / self.values.size)

    def count(self) -> int:
        """Number of set pixels (binary masks only)."""
        if self.kind != "binary":
            raise ValueError("count() requires a binary mask")
        return int(self.values.sum())

    def bool_array(self) -> np.ndarray:
        """Boolean view of a binary mask."""
        if self.kind != "binary":
            raise ValueError("bool_array() requires a binary mask")
        return self.values == 1.0


@dataclass
class KnownData:
    """A binary mask paired with the stored values at its pixels.

    ``values`` has shape (count, channels) and follows row-major pixel order
    over the mask. Exactly one value row exists per set mask pixel.
    """

    mask: Mask
    values: np.ndarray

    def __post_init__(self):
        if self.mask.kind != "binary":
            raise ValueError("known data requires a binary mask")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, np.newaxis]
        if values.ndim != 2 or values.shape[1] not in (1, 3):
            raise ValueError(f"expected (count, 1|3) values, got shape {np.shape(self.values)}")
        if values.shape[0] != self.mask.count():
            raise ValueError(
                f"{values.shape[0]} values for {self.mask.count()} mask pixels"
            )
        self.values = values

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_image(cls, img: Image, mask: Mask) -> "KnownData":
        """Gather the image values at the mask pixels."""
        if (img.n_y, img.n_x) != (mask.n_y, mask.n_x):
            raise ValueError("image and mask dimensions differ")
        keep = mask.bool_array()
        return cls(mask=mask, values=img.data[keep, :].copy())

    def to_grid(self) -> np.ndarray:
        """Scatter the values onto a dense (n_y, n_x, channels) grid, zero elsewhere."""
        grid = np.zeros((self.mask.n_y, self.mask.n_x, self.channels))
        grid[self.mask.bool_array(), :] = self.values
        return grid


def load_image(path: str | Path) -> Image:
    """Load a PGM (P2/P5) or PPM (P3/P6) file, scaling intensities to [0, 1]."""
    samples, maxval = read_pnm(path)
    return Image(samples.astype(np.float64) / maxval)


def save_image(img: Image, path: str | Path, ascii_format: bool = False) -> None:
    """Save as 8-bit PGM (1 channel) or PPM (3 channels).

    Intensities are clamped to [0, 1] and quantised, so a load after save
    reproduces each clamped intensity within 1/510.
    """
    quantised = np.rint(np.clip(img.data, 0.0, 1.0) * 255.0).astype(np.int64)
    write_pnm(path, quantised, maxval=255, ascii_format=ascii_format)


def load_mask(path: str | Path) -> Mask:
    """Load a binary mask stored as a {0, 255} PGM."""
    samples, maxval = read_pnm(path)
    if samples.shape[2] != 1:
        raise InvalidMaskError("mask files must be single-channel PGM")
    if maxval != 255:
        raise InvalidMaskError(f"mask files must use maxval 255, got {maxval}")
    flat = samples[:, :, 0]
    if not np.all((flat == 0) | (flat == 255)):
        bad = int(flat[(flat != 0) & (flat != 255)][0])
        raise InvalidMaskError(f"mask contains value {bad}, expected only 0 and 255")
    return Mask(values=(flat == 255).astype(np.float64), kind="binary")


def save_mask(mask: Mask, path: str | Path) -> None:
    """Write a binary mask as a {0, 255} PGM; round-trips exactly."""
    samples = (mask.bool_array().astype(np.int64) * 255)[:, :, np.newaxis]
    write_pnm(path, samples, maxval=255)


def psnr(u: Image, f: Image) -> float:
    """Peak signal-to-noise ratio in dB with peak 255.

    The mean squared error is computed on intensities rescaled to [0, 255],
    averaged jointly over all pixels and channels. Identical inputs return
    the +infinity sentinel.
    """
    if u.data.shape != f.data.shape:
        raise ValueError(f"dimension mismatch: {u.data.shape} vs {f.data.shape}")
    diff = (u.data - f.data) * 255.0
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def center_crop(img: Image, size: int) -> Image:
    """Centre crop to size x size; odd margins split with the floor convention.

    The crop origin is ((n_y - size) // 2, (n_x - size) // 2).
    """
    if size > img.n_x or size > img.n_y:
        raise ValueError(f"crop {size} exceeds image {img.n_x}x{img.n_y}")
    top = (img.n_y - size) // 2
    left = (img.n_x - size) // 2
    return Image(img.data[top:top + size, left:left + size, :].copy())
