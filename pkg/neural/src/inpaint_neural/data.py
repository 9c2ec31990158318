"""Desk-scale synthetic training corpus.

Images are generated deterministically from their index, mixing structured
families (geometric shapes, oriented stripes, smooth blobs, piecewise
regions) so the networks see both sharp edges and smooth gradients. Indices
are the only state: train/validation/test splits are disjoint index ranges.
"""
from __future__ import annotations

import numpy as np
import torch
from torch.utils.data import Dataset


def _coords(size: int) -> tuple[np.ndarray, np.ndarray]:
    axis = (np.arange(size) + 0.5) / size
    return np.meshgrid(axis, axis, indexing="xy")


def _shapes(rng, size):
    x, y = _coords(size)
    img = rng.uniform(0.05, 0.4) + rng.uniform(-0.3, 0.3) * (x if rng.random() < 0.5 else y)
    for _ in range(rng.integers(3, 8)):
        cx, cy = rng.uniform(0.1, 0.9, size=2)
        value = rng.choice([rng.uniform(0.0, 0.25), rng.uniform(0.75, 1.0)])
        if rng.random() < 0.5:
            radius = rng.uniform(0.05, 0.28)
            img = np.where((x - cx) ** 2 + (y - cy) ** 2 <= radius ** 2, value, img)
        else:
            w, h = rng.uniform(0.08, 0.4, size=2)
            box = (np.abs(x - cx) < w / 2) & (np.abs(y - cy) < h / 2)
            img = np.where(box, value, img)
    return img


def _stripes(rng, size):
    x, y = _coords(size)
    theta = rng.uniform(0.0, np.pi)
    t = x * np.cos(theta) + y * np.sin(theta)
    freq = rng.uniform(3.0, 10.0)
    if rng.random() < 0.5:
        img = 0.5 + 0.45 * np.sin(2 * np.pi * freq * t)
    else:
        img = np.where(np.floor(freq * t) % 2 == 0, rng.uniform(0.0, 0.2), rng.uniform(0.8, 1.0))
    return img


def _blobs(rng, size):
    x, y = _coords(size)
    img = np.full((size, size), rng.uniform(0.1, 0.4))
    for _ in range(rng.integers(4, 10)):
        cx, cy = rng.uniform(0.0, 1.0, size=2)
        width = rng.uniform(0.02, 0.12)
        img += rng.uniform(-0.8, 1.0) * np.exp(
            -((x - cx) ** 2 + (y - cy) ** 2) / (2 * width ** 2))
    return img


def _regions(rng, size):
    x, y = _coords(size)
    img = np.full((size, size), rng.uniform(0.2, 0.8))
    for _ in range(rng.integers(3, 7)):
        nx_, ny_ = rng.standard_normal(2)
        offset = rng.uniform(0.2, 0.8)
        half = (nx_ * x + ny_ * y) < offset * (nx_ + ny_)
        img = np.where(half, rng.choice([rng.uniform(0.0, 0.2), rng.uniform(0.8, 1.0)]), img)
    return img


def _checker(rng, size):
    x, y = _coords(size)
    fx, fy = rng.integers(2, 9), rng.integers(2, 9)
    img = ((np.floor(x * fx) + np.floor(y * fy)) % 2)
    lo, hi = rng.uniform(0.0, 0.25), rng.uniform(0.75, 1.0)
    img = np.where(img > 0, hi, lo)
    if rng.random() < 0.5:  # overlay a coarse disc to break periodicity
        cx, cy = rng.uniform(0.2, 0.8, size=2)
        img = np.where((x - cx) ** 2 + (y - cy) ** 2 < 0.06, rng.uniform(0.3, 0.7), img)
    return img


_FAMILIES = (_shapes, _stripes, _blobs, _regions, _checker)


def synth_image(index: int, size: int = 64) -> np.ndarray:
    """Deterministic [0, 1] grey image for a corpus index.

    High-contrast structured content with a little fine texture, mimicking
    the edge statistics of natural photographs rather than smooth phantoms.
    """
    rng = np.random.default_rng(797_001 + index)
    family = _FAMILIES[int(rng.integers(len(_FAMILIES)))]
    img = family(rng, size)
    img = np.clip(img, 0.0, 1.0)
    if rng.random() < 0.7:  # fine texture, as in natural images
        img += rng.uniform(0.005, 0.03) * rng.standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0).astype(np.float64)


class SyntheticCorpus(Dataset):
    """Index range [start, start + count) of the deterministic corpus."""

    def __init__(self, count: int, size: int = 64, start: int = 0):
        self.count = count
        self.size = size
        self.start = start

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, item: int) -> torch.Tensor:
        img = synth_image(self.start + item, self.size)
        return torch.from_numpy(img).to(torch.float32).unsqueeze(0)
