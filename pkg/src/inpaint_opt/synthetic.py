"""Bundled synthetic test corpus.

Five deterministic structured images (edges, ramps, texture) stand in for
natural test data wherever redistribution of photographic corpora is not
possible. All generators are pure functions of the requested size.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .image import Image, save_image


def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    coords = (np.arange(size) + 0.5) / size
    return np.meshgrid(coords, coords, indexing="xy")


def _shapes(size: int) -> np.ndarray:
    x, y = _grid(size)
    img = 0.25 + 0.25 * y
    circle = (x - 0.36) ** 2 + (y - 0.34) ** 2 <= 0.22 ** 2
    img[circle] = 0.9
    box = (x > 0.55) & (x < 0.88) & (y > 0.52) & (y < 0.82)
    img[box] = 0.08
    bar = (y > 0.88) & (y < 0.94)
    img[bar] = 0.65
    return img


def _bars(size: int) -> np.ndarray:
    x, y = _grid(size)
    phase = np.floor(x * 7.0) + np.floor(y * 3.0)
    img = np.where(phase % 2 == 0, 0.15, 0.85)
    wedge = x + y < 0.45
    img[wedge] = 0.5
    return img


def _vignette(size: int) -> np.ndarray:
    x, y = _grid(size)
    r2 = (x - 0.42) ** 2 + (y - 0.55) ** 2
    img = 0.95 - 1.1 * r2
    bump = 0.35 * np.exp(-((x - 0.75) ** 2 + (y - 0.25) ** 2) / 0.01)
    return np.clip(img + bump, 0.0, 1.0)


def _waves(size: int) -> np.ndarray:
    x, y = _grid(size)
    img = 0.5 + 0.28 * np.sin(2 * np.pi * (3.0 * x + 0.8 * np.sin(2 * np.pi * y)))
    img += 0.18 * np.cos(2 * np.pi * 5.0 * y * x)
    return np.clip(img, 0.0, 1.0)


def _blobs(size: int) -> np.ndarray:
    x, y = _grid(size)
    rng = np.random.default_rng(1234)
    img = np.full((size, size), 0.2)
    for _ in range(9):
        cx, cy = rng.uniform(0.1, 0.9, size=2)
        width = rng.uniform(0.02, 0.08)
        amp = rng.uniform(0.25, 0.75)
        img += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * width ** 2))
    img -= img.min()
    img /= img.max()
    return img


_GENERATORS = {
    "shapes": _shapes,
    "bars": _bars,
    "vignette": _vignette,
    "waves": _waves,
    "blobs": _blobs,
}


def corpus_names() -> list[str]:
    return list(_GENERATORS)


def make_image(name: str, size: int = 64) -> Image:
    if name not in _GENERATORS:
        raise KeyError(f"unknown synthetic image {name!r}; choose from {corpus_names()}")
    return Image(_GENERATORS[name](size))


def make_corpus(size: int = 64) -> list[tuple[str, Image]]:
    """The five bundled structured test images at the requested size."""
    return [(name, make_image(name, size)) for name in _GENERATORS]


def write_corpus(directory: str | Path, size: int = 64) -> list[Path]:
    """Materialise the corpus as PGM files; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, img in make_corpus(size):
        path = directory / f"{name}.pgm"
        save_image(img, path)
        paths.append(path)
    return paths
