"""Deployment path: network outputs as artifacts the evaluator understands.

Confidence masks become binary {0, 255} PGM masks via a seeded weighted coin
flip; the pixel count is then corrected to round(density * pixels) by
flipping the least-confident selected (or most-confident unselected) pixels,
which keeps the export inside the density budget at desk-scale resolutions.
Tonal values are written in the TONAL text format. All files are written
atomically (write to a temporary name, then rename) so a concurrently
running evaluation never sees a partial file.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import torch

from inpaint_opt import Image, KnownData, Mask, save_known, save_mask

from .losses import mask_rescale


@torch.no_grad()
def predict_confidences(model, image: Image, density: float) -> np.ndarray:
    """Run the mask network and apply the density rescaling."""
    f = torch.from_numpy(image.data[:, :, 0]).to(torch.float32)[None, None]
    c_hat = model(f)
    confidence = mask_rescale(c_hat, density)
    return confidence[0, 0].numpy().astype(np.float64)


def binarize_confidences(confidence: np.ndarray, density: float, seed: int) -> np.ndarray:
    """Weighted coin flip, then exact-count correction ranked by confidence."""
    rng = np.random.default_rng(seed)
    selected = rng.random(confidence.shape) < confidence
    target = int(round(density * confidence.size))
    flat_sel = selected.reshape(-1)
    flat_conf = confidence.reshape(-1)
    count = int(flat_sel.sum())
    if count > target:
        on = np.flatnonzero(flat_sel)
        drop = on[np.argsort(flat_conf[on], kind="stable")[:count - target]]
        flat_sel[drop] = False
    elif count < target:
        off = np.flatnonzero(~flat_sel)
        add = off[np.argsort(flat_conf[off], kind="stable")[::-1][:target - count]]
        flat_sel[add] = True
    return flat_sel.reshape(confidence.shape)


def predict_mask(model, image: Image, density: float, seed: int) -> Mask:
    confidence = predict_confidences(model, image, density)
    return Mask(binarize_confidences(confidence, density, seed).astype(np.float64), "binary")


@torch.no_grad()
def predict_tonal(model, image: Image, mask: Mask) -> KnownData:
    """Run the tonal network and gather its values at the mask pixels."""
    f = torch.from_numpy(image.data[:, :, 0]).to(torch.float32)[None, None]
    c = torch.from_numpy(mask.values).to(torch.float32)[None, None]
    g = model(torch.cat([f, c], dim=1))[0, 0].numpy().astype(np.float64)
    return KnownData(mask=mask, values=g[mask.bool_array()][:, np.newaxis])


def _atomic(path: str | Path, write):
    path = Path(path)
    temporary = path.with_name(path.name + ".tmp")
    write(temporary)
    os.replace(temporary, path)


def export_mask(model, image: Image, density: float, seed: int, path: str | Path) -> Mask:
    mask = predict_mask(model, image, density, seed)
    _atomic(path, lambda p: save_mask(mask, p))
    return mask


def export_tonal(model, image: Image, mask: Mask, path: str | Path) -> KnownData:
    known = predict_tonal(model, image, mask)
    _atomic(path, lambda p: save_known(known, p))
    return known
