"""Joint training of the data-optimisation networks with a surrogate solver.

Every joint step updates two networks from the same batch with separate Adam
optimisers: the surrogate is fitted to the inpainting equation's residual on
detached known data, then the mask (or tonal) network is updated through the
frozen surrogate. The surrogate is never trained against the original image,
only against the residual, so its access to f cannot leak into the data
optimisation.

Optional warm-up epochs fit the surrogate alone on synthetic masks (random
binary placements alternating with smooth confidence fields) before the
joint phase; an exploitable surrogate early in training otherwise lets the
mask network polarise in the wrong places.

Model selection keeps the epoch whose validation reconstruction error is
lowest, measured through the model-based solver on the deployment path
(binary coin-flip masks, real inpainting), not through the surrogate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader, Dataset

from .binarize import binarize_coinflip, binarize_quantise
from .data import SyntheticCorpus
from .losses import (
    loss_inpainting,
    loss_mask_density,
    loss_mask_variance,
    loss_residual,
    mask_rescale,
)
from .unet import mask_network, surrogate_network, tonal_network

MASK_VARIANTS = ("nonbinary", "quantise", "coinflip")

LOG_COLUMNS = ("epoch", "loss_inpaint", "loss_residual", "loss_mask", "val_psnr")


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) in epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    density: float = 0.1
    epochs: int = 50  # spatial default; tonal experiments use 100
    batch_size: int = 16
    crop_size: int = 64
    learning_rate: float = 5e-5
    alpha: float = 1e-4
    epsilon: float = 1e-5
    base_width: int = 64
    surrogate_warmup_epochs: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.density < 1.0:
            raise ValueError("density outside (0, 1)")
        if self.crop_size not in (64, 128):
            raise ValueError("crop_size must be 64 or 128")
        if self.alpha < 0.0 or self.epsilon <= 0.0:
            raise ValueError("alpha must be >= 0 and epsilon > 0")
        if self.surrogate_warmup_epochs < 0:
            raise ValueError("surrogate_warmup_epochs must be >= 0")


@dataclass
class TrainResult:
    model_state: dict
    surrogate_state: dict
    log: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.inf


def _check_finite(epoch: int, *values) -> None:
    for value in values:
        scalar = value.item() if isinstance(value, torch.Tensor) else float(value)
        if not math.isfinite(scalar):
            raise TrainingDivergedError(epoch)


def _loader(dataset: Dataset, config: TrainConfig, shuffle: bool) -> DataLoader:
    generator = torch.Generator().manual_seed(config.rng_seed)
    return DataLoader(dataset, batch_size=config.batch_size, shuffle=shuffle,
                      generator=generator if shuffle else None)


def _warmup_masks(shape, density, generator) -> torch.Tensor:
    """Surrogate warm-up inputs: binary placements or smooth confidence fields."""
    batch, _, n_y, n_x = shape
    masks = torch.empty(batch, 1, n_y, n_x)
    for i in range(batch):
        if torch.rand((), generator=generator) < 0.5:
            flat = torch.zeros(n_y * n_x)
            k = max(1, round(density * n_y * n_x))
            flat[torch.randperm(n_y * n_x, generator=generator)[:k]] = 1.0
            masks[i, 0] = flat.reshape(n_y, n_x)
        else:
            coarse = torch.rand(1, 1, n_y // 8, n_x // 8, generator=generator)
            smooth = F.interpolate(coarse, size=(n_y, n_x), mode="bilinear",
                                   align_corners=False)
            masks[i] = mask_rescale(smooth, density)[0]
    return masks


def _mask_paths(mask_net, f, variant, config, coin_generator):
    """Confidence mask (regularisation target) and the mask fed onward."""
    c_hat = mask_net(f)
    if variant == "nonbinary":
        confidence = mask_rescale(c_hat, config.density, config.epsilon)
        return confidence, confidence
    if variant == "coinflip":
        confidence = mask_rescale(c_hat, config.density, config.epsilon)
        return confidence, binarize_coinflip(confidence, coin_generator)
    return c_hat, binarize_quantise(c_hat)


def _mask_loss(confidence, used, variant, config):
    if variant == "quantise":
        return loss_mask_density(used, config.density)
    return (loss_mask_variance(confidence, config.alpha, config.epsilon)
            + loss_mask_density(confidence, config.density))


def train_mask_net(train_set: Dataset, val_set: Dataset, config: TrainConfig,
                   variant: str = "nonbinary", log_path: str | Path | None = None
                   ) -> TrainResult:
    """Train a spatial optimisation network jointly with its surrogate."""
    if variant not in MASK_VARIANTS:
        raise ValueError(f"variant must be one of {MASK_VARIANTS}")
    torch.manual_seed(config.rng_seed)
    mask_net = mask_network(config.base_width)
    surrogate = surrogate_network(config.base_width)
    opt_mask = torch.optim.Adam(mask_net.parameters(), lr=config.learning_rate)
    opt_surrogate = torch.optim.Adam(surrogate.parameters(), lr=config.learning_rate)
    coin_generator = torch.Generator().manual_seed(config.rng_seed + 1)
    warm_generator = torch.Generator().manual_seed(config.rng_seed + 2)

    result = TrainResult(model_state={}, surrogate_state={})
    loader = _loader(train_set, config, shuffle=True)

    for epoch in range(config.surrogate_warmup_epochs):
        surrogate.train()
        for f in loader:
            c = _warmup_masks(f.shape, config.density, warm_generator)
            u = surrogate(torch.cat([f, f * c, c], dim=1))
            residual = loss_residual(u, f, c)
            opt_surrogate.zero_grad()
            residual.backward()
            opt_surrogate.step()
            _check_finite(epoch, residual)

    for epoch in range(config.epochs):
        mask_net.train()
        surrogate.train()
        sums = {"loss_inpaint": 0.0, "loss_residual": 0.0, "loss_mask": 0.0}
        batches = 0
        for f in loader:
            confidence, c = _mask_paths(mask_net, f, variant, config, coin_generator)

            # The surrogate trains on the current masks mixed with reference
            # masks; a surrogate fitted only to the mask net's output
            # distribution co-adapts to it and its gradients off that
            # distribution stop reflecting the inpainting physics.
            c_detached = c.detach()
            reference = _warmup_masks(f.shape, config.density, warm_generator)
            keep = (torch.rand(f.shape[0], 1, 1, 1, generator=warm_generator) < 0.5)
            c_surrogate = torch.where(keep, c_detached, reference)
            u = surrogate(torch.cat([f, f * c_surrogate, c_surrogate], dim=1))
            residual = loss_residual(u, f, c_surrogate)
            opt_surrogate.zero_grad()
            residual.backward()
            opt_surrogate.step()

            surrogate.requires_grad_(False)
            u_frozen = surrogate(torch.cat([f, f * c, c], dim=1))
            inpaint_term = loss_inpainting(u_frozen, f)
            mask_term = _mask_loss(confidence, c, variant, config)
            total = inpaint_term + mask_term
            opt_mask.zero_grad()
            total.backward()
            opt_mask.step()
            surrogate.requires_grad_(True)

            _check_finite(epoch, residual, inpaint_term, mask_term)
            sums["loss_inpaint"] += inpaint_term.item()
            sums["loss_residual"] += residual.item()
            sums["loss_mask"] += mask_term.item()
            batches += 1

        val_loss = _validate_mask(mask_net, val_set, config)
        _check_finite(epoch, val_loss)
        row = {
            "epoch": epoch,
            "loss_inpaint": sums["loss_inpaint"] / batches,
            "loss_residual": sums["loss_residual"] / batches,
            "loss_mask": sums["loss_mask"] / batches,
            "val_psnr": -10.0 * math.log10(max(val_loss, 1e-12)),
        }
        result.log.append(row)
        if val_loss < result.best_val_loss:
            result.best_val_loss = val_loss
            result.best_epoch = epoch
            result.model_state = {k: v.clone() for k, v in mask_net.state_dict().items()}
            result.surrogate_state = {k: v.clone() for k, v in surrogate.state_dict().items()}

    if log_path is not None:
        write_log(result.log, log_path)
    return result


@torch.no_grad()
def _validate_mask(mask_net, val_set, config) -> float:
    """Deployment-path validation: binary export masks, model-based inpainting."""
    from inpaint_opt import SolverParams, inpaint_grids

    from .export import binarize_confidences

    mask_net.eval()
    solver = SolverParams()
    total, count = 0.0, 0
    for f in _loader(val_set, config, shuffle=False):
        confidence = mask_rescale(mask_net(f), config.density, config.epsilon)
        for i in range(f.shape[0]):
            conf_np = confidence[i, 0].numpy().astype(np.float64)
            selected = binarize_confidences(conf_np, config.density,
                                            seed=config.rng_seed + 5000 + count)
            f_np = f[i, 0].numpy().astype(np.float64)
            g = np.where(selected, f_np, 0.0)[:, :, np.newaxis]
            u = inpaint_grids(selected, g, solver)[:, :, 0]
            total += float(np.mean((u - f_np) ** 2))
            count += 1
    return total / count


class MaskedCorpus(Dataset):
    """(image, binary mask) pairs for tonal training.

    Masks alternate between uniformly random placement and the dithered
    Laplacian-magnitude masks of the model-based evaluator; densities cycle
    through the given list per index. Deterministic per index.
    """

    def __init__(self, count: int, density: float | tuple = 0.1, size: int = 64,
                 start: int = 0):
        self.images = SyntheticCorpus(count, size, start)
        self.densities = (density,) if isinstance(density, float) else tuple(density)
        self._cache: dict[int, torch.Tensor] = {}

    def __len__(self) -> int:
        return len(self.images)

    def _mask_for(self, item: int, f: torch.Tensor) -> torch.Tensor:
        if item not in self._cache:
            from inpaint_opt import Image, mask_analytic, mask_random

            density = self.densities[item % len(self.densities)]
            size = f.shape[-1]
            seed = self.images.start + item
            if (item // len(self.densities)) % 2 == 0:
                mask = mask_random(size, f.shape[-2], density, seed)
            else:
                img = Image(f[0].numpy().astype(np.float64))
                mask = mask_analytic(img, density, seed)
            self._cache[item] = torch.from_numpy(mask.values).to(torch.float32).unsqueeze(0)
        return self._cache[item]

    def __getitem__(self, item: int):
        f = self.images[item]
        return f, self._mask_for(item, f)


def train_tonal_net(train_set: Dataset, val_set: Dataset, config: TrainConfig,
                    log_path: str | Path | None = None) -> TrainResult:
    """Train the tonal network; the surrogate minimises both residuals.

    The residual w.r.t. the original known data anchors the surrogate while
    the optimised values g move with the tonal network's training progress.
    """
    torch.manual_seed(config.rng_seed)
    tonal_net = tonal_network(config.base_width)
    surrogate = surrogate_network(config.base_width)
    opt_tonal = torch.optim.Adam(tonal_net.parameters(), lr=config.learning_rate)
    opt_surrogate = torch.optim.Adam(surrogate.parameters(), lr=config.learning_rate)
    warm_generator = torch.Generator().manual_seed(config.rng_seed + 2)

    result = TrainResult(model_state={}, surrogate_state={})
    loader = _loader(train_set, config, shuffle=True)

    for epoch in range(config.surrogate_warmup_epochs):
        surrogate.train()
        for f, c in loader:
            u = surrogate(torch.cat([f, f * c, c], dim=1))
            residual = loss_residual(u, f, c)
            opt_surrogate.zero_grad()
            residual.backward()
            opt_surrogate.step()
            _check_finite(epoch, residual)

    for epoch in range(config.epochs):
        tonal_net.train()
        surrogate.train()
        sums = {"loss_inpaint": 0.0, "loss_residual": 0.0}
        batches = 0
        for f, c in loader:
            g = tonal_net(torch.cat([f, c], dim=1))

            # As with the mask nets, the surrogate alternates between the
            # tonal net's current values and reference values near the
            # originals, so its response to value changes stays anchored to
            # the physics while the tonal net's output distribution moves.
            g_detached = g.detach()
            sigma = torch.rand(f.shape[0], 1, 1, 1, generator=warm_generator) * 0.15
            g_reference = f + sigma * torch.randn(f.shape, generator=warm_generator)
            keep = (torch.rand(f.shape[0], 1, 1, 1, generator=warm_generator) < 0.5)
            g_surrogate = torch.where(keep, g_detached, g_reference)
            u = surrogate(torch.cat([f, g_surrogate * c, c], dim=1))
            residual = loss_residual(u, g_surrogate, c) + loss_residual(u, f, c)
            opt_surrogate.zero_grad()
            residual.backward()
            opt_surrogate.step()

            surrogate.requires_grad_(False)
            u_frozen = surrogate(torch.cat([f, g * c, c], dim=1))
            inpaint_term = loss_inpainting(u_frozen, f)
            opt_tonal.zero_grad()
            inpaint_term.backward()
            opt_tonal.step()
            surrogate.requires_grad_(True)

            _check_finite(epoch, residual, inpaint_term)
            sums["loss_inpaint"] += inpaint_term.item()
            sums["loss_residual"] += residual.item()
            batches += 1

        val_loss = _validate_tonal(tonal_net, val_set, config)
        _check_finite(epoch, val_loss)
        row = {
            "epoch": epoch,
            "loss_inpaint": sums["loss_inpaint"] / batches,
            "loss_residual": sums["loss_residual"] / batches,
            "loss_mask": 0.0,
            "val_psnr": -10.0 * math.log10(max(val_loss, 1e-12)),
        }
        result.log.append(row)
        if val_loss < result.best_val_loss:
            result.best_val_loss = val_loss
            result.best_epoch = epoch
            result.model_state = {k: v.clone() for k, v in tonal_net.state_dict().items()}
            result.surrogate_state = {k: v.clone() for k, v in surrogate.state_dict().items()}

    if log_path is not None:
        write_log(result.log, log_path)
    return result


@torch.no_grad()
def _validate_tonal(tonal_net, val_set, config) -> float:
    """Deployment-path validation: network values through the real solver."""
    from inpaint_opt import SolverParams, inpaint_grids

    tonal_net.eval()
    solver = SolverParams()
    total, count = 0.0, 0
    for f, c in _loader(val_set, config, shuffle=False):
        g = tonal_net(torch.cat([f, c], dim=1))
        for i in range(f.shape[0]):
            known = c[i, 0].numpy().astype(bool)
            f_np = f[i, 0].numpy().astype(np.float64)
            g_np = g[i, 0].numpy().astype(np.float64)
            grid = np.where(known, g_np, 0.0)[:, :, np.newaxis]
            u = inpaint_grids(known, grid, solver)[:, :, 0]
            total += float(np.mean((u - f_np) ** 2))
            count += 1
    return total / count


def write_log(rows: list[dict], path: str | Path) -> None:
    """Training log as CSV: epoch,loss_inpaint,loss_residual,loss_mask,val_psnr."""
    lines = [",".join(LOG_COLUMNS)]
    for row in rows:
        lines.append(",".join(
            str(row["epoch"]) if col == "epoch" else f"{row[col]:.8g}"
            for col in LOG_COLUMNS
        ))
    Path(path).write_text("\n".join(lines) + "\n")
