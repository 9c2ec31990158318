"""Training losses and the mask density rescaling.

Tensors are batched NCHW. Per-sample quantities are normalised by the pixel
count (not the channel count) to stay numerically identical to the
model-based residual, then averaged over channels and the batch.
"""
from __future__ import annotations

import torch
import torch.nn.functional as F

EPSILON = 1e-5


def laplacian(u: torch.Tensor) -> torch.Tensor:
    """5-point stencil with mirrored boundaries; matches the evaluator's grid."""
    p = F.pad(u, (1, 1, 1, 1), mode="replicate")
    return (
        p[..., :-2, 1:-1] + p[..., 2:, 1:-1] + p[..., 1:-1, :-2] + p[..., 1:-1, 2:]
        - 4.0 * u
    )


def loss_residual(u: torch.Tensor, g: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
    """Mean squared residual of the inpainting equation, (1/N) ||(1-c) lap u - c (u-g)||^2."""
    r = (1.0 - c) * laplacian(u) - c * (u - g)
    per_channel = r.pow(2).sum(dim=(-2, -1)) / (r.shape[-2] * r.shape[-1])
    return per_channel.mean()


def loss_inpainting(u: torch.Tensor, f: torch.Tensor) -> torch.Tensor:
    """Mean squared deviation of the reconstruction from the original."""
    return (u - f).pow(2).mean()


def mask_rescale(c_hat: torch.Tensor, density: float, eps: float = EPSILON) -> torch.Tensor:
    """Shrink confidence masks whose density exceeds the target.

    c = d * c_hat / (||c_hat||_1 / N + eps), applied per sample and only when
    the sample's density lies above d; never raises the density beyond d.
    """
    mean = c_hat.mean(dim=(1, 2, 3), keepdim=True)
    factor = density / (mean + eps)
    return torch.where(mean > density, c_hat * factor, c_hat)


def loss_mask_variance(c: torch.Tensor, alpha: float, eps: float = EPSILON) -> torch.Tensor:
    """Inverse-variance regulariser: pushes confidences away from a flat mask."""
    variance = c.var(dim=(1, 2, 3), unbiased=False)
    return (alpha / (variance + eps)).mean()


def loss_mask_density(c: torch.Tensor, density: float) -> torch.Tensor:
    """Absolute deviation of the mask density from the target."""
    return (c.mean(dim=(1, 2, 3)) - density).abs().mean()
