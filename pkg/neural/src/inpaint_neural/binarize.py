"""Binarisation layers with straight-through gradients.

Both layers output exactly binary tensors in the forward pass and pass
gradients through unchanged (synthetic derivative 1) in the backward pass.
"""
from __future__ import annotations

import torch


class _QuantiseSTE(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x):
        return torch.floor(x + 0.5).clamp(0.0, 1.0)

    @staticmethod
    def backward(ctx, grad_output):
        return grad_output


class _CoinFlipSTE(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, noise):
        return (noise < x).to(x.dtype)

    @staticmethod
    def backward(ctx, grad_output):
        return grad_output, None


def binarize_quantise(c: torch.Tensor) -> torch.Tensor:
    """Hard rounding x -> floor(x + 0.5) with a straight-through gradient."""
    return _QuantiseSTE.apply(c)


def binarize_coinflip(c: torch.Tensor, generator: torch.Generator | None = None) -> torch.Tensor:
    """Weighted coin flip per confidence value with a straight-through gradient."""
    noise = torch.rand(c.shape, generator=generator, dtype=c.dtype, device=c.device)
    return _CoinFlipSTE.apply(c, noise)
