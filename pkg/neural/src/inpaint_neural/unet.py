"""Modified U-net with multiscale context aggregation.

Four scales (three 2x2 max-pool downsamplings), channel widths ascending
(base, 2*base, 4*base, 4*base), with every convolutional stage replaced by a
context aggregation block: three parallel dilated convolutions (dilations 1,
2 and 5) whose ELU-activated outputs are concatenated. Restriction and
prolongation stages use 5x5 (transposed) kernels; two extra blocks
post-process the coarsest scale. A final hard sigmoid (plain sigmoid for the
mask network) keeps outputs in [0, 1]. Spatial dimensions must be divisible
by 8 and are preserved.
"""
from __future__ import annotations

import torch
from torch import nn

_DILATIONS = (1, 2, 5)


class ContextBlock(nn.Module):
    """Three parallel dilated convolutions, concatenated after ELU."""

    def __init__(self, c_in: int, c_out: int, kernel: int = 3, transposed: bool = False):
        super().__init__()
        share = c_out // 3
        widths = (c_out - 2 * share, share, share)
        branches = []
        for dilation, width in zip(_DILATIONS, widths):
            padding = dilation * (kernel // 2)
            if transposed:
                conv = nn.ConvTranspose2d(c_in, width, kernel, padding=padding,
                                          dilation=dilation)
            else:
                conv = nn.Conv2d(c_in, width, kernel, padding=padding, dilation=dilation)
            branches.append(conv)
        self.branches = nn.ModuleList(branches)
        self.activation = nn.ELU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.cat([self.activation(branch(x)) for branch in self.branches], dim=1)


class ContextUNet(nn.Module):
    def __init__(self, in_channels: int, out_channels: int = 1, base_width: int = 64,
                 output: str = "hard_sigmoid"):
        super().__init__()
        if output not in ("hard_sigmoid", "sigmoid"):
            raise ValueError(f"unknown output activation {output!r}")
        w0, w1, w2, w3 = base_width, 2 * base_width, 4 * base_width, 4 * base_width
        self.stem = ContextBlock(in_channels, w0)
        self.pool = nn.MaxPool2d(2)
        self.down1 = ContextBlock(w0, w1, kernel=5)
        self.down2 = ContextBlock(w1, w2, kernel=5)
        self.down3 = ContextBlock(w2, w3, kernel=5)
        self.post1 = ContextBlock(w3, w3)
        self.post2 = ContextBlock(w3, w3)
        self.upsample = nn.Upsample(scale_factor=2, mode="nearest")
        self.up3 = ContextBlock(w3, w2, kernel=5, transposed=True)
        self.merge2 = ContextBlock(2 * w2, w2)
        self.up2 = ContextBlock(w2, w1, kernel=5, transposed=True)
        self.merge1 = ContextBlock(2 * w1, w1)
        self.up1 = ContextBlock(w1, w0, kernel=5, transposed=True)
        self.merge0 = ContextBlock(2 * w0, w0)
        self.head = nn.Conv2d(w0, out_channels, kernel_size=1)
        self.output = nn.Hardsigmoid() if output == "hard_sigmoid" else nn.Sigmoid()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] % 8 or x.shape[-2] % 8:
            raise ValueError(f"spatial dims must be divisible by 8, got {tuple(x.shape[-2:])}")
        e0 = self.stem(x)
        e1 = self.down1(self.pool(e0))
        e2 = self.down2(self.pool(e1))
        e3 = self.down3(self.pool(e2))
        bottom = self.post2(self.post1(e3))
        d2 = self.merge2(torch.cat([self.up3(self.upsample(bottom)), e2], dim=1))
        d1 = self.merge1(torch.cat([self.up2(self.upsample(d2)), e1], dim=1))
        d0 = self.merge0(torch.cat([self.up1(self.upsample(d1)), e0], dim=1))
        return self.output(self.head(d0))


def mask_network(base_width: int = 64) -> ContextUNet:
    """Image in, confidence mask out.

    Uses a smooth sigmoid output: confidences drive a density rescaling and
    a coin flip, and a saturating hard sigmoid would kill the gradient of
    pixels pushed to exactly 0 or 1.
    """
    return ContextUNet(in_channels=1, out_channels=1, base_width=base_width,
                       output="sigmoid")


def tonal_network(base_width: int = 64) -> ContextUNet:
    """(image, mask) in, optimised values out."""
    return ContextUNet(in_channels=2, out_channels=1, base_width=base_width)


def surrogate_network(base_width: int = 64) -> ContextUNet:
    """(image, masked values, mask) in, reconstruction out."""
    return ContextUNet(in_channels=3, out_channels=1, base_width=base_width)
