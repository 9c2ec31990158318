"""Learned spatial and tonal data selection for homogeneous diffusion inpainting.

A surrogate solver network is trained on the inpainting equation's residual
and used, during training only, to backpropagate through reconstructions;
mask and tonal networks optimise the known data against it. Deployment
exports binary PGM masks and TONAL value files that the model-based
evaluator consumes.
"""

from .binarize import binarize_coinflip, binarize_quantise
from .data import SyntheticCorpus, synth_image
from .export import (
    binarize_confidences,
    export_mask,
    export_tonal,
    predict_confidences,
    predict_mask,
    predict_tonal,
)
from .losses import (
    laplacian,
    loss_inpainting,
    loss_mask_density,
    loss_mask_variance,
    loss_residual,
    mask_rescale,
)
from .train import (
    LOG_COLUMNS,
    MASK_VARIANTS,
    MaskedCorpus,
    TrainConfig,
    TrainingDivergedError,
    TrainResult,
    train_mask_net,
    train_tonal_net,
    write_log,
)
from .unet import ContextBlock, ContextUNet, mask_network, surrogate_network, tonal_network

__version__ = "0.1.0"
