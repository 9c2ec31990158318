"""Sparse-data optimisation toolkit for homogeneous diffusion inpainting.

Spatial mask optimisation (random, analytic dithering, probabilistic
sparsification, nonlocal pixel exchange), least-squares and echo-based tonal
optimisation, a matrix-free conjugate gradient inpainting solver, netpbm
image I/O, and a benchmarking command line.
"""

from .image import (
    Image,
    InvalidMaskError,
    KnownData,
    Mask,
    center_crop,
    load_image,
    load_mask,
    psnr,
    save_image,
    save_mask,
)
from .netpbm import (
    MalformedHeaderError,
    PnmParseError,
    TruncatedPayloadError,
    UnsupportedMagicError,
)
from .solver import (
    ConvergenceError,
    NegatedLaplacian,
    NoKnownDataError,
    ReducedInpaintingOperator,
    SolverParams,
    apply_laplacian,
    inpaint,
    inpaint_grids,
    residual_norm,
)
from .spatial import (
    AnalyticFallbackWarning,
    NlpeParams,
    SparsifyParams,
    floyd_steinberg,
    laplacian_magnitude,
    mask_analytic,
    mask_random,
    nlpe,
    sparsify,
)
from .synthetic import make_corpus, make_image, write_corpus
from .tonal import TonalParams, load_known, save_known, tonal_echo, tonal_lsq

__version__ = "0.1.0"

__all__ = [
    "AnalyticFallbackWarning",
    "ConvergenceError",
    "Image",
    "InvalidMaskError",
    "KnownData",
    "MalformedHeaderError",
    "Mask",
    "NegatedLaplacian",
    "NlpeParams",
    "NoKnownDataError",
    "PnmParseError",
    "ReducedInpaintingOperator",
    "SolverParams",
    "SparsifyParams",
    "TonalParams",
    "TruncatedPayloadError",
    "UnsupportedMagicError",
    "apply_laplacian",
    "center_crop",
    "floyd_steinberg",
    "inpaint",
    "inpaint_grids",
    "laplacian_magnitude",
    "load_image",
    "load_known",
    "load_mask",
    "make_corpus",
    "make_image",
    "mask_analytic",
    "mask_random",
    "nlpe",
    "psnr",
    "residual_norm",
    "save_image",
    "save_known",
    "save_mask",
    "sparsify",
    "tonal_echo",
    "tonal_lsq",
    "write_corpus",
]
