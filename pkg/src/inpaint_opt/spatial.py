"""Spatial mask optimisation: random baseline, Laplacian-magnitude dithering,
probabilistic sparsification, and nonlocal pixel exchange.

All stochastic methods are deterministic for a fixed seed. The expensive
methods (sparsification, pixel exchange) warm-start each inner inpainting
from the previous solution, which changes runtime but not results.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .image import Image, Mask
from .solver import SolverParams, inpaint_grids, laplacian2d


class AnalyticFallbackWarning(UserWarning):
    """The Laplacian magnitude vanished everywhere; a random mask was used."""


@dataclass(frozen=True)
class SparsifyParams:
    """Probabilistic sparsification controls.

    Each iteration removes ``candidate_fraction`` of the current mask pixels,
    ranks them by their local inpainting error, and returns the
    ``return_fraction`` of candidates with the largest errors.
    """

    target_density: float
    candidate_fraction: float = 0.02
    return_fraction: float = 0.98
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.candidate_fraction <= 1.0:
            raise ValueError("candidate_fraction outside (0, 1]")
        if not 0.0 <= self.return_fraction < 1.0:
            raise ValueError("return_fraction outside [0, 1)")
        if not 0.0 < self.target_density < 1.0:
            raise ValueError("target_density outside (0, 1)")


@dataclass(frozen=True)
class NlpeParams:
    """Nonlocal pixel exchange controls: each cycle runs as many exchange
    attempts as the mask has pixels."""

    cycles: int = 5
    swap_size: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.cycles < 0:
            raise ValueError("cycles must be >= 0")
        if self.swap_size < 1:
            raise ValueError("swap_size must be >= 1")


def mask_random(width: int, height: int, density: float, seed: int = 0) -> Mask:
    """Uniformly random binary mask with exactly round(density * pixels) set."""
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density {density} outside (0, 1]; empty masks are not allowed")
    n = width * height
    k = int(round(density * n))
    if k == 0:
        raise ValueError(f"density {density} rounds to an empty mask")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=k, replace=False)
    flat = np.zeros(n)
    flat[chosen] = 1.0
    return Mask(values=flat.reshape(height, width), kind="binary")


def laplacian_magnitude(f: Image) -> np.ndarray:
    """Channel-averaged |lap(f)| per pixel."""
    acc = np.zeros((f.n_y, f.n_x))
    for ch in range(f.channels):
        acc += np.abs(laplacian2d(f.data[:, :, ch]))
    return acc / f.channels


def floyd_steinberg(values: np.ndarray) -> np.ndarray:
    """Error-diffusion dithering of [0, 1] values to a boolean grid.

    Raster scan; the quantisation error spreads to the four classic
    neighbours with weights 7/16, 3/16, 5/16, 1/16.
    """
    work = np.asarray(values, dtype=np.float64).copy()
    n_y, n_x = work.shape
    out = np.zeros((n_y, n_x), dtype=bool)
    for y in range(n_y):
        row = work[y]
        below = work[y + 1] if y + 1 < n_y else None
        for x in range(n_x):
            old = row[x]
            new = 1.0 if old >= 0.5 else 0.0
            out[y, x] = bool(new)
            err = old - new
            if x + 1 < n_x:
                row[x + 1] += err * (7.0 / 16.0)
            if below is not None:
                if x > 0:
                    below[x - 1] += err * (3.0 / 16.0)
                below[x] += err * (5.0 / 16.0)
                if x + 1 < n_x:
                    below[x + 1] += err * (1.0 / 16.0)
    return out


def _correct_count(selected: np.ndarray, target: int, rng: np.random.Generator) -> np.ndarray:
    """Randomly add or remove pixels until exactly ``target`` are set."""
    selected = selected.copy()
    count = int(selected.sum())
    if count > target:
        on = np.flatnonzero(selected.reshape(-1))
        drop = rng.choice(on, size=count - target, replace=False)
        selected.reshape(-1)[drop] = False
    elif count < target:
        off = np.flatnonzero(~selected.reshape(-1))
        add = rng.choice(off, size=target - count, replace=False)
        selected.reshape(-1)[add] = True
    return selected


def mask_analytic(f: Image, density: float, seed: int = 0) -> Mask:
    """Analytic mask: Floyd-Steinberg dithering of the Laplacian magnitude.

    The magnitude is rescaled so its mean matches the target density, clamped
    to [0, 1], dithered, and finally corrected by random additions or
    removals to exactly round(density * pixels). Constant images have zero
    Laplacian everywhere and fall back to a uniformly random mask (an
    AnalyticFallbackWarning is emitted).
    """
    if not 0.0 < density < 1.0:
        raise ValueError(f"density {density} outside (0, 1)")
    weights = laplacian_magnitude(f)
    if weights.max() <= 1e-12:  # constant images leave only rounding residue
        warnings.warn(
            "Laplacian magnitude is zero everywhere; falling back to a random mask",
            AnalyticFallbackWarning,
            stacklevel=2,
        )
        return mask_random(f.n_x, f.n_y, density, seed)
    scaled = np.clip(weights * (density / weights.mean()), 0.0, 1.0)
    rng = np.random.default_rng(seed)
    target = int(round(density * f.n_x * f.n_y))
    selected = _correct_count(floyd_steinberg(scaled), target, rng)
    return Mask(values=selected.astype(np.float64), kind="binary")


def _pixel_error(u: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Channel-summed squared reconstruction error per pixel."""
    diff = u - f
    return np.sum(diff * diff, axis=2)


def sparsify(f: Image, params: SparsifyParams, solver: SolverParams = SolverParams(),
             trace: list | None = None) -> Mask:
    """Probabilistic sparsification from a full mask down to the target density.

    Per iteration a random candidate fraction of the mask is removed, the
    image is inpainted without them, and the candidates with the largest
    errors at their own pixel are returned. At least one candidate is
    discarded permanently per iteration so the density always decreases.
    The final density is exact: overshoot is trimmed by re-adding the
    removed candidates with the highest errors. ``trace`` collects the mask
    pixel count after every iteration.
    """
    n_y, n_x = f.n_y, f.n_x
    n = n_y * n_x
    target = int(round(params.target_density * n))
    if target < 1:
        raise ValueError("target density rounds to an empty mask")
    rng = np.random.default_rng(params.rng_seed)

    known = np.ones((n_y, n_x), dtype=bool)
    previous = None
    while int(known.sum()) > target:
        current = int(known.sum())
        on = np.flatnonzero(known.reshape(-1))
        n_candidates = max(1, int(round(params.candidate_fraction * current)))
        n_candidates = min(n_candidates, current - 1)
        if n_candidates < 1:
            break
        candidates = rng.choice(on, size=n_candidates, replace=False)

        trial = known.copy()
        trial.reshape(-1)[candidates] = False
        g = np.where(trial[:, :, np.newaxis], f.data, 0.0)
        u = inpaint_grids(trial, g, solver, initial=previous)
        previous = u
        errors = _pixel_error(u, f.data).reshape(-1)[candidates]

        n_back = min(n_candidates - 1, int(round(params.return_fraction * n_candidates)))
        order = np.argsort(errors, kind="stable")  # ascending: keep-removed first
        removed = candidates[order[:n_candidates - n_back]]

        new_count = current - removed.size
        if new_count < target:
            # Trim the overshoot: re-add the removed candidates with the
            # largest errors until the target count is met exactly.
            surplus = target - new_count
            removed = removed[:removed.size - surplus]
        known = known.copy()
        known.reshape(-1)[removed] = False
        if trace is not None:
            trace.append(int(known.sum()))
    return Mask(values=known.astype(np.float64), kind="binary")


def _biased_pick(indices: np.ndarray, errors: np.ndarray, size: int,
                 rng: np.random.Generator, lowest: bool) -> np.ndarray:
    """Pick ``size`` indices uniformly from the lowest- or highest-error decile."""
    perm = rng.permutation(indices.size)  # random tie-breaking
    shuffled = indices[perm]
    order = np.argsort(errors[shuffled], kind="stable")
    if not lowest:
        order = order[::-1]
    decile = max(size, math.ceil(indices.size / 10))
    pool = shuffled[order[:decile]]
    return rng.choice(pool, size=min(size, pool.size), replace=False)


def nlpe(f: Image, mask: Mask, params: NlpeParams = NlpeParams(),
         solver: SolverParams = SolverParams(), trace: list | None = None) -> Mask:
    """Nonlocal pixel exchange: accept-if-better mask pixel relocation.

    Each attempt moves ``swap_size`` mask pixels (drawn from the lowest-error
    decile) to non-mask positions (drawn from the highest-error decile) and
    keeps the swap only if the global reconstruction error decreases, so the
    final error never exceeds the initial one. Density is preserved exactly.
    ``trace`` collects the global squared error after every cycle.
    """
    known = mask.bool_array().copy()
    k = int(known.sum())
    if k == 0 or k == known.size:
        raise ValueError("nonlocal pixel exchange requires 0 < density < 1")
    rng = np.random.default_rng(params.rng_seed)

    g = np.where(known[:, :, np.newaxis], f.data, 0.0)
    u = inpaint_grids(known, g, solver)
    errors = _pixel_error(u, f.data)
    sse = float(errors.sum())

    for _ in range(params.cycles):
        for _ in range(k):
            flat_known = known.reshape(-1)
            on = np.flatnonzero(flat_known)
            off = np.flatnonzero(~flat_known)
            flat_err = errors.reshape(-1)
            sources = _biased_pick(on, flat_err, params.swap_size, rng, lowest=True)
            targets = _biased_pick(off, flat_err, params.swap_size, rng, lowest=False)
            size = min(sources.size, targets.size)
            if size == 0:
                continue

            trial = known.copy()
            trial.reshape(-1)[sources[:size]] = False
            trial.reshape(-1)[targets[:size]] = True
            g = np.where(trial[:, :, np.newaxis], f.data, 0.0)
            u_trial = inpaint_grids(trial, g, solver, initial=u)
            err_trial = _pixel_error(u_trial, f.data)
            sse_trial = float(err_trial.sum())
            if sse_trial < sse:
                known = trial
                u = u_trial
                errors = err_trial
                sse = sse_trial
        if trace is not None:
            trace.append(sse)
    return Mask(values=known.astype(np.float64), kind="binary")
