"""Homogeneous diffusion inpainting with a matrix-free conjugate gradient solver.

The discrete steady state satisfies, per pixel,

    (1 - c) * lap(u) - c * (u - g) = 0

on a 5-point stencil with grid size 1 and reflecting boundaries (the weight
of an out-of-domain neighbour folds onto the centre). Instead of iterating
on that nonsymmetric system, known pixels are eliminated: u = g there, and
the negated Laplacian restricted to the unknown pixels is symmetric positive
definite, so plain conjugate gradients applies. Colour images are solved
channel-wise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import Image, KnownData


@dataclass(frozen=True)
class SolverParams:
    """Krylov stopping rule: relative residual and iteration budget.

    ``max_iterations`` of None resolves to 10 * n_x * n_y per solve.
    """

    rel_tolerance: float = 1e-6
    max_iterations: int | None = None

    def __post_init__(self):
        if not 0.0 < self.rel_tolerance < 1.0:
            raise ValueError(f"rel_tolerance {self.rel_tolerance} outside (0, 1)")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def budget(self, n_pixels: int) -> int:
        return self.max_iterations if self.max_iterations is not None else 10 * n_pixels


class NoKnownDataError(ValueError):
    """Inpainting was requested with an empty mask."""


class ConvergenceError(RuntimeError):
    """The iteration budget ran out; carries the final relative residual."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"no convergence after {iterations} iterations, relative residual {residual:.3e}"
        )
        self.iterations = iterations
        self.residual = residual


def laplacian2d(field: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """5-point Laplacian with mirrored (homogeneous Neumann) boundaries, h = 1."""
    if out is None:
        out = np.empty_like(field)
    np.multiply(field, -4.0, out=out)
    out[1:, :] += field[:-1, :]
    out[0, :] += field[0, :]
    out[:-1, :] += field[1:, :]
    out[-1, :] += field[-1, :]
    out[:, 1:] += field[:, :-1]
    out[:, 0] += field[:, 0]
    out[:, :-1] += field[:, 1:]
    out[:, -1] += field[:, -1]
    return out


def apply_laplacian(img: Image) -> Image:
    """Discrete Laplacian of a single-channel image."""
    if img.channels != 1:
        raise ValueError("apply_laplacian expects a single-channel image")
    return Image(laplacian2d(img.data[:, :, 0]))


class NegatedLaplacian:
    """Matrix-free handle for -lap on the full grid (positive semidefinite)."""

    def __init__(self, n_y: int, n_x: int):
        self.n_y = n_y
        self.n_x = n_x

    def apply(self, field: np.ndarray) -> np.ndarray:
        if field.shape != (self.n_y, self.n_x):
            raise ValueError("field shape does not match operator dimensions")
        return -laplacian2d(field)


class ReducedInpaintingOperator:
    """-lap restricted to the unknown pixels of a binary mask (SPD).

    Operands are full grids that are zero at known pixels; the result is
    zeroed there as well, so inner products over the full grid equal those
    over the unknown subspace.
    """

    def __init__(self, known: np.ndarray):
        known = np.asarray(known, dtype=bool)
        if known.ndim != 2:
            raise ValueError("known must be a 2-D boolean grid")
        self.known = known

    def apply(self, field: np.ndarray) -> np.ndarray:
        result = laplacian2d(field)
        np.negative(result, out=result)
        result[self.known] = 0.0
        return result


def _cg(op: ReducedInpaintingOperator, rhs: np.ndarray, tol: float, budget: int,
        x0: np.ndarray | None = None) -> np.ndarray:
    """Conjugate gradients on the reduced system; rhs and iterates live on
    full grids with zeros at known pixels."""
    rhs_norm = math.sqrt(float(np.vdot(rhs, rhs)))
    if rhs_norm == 0.0:
        # Zero right-hand side: the SPD system has the unique solution zero.
        return np.zeros_like(rhs)
    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = x0.copy()
        x[op.known] = 0.0
        r = rhs - op.apply(x)
    rr = float(np.vdot(r, r))
    threshold = (tol * rhs_norm) ** 2
    if rr <= threshold:
        return x
    p = r.copy()
    for _ in range(budget):
        q = op.apply(p)
        alpha = rr / float(np.vdot(p, q))
        x += alpha * p
        r -= alpha * q
        rr_next = float(np.vdot(r, r))
        if rr_next <= threshold:
            return x
        p *= rr_next / rr
        p += r
        rr = rr_next
    raise ConvergenceError(budget, math.sqrt(rr) / rhs_norm)


def solve_channel(known: np.ndarray, g: np.ndarray, params: SolverParams,
                  initial: np.ndarray | None = None) -> np.ndarray:
    """Inpaint one channel: known boolean grid, g values at known pixels."""
    if not known.any():
        raise NoKnownDataError("empty mask")
    if known.all():
        return g.copy()
    scattered = np.where(known, g, 0.0)
    rhs = laplacian2d(scattered)
    rhs[known] = 0.0
    op = ReducedInpaintingOperator(known)
    x = _cg(op, rhs, params.rel_tolerance, params.budget(known.size), x0=initial)
    return np.where(known, g, x)


def inpaint_grids(known: np.ndarray, g: np.ndarray, params: SolverParams = SolverParams(),
                  initial: np.ndarray | None = None) -> np.ndarray:
    """Channel-wise inpainting on raw grids: g has shape (n_y, n_x, channels)."""
    result = np.empty_like(g)
    for ch in range(g.shape[2]):
        start = initial[:, :, ch] if initial is not None else None
        result[:, :, ch] = solve_channel(known, g[:, :, ch], params, initial=start)
    return result


def inpaint(known_data: KnownData, params: SolverParams = SolverParams(),
            initial: Image | None = None) -> Image:
    """Solve the inpainting system for the given known data.

    The returned image satisfies u = g exactly at known pixels and reaches
    the relative residual of ``params`` on the reduced system elsewhere.
    ``initial`` warm-starts the iteration and changes runtime only.
    """
    known = known_data.mask.bool_array()
    grid = known_data.to_grid()
    start = initial.data if initial is not None else None
    return Image(inpaint_grids(known, grid, params, initial=start))


def residual_norm(u: Image, known_data: KnownData) -> float:
    """Mean squared residual of the full inpainting system, averaged over channels.

    Per channel this is ||(1 - c) * lap(u) - c * (u - g)||^2 / (n_x * n_y).
    """
    mask = known_data.mask
    if (u.n_y, u.n_x) != (mask.n_y, mask.n_x) or u.channels != known_data.channels:
        raise ValueError("image and known data dimensions differ")
    known = mask.bool_array()
    g_grid = known_data.to_grid()
    total = 0.0
    for ch in range(u.channels):
        u_ch = u.data[:, :, ch]
        res = laplacian2d(u_ch)
        res[known] = -(u_ch[known] - g_grid[known, ch])
        total += float(np.vdot(res, res)) / u_ch.size
    return total / u.channels
