"""Tonal optimisation: adjust the stored values at fixed mask positions.

Two routes to the least-squares optimum of || u(g) - f ||^2, where u(g) is
the homogeneous diffusion reconstruction from values g at the mask pixels:

* ``tonal_lsq``  -- conjugate gradients on the normal equations, matrix-free.
  One matvec with the inpainting operator B costs one reduced-system solve;
  the adjoint costs one solve with the same SPD operator (the symmetric
  elimination makes it self-adjoint) plus a gather at the known pixels.
* ``tonal_echo`` -- randomised Gauss-Seidel. Mask pixels are visited in
  random order; each visit inpaints a unit impulse at the pixel (its
  "echo") and takes the exact 1-D optimal step along it, so the global
  error never increases. Echoes are recomputed per visit, not cached.

Optimised values may leave [0, 1]; they are only clamped on 8-bit image
export, never in the float path or the TONAL text format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import Image, KnownData, Mask
from .solver import (
    ConvergenceError,
    NoKnownDataError,
    ReducedInpaintingOperator,
    SolverParams,
    _cg,
    laplacian2d,
    solve_channel,
)

# Impulse responses are accumulated over thousands of updates, so their
# solves run far tighter than the user-facing tolerance.
_ECHO_TOLERANCE = 1e-10


@dataclass(frozen=True)
class TonalParams:
    method: str = "lsq"
    outer_tolerance: float = 1e-4
    max_outer_iterations: int = 500
    echo_sweeps: int = 50
    rng_seed: int = 0
    solver: SolverParams = SolverParams()

    def __post_init__(self):
        if self.method not in ("lsq", "echo"):
            raise ValueError(f"unknown tonal method {self.method!r}")
        if not 0.0 < self.outer_tolerance < 1.0:
            raise ValueError("outer_tolerance outside (0, 1)")
        if self.max_outer_iterations < 1 or self.echo_sweeps < 1:
            raise ValueError("iteration counts must be >= 1")


def _check_inputs(f: Image, mask: Mask) -> np.ndarray:
    if (f.n_y, f.n_x) != (mask.n_y, mask.n_x):
        raise ValueError("image and mask dimensions differ")
    known = mask.bool_array()
    if not known.any():
        raise NoKnownDataError("empty mask")
    return known


def tonal_lsq(f: Image, mask: Mask, params: TonalParams = TonalParams()) -> KnownData:
    """Globally optimal known values via CG on the normal equations.

    Stops once ||B^T (B g - f)|| <= outer_tolerance * ||B^T f|| per channel.
    With a full mask B is the identity and the originals are returned.
    """
    known = _check_inputs(f, mask)
    if known.all():
        return KnownData.from_image(f, mask)

    op = ReducedInpaintingOperator(known)
    inner = params.solver
    budget = inner.budget(known.size)

    def forward(g: np.ndarray) -> np.ndarray:
        grid = np.zeros(known.shape)
        grid[known] = g
        rhs = laplacian2d(grid)
        rhs[known] = 0.0
        x = _cg(op, rhs, inner.rel_tolerance, budget)
        return np.where(known, grid, x)

    def adjoint(v: np.ndarray) -> np.ndarray:
        rhs = np.where(known, 0.0, v)
        w = _cg(op, rhs, inner.rel_tolerance, budget)
        lap_w = laplacian2d(w)
        return v[known] + lap_w[known]

    values = np.empty((int(known.sum()), f.channels))
    for ch in range(f.channels):
        f_ch = f.data[:, :, ch]
        bt_f = adjoint(f_ch)
        target = params.outer_tolerance * math.sqrt(float(np.vdot(bt_f, bt_f)))
        g = f_ch[known].copy()
        r = f_ch - forward(g)
        s = adjoint(r)
        gamma = float(np.vdot(s, s))
        if math.sqrt(gamma) > target:
            p = s.copy()
            for _ in range(params.max_outer_iterations):
                q = forward(p)
                alpha = gamma / float(np.vdot(q, q))
                g += alpha * p
                r -= alpha * q
                s = adjoint(r)
                gamma_next = float(np.vdot(s, s))
                if math.sqrt(gamma_next) <= target:
                    break
                p *= gamma_next / gamma
                p += s
                gamma = gamma_next
            else:
                scale = target / params.outer_tolerance
                raise ConvergenceError(
                    params.max_outer_iterations,
                    math.sqrt(gamma) / scale if scale > 0 else math.sqrt(gamma),
                )
        values[:, ch] = g
    return KnownData(mask=mask, values=values)


def tonal_echo(f: Image, mask: Mask, params: TonalParams = TonalParams()) -> KnownData:
    """Randomised Gauss-Seidel tonal optimisation via inpainting echoes.

    The reconstruction is maintained incrementally (u += step * echo) and
    refreshed with a full inpainting at the end of each sweep. The echo of a
    pixel is shared across colour channels, each of which takes its own
    optimal step.
    """
    known = _check_inputs(f, mask)
    rng = np.random.default_rng(params.rng_seed)
    positions = np.flatnonzero(known.reshape(-1))
    k = positions.size

    echo_solver = SolverParams(
        rel_tolerance=min(params.solver.rel_tolerance, _ECHO_TOLERANCE),
        max_iterations=params.solver.max_iterations,
    )

    def reconstruct(vals: np.ndarray) -> np.ndarray:
        grid = np.zeros((f.n_y, f.n_x, f.channels))
        grid[known, :] = vals
        return np.stack(
            [solve_channel(known, grid[:, :, ch], params.solver) for ch in range(f.channels)],
            axis=2,
        )

    values = f.data[known, :].copy()
    u = reconstruct(values)

    impulse = np.zeros(known.shape)
    index_of = np.full(known.size, -1, dtype=np.int64)
    index_of[positions] = np.arange(k)

    for _ in range(params.echo_sweeps):
        for flat_pos in rng.permutation(positions):
            y, x = divmod(int(flat_pos), known.shape[1])
            impulse[y, x] = 1.0
            echo = solve_channel(known, impulse, echo_solver)
            impulse[y, x] = 0.0
            ee = float(np.vdot(echo, echo))
            if ee == 0.0:
                continue
            row = index_of[flat_pos]
            for ch in range(f.channels):
                residual = f.data[:, :, ch] - u[:, :, ch]
                step = float(np.vdot(residual, echo)) / ee
                u[:, :, ch] += step * echo
                values[row, ch] += step
        # Re-anchor the incrementally maintained reconstruction.
        u = reconstruct(values)
    return KnownData(mask=mask, values=values)


def save_known(kd: KnownData, path: str | Path) -> None:
    """Write known data in the TONAL text format.

    Header ``TONAL <n_x> <n_y> <channels> <count>``, then one row-major line
    per known pixel: ``x y v1 [v2 v3]`` with 9 significant digits. Values are
    written unclamped.
    """
    mask = kd.mask
    lines = [f"TONAL {mask.n_x} {mask.n_y} {kd.channels} {mask.count()}"]
    ys, xs = np.nonzero(mask.bool_array())
    for row, (y, x) in enumerate(zip(ys, xs)):
        value_text = " ".join(f"{v:.9g}" for v in kd.values[row])
        lines.append(f"{x} {y} {value_text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_known(path: str | Path) -> KnownData:
    """Parse a TONAL file; rejects empty, duplicate, or out-of-range entries."""
    text = Path(path).read_text(encoding="ascii")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty TONAL file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "TONAL":
        raise ValueError(f"malformed TONAL header: {lines[0]!r}")
    n_x, n_y, channels, count = (int(tok) for tok in header[1:])
    if channels not in (1, 3):
        raise ValueError(f"TONAL channels must be 1 or 3, got {channels}")
    if count < 1:
        raise ValueError("TONAL file declares no known pixels (empty mask)")
    if len(lines) - 1 != count:
        raise ValueError(f"header announces {count} pixels, file has {len(lines) - 1}")

    mask_values = np.zeros((n_y, n_x))
    coords = []
    values = np.empty((count, channels))
    for row, line in enumerate(lines[1:]):
        fields = line.split()
        if len(fields) != 2 + channels:
            raise ValueError(f"TONAL line {row + 2}: expected {2 + channels} fields")
        x, y = int(fields[0]), int(fields[1])
        if not (0 <= x < n_x and 0 <= y < n_y):
            raise ValueError(f"TONAL line {row + 2}: coordinate ({x}, {y}) out of range")
        if mask_values[y, x] != 0.0:
            raise ValueError(f"TONAL line {row + 2}: duplicate coordinate ({x}, {y})")
        mask_values[y, x] = 1.0
        coords.append((x, y))
        values[row] = [float(tok) for tok in fields[2:]]

    mask = Mask(values=mask_values, kind="binary")
    # Reorder the parsed values into row-major mask order.
    ys, xs = np.nonzero(mask.bool_array())
    ordering = {(int(x), int(y)): i for i, (y, x) in enumerate(zip(ys, xs))}
    ordered = np.empty_like(values)
    for row, (x, y) in enumerate(coords):
        ordered[ordering[(x, y)]] = values[row]
    return KnownData(mask=mask, values=ordered)
