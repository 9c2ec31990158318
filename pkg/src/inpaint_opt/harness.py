"""Experiment orchestration: density sweeps, timing, CSV emission.

Wall times cover the optimisation stage only (mask generation or tonal
solve); image I/O and the evaluation inpainting are excluded. Each
(image, method, density) triple derives its own seed from the base seed, so
results are reproducible regardless of execution order or thread count.
"""
from __future__ import annotations

import csv
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .image import Image, KnownData, Mask, load_image, load_mask, psnr
from .solver import SolverParams, inpaint
from .spatial import NlpeParams, SparsifyParams, mask_analytic, mask_random, nlpe, sparsify
from .tonal import TonalParams, load_known, tonal_echo, tonal_lsq

METHODS = ("random", "aa", "ps", "ps_nlpe", "masknet", "tonal_lsq", "tonal_echo", "tonalnet")

CSV_COLUMNS = ("image", "method", "density", "psnr", "time_s", "seed")


@dataclass(frozen=True)
class RunRecord:
    """One benchmark measurement."""

    image: str
    method: str
    density: float
    psnr: float
    wall_time: float
    seed: int

    def row(self) -> list[str]:
        return [
            self.image,
            self.method,
            f"{self.density:g}",
            repr(self.psnr) if self.psnr != float("inf") else "inf",
            f"{self.wall_time:.6f}",
            str(self.seed),
        ]


@dataclass(frozen=True)
class HarnessOptions:
    """Tunables shared by the sweep and bench engines."""

    candidate_fraction: float = 0.02
    return_fraction: float = 0.98
    cycles: int = 5
    swap_size: int = 1
    echo_sweeps: int = 50
    rel_tolerance: float = 1e-6
    outer_tolerance: float = 1e-4
    neural_dir: Path | None = None

    def solver(self) -> SolverParams:
        return SolverParams(rel_tolerance=self.rel_tolerance)


def derive_seed(base: int, image_id: str, method: str, density: float) -> int:
    """Stable per-run seed: identical inputs always map to the same stream."""
    tag = f"{base}|{image_id}|{method}|{density:g}".encode()
    return zlib.crc32(tag) & 0x7FFFFFFF


def density_tag(density: float) -> str:
    """File-name tag for a density, in percent: 0.1 -> '10', 0.025 -> '2.5'."""
    return f"{density * 100:g}"


def _neural_path(neural_dir: Path | None, image_id: str, method: str, density: float,
                 suffix: str) -> Path:
    if neural_dir is None:
        raise ValueError(f"method {method} requires --neural-dir")
    path = Path(neural_dir) / f"{image_id}_{method}_{density_tag(density)}{suffix}"
    if not path.exists():
        raise FileNotFoundError(f"missing neural export {path}")
    return path


def run_single(f: Image, image_id: str, method: str, density: float, seed: int,
               options: HarnessOptions = HarnessOptions()) -> RunRecord:
    """Run one (image, method, density) cell and measure the optimisation time."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    solver = options.solver()
    tonal_values: KnownData | None = None

    start = time.perf_counter()
    if method == "random":
        mask = mask_random(f.n_x, f.n_y, density, seed)
    elif method == "aa":
        mask = mask_analytic(f, density, seed)
    elif method in ("ps", "ps_nlpe"):
        mask = sparsify(f, SparsifyParams(
            target_density=density,
            candidate_fraction=options.candidate_fraction,
            return_fraction=options.return_fraction,
            rng_seed=seed,
        ), solver)
        if method == "ps_nlpe":
            mask = nlpe(f, mask, NlpeParams(
                cycles=options.cycles, swap_size=options.swap_size, rng_seed=seed,
            ), solver)
    elif method in ("tonal_lsq", "tonal_echo"):
        # Tonal methods optimise values on a density-exact random mask, so
        # the timed stage is the tonal solve alone.
        mask = mask_random(f.n_x, f.n_y, density, seed)
        start = time.perf_counter()
        params = TonalParams(
            method="lsq" if method == "tonal_lsq" else "echo",
            outer_tolerance=options.outer_tolerance,
            echo_sweeps=options.echo_sweeps,
            rng_seed=seed,
            solver=solver,
        )
        optimiser = tonal_lsq if method == "tonal_lsq" else tonal_echo
        tonal_values = optimiser(f, mask, params)
    elif method == "masknet":
        mask = load_mask(_neural_path(options.neural_dir, image_id, method, density, ".pgm"))
        start = time.perf_counter()  # optimisation happened out of process
    else:  # tonalnet
        tonal_values = load_known(
            _neural_path(options.neural_dir, image_id, method, density, ".tonal"))
        mask = tonal_values.mask
        start = time.perf_counter()
    elapsed = time.perf_counter() - start

    known = tonal_values if tonal_values is not None else KnownData.from_image(f, mask)
    reconstruction = inpaint(known, solver)
    return RunRecord(
        image=image_id,
        method=method,
        density=density,
        psnr=psnr(reconstruction, f),
        wall_time=elapsed,
        seed=seed,
    )


@dataclass
class SweepResult:
    records: list[RunRecord] = field(default_factory=list)
    failures: list[tuple[str, str, float, str]] = field(default_factory=list)


def run_sweep(image_paths: list[Path], methods: list[str], densities: list[float],
              base_seed: int, options: HarnessOptions = HarnessOptions(),
              threads: int = 1, log=None) -> SweepResult:
    """Evaluate every image x method x density cell.

    Per-cell failures are logged and skipped; the sweep continues. Records
    come back sorted by (image, method, density) independent of scheduling.
    """
    images = [(Path(p).stem, load_image(p)) for p in sorted(image_paths)]
    cells = [
        (image_id, img, method, density)
        for image_id, img in images
        for method in methods
        for density in densities
    ]

    result = SweepResult()

    def work(cell):
        image_id, img, method, density = cell
        seed = derive_seed(base_seed, image_id, method, density)
        return run_single(img, image_id, method, density, seed, options)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda c: _guard(work, c), cells))
    else:
        outcomes = [_guard(work, cell) for cell in cells]

    for cell, outcome in zip(cells, outcomes):
        image_id, _, method, density = cell
        if isinstance(outcome, RunRecord):
            result.records.append(outcome)
        else:
            result.failures.append((image_id, method, density, outcome))
            if log is not None:
                log(f"error: image={image_id} method={method} density={density:g}: {outcome}")

    result.records.sort(key=lambda r: (r.image, r.method, r.density))
    return result


def _guard(fn, cell):
    try:
        return fn(cell)
    except Exception as exc:  # per-cell isolation: the sweep must continue
        return str(exc)


def write_records_csv(records: list[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.row())


def write_summary_csv(records: list[RunRecord], path: str | Path) -> None:
    """Mean PSNR per (method, density) over the images that succeeded."""
    groups: dict[tuple[str, float], list[float]] = {}
    for record in records:
        groups.setdefault((record.method, record.density), []).append(record.psnr)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "density", "mean_psnr", "images"])
        for (method, density), values in sorted(groups.items()):
            mean = sum(values) / len(values)
            writer.writerow([method, f"{density:g}", repr(mean), str(len(values))])


def run_bench(f: Image, image_id: str, methods: list[str], densities: list[float],
              repeats: int, base_seed: int,
              options: HarnessOptions = HarnessOptions()) -> list[RunRecord]:
    """Timing-focused repetition of the optimisation stages (sequential)."""
    records = []
    for method in methods:
        for density in densities:
            for repeat in range(repeats):
                seed = derive_seed(base_seed + repeat, image_id, method, density)
                records.append(run_single(f, image_id, method, density, seed, options))
    return records
