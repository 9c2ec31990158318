"""Command line entry point.

Subcommands: mask, inpaint, tonal, sweep, bench, corpus. Options may also be
supplied through a plain-text ``key=value`` config file (--config); explicit
flags take precedence. The environment variable INPAINT_OPT_THREADS caps
sweep parallelism (default 1).
"""
from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from pathlib import Path

from .harness import (
    HarnessOptions,
    run_bench,
    run_sweep,
    write_records_csv,
    write_summary_csv,
)
from .image import KnownData, load_image, load_mask, psnr, save_image, save_mask
from .solver import SolverParams, inpaint
from .spatial import (
    AnalyticFallbackWarning,
    NlpeParams,
    SparsifyParams,
    mask_analytic,
    mask_random,
    nlpe,
    sparsify,
)
from .synthetic import write_corpus
from .tonal import TonalParams, load_known, save_known, tonal_echo, tonal_lsq

_MASK_METHODS = ("random", "aa", "ps", "ps+nlpe")


def _read_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    config: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        config[key.strip().replace("-", "_")] = value.strip()
    return config


def _resolve(args: argparse.Namespace, config: dict[str, str], key: str, default, cast):
    value = getattr(args, key)
    if value is not None:
        return value
    if key in config:
        return cast(config[key])
    return default


def _parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    return [m.replace("+", "_") for m in methods]


def _parse_densities(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _cmd_mask(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    method = _resolve(args, config, "method", None, str)
    density = _resolve(args, config, "density", None, float)
    seed = _resolve(args, config, "seed", 0, int)
    if method not in _MASK_METHODS:
        raise ValueError(f"method must be one of {', '.join(_MASK_METHODS)}")
    if density is None or not 0.0 < density < 1.0:
        raise ValueError("density must lie in (0, 1)")

    img = load_image(args.input)
    solver = SolverParams(rel_tolerance=_resolve(args, config, "tolerance", 1e-6, float))

    start = time.perf_counter()
    if method == "random":
        mask = mask_random(img.n_x, img.n_y, density, seed)
    elif method == "aa":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            mask = mask_analytic(img, density, seed)
        if any(issubclass(w.category, AnalyticFallbackWarning) for w in caught):
            print("fallback=random")
    else:
        params = SparsifyParams(
            target_density=density,
            candidate_fraction=_resolve(args, config, "p", 0.02, float),
            return_fraction=_resolve(args, config, "q", 0.98, float),
            rng_seed=seed,
        )
        mask = sparsify(img, params, solver)
        if method == "ps+nlpe":
            nlpe_params = NlpeParams(
                cycles=_resolve(args, config, "cycles", 5, int),
                swap_size=_resolve(args, config, "swap_size", 1, int),
                rng_seed=seed,
            )
            mask = nlpe(img, mask, nlpe_params, solver)
    elapsed = time.perf_counter() - start

    save_mask(mask, args.out)
    print(f"density={mask.density():.6f} time_s={elapsed:.6f}")
    return 0


def _cmd_inpaint(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    img = load_image(args.input)
    mask = load_mask(args.mask)
    if (mask.n_y, mask.n_x) != (img.n_y, img.n_x):
        raise ValueError("image and mask dimensions differ")

    if args.tonal is not None:
        known = load_known(args.tonal)
        if known.mask.values.shape != mask.values.shape or not (
            known.mask.values == mask.values
        ).all():
            raise ValueError("TONAL file pixels do not match the mask file")
        if known.channels != img.channels:
            raise ValueError("TONAL channel count does not match the image")
    else:
        known = KnownData.from_image(img, mask)

    solver = SolverParams(rel_tolerance=_resolve(args, config, "tolerance", 1e-6, float))
    reconstruction = inpaint(known, solver)
    if args.out is not None:
        save_image(reconstruction, args.out)
    value = psnr(reconstruction, img)
    print(f"psnr={'inf' if value == float('inf') else f'{value:.6f}'}")
    return 0


def _cmd_tonal(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    method = _resolve(args, config, "method", "lsq", str)
    img = load_image(args.input)
    mask = load_mask(args.mask)
    params = TonalParams(
        method=method,
        outer_tolerance=_resolve(args, config, "outer_tolerance", 1e-4, float),
        echo_sweeps=_resolve(args, config, "sweeps", 50, int),
        rng_seed=_resolve(args, config, "seed", 0, int),
        solver=SolverParams(rel_tolerance=_resolve(args, config, "tolerance", 1e-6, float)),
    )
    start = time.perf_counter()
    known = tonal_lsq(img, mask, params) if method == "lsq" else tonal_echo(img, mask, params)
    elapsed = time.perf_counter() - start
    save_known(known, args.out)
    print(f"time_s={elapsed:.6f}")
    return 0


def _harness_options(args: argparse.Namespace, config: dict[str, str]) -> HarnessOptions:
    neural_dir = _resolve(args, config, "neural_dir", None, str)
    return HarnessOptions(
        candidate_fraction=_resolve(args, config, "p", 0.02, float),
        return_fraction=_resolve(args, config, "q", 0.98, float),
        cycles=_resolve(args, config, "cycles", 5, int),
        swap_size=_resolve(args, config, "swap_size", 1, int),
        echo_sweeps=_resolve(args, config, "sweeps", 50, int),
        rel_tolerance=_resolve(args, config, "tolerance", 1e-6, float),
        outer_tolerance=_resolve(args, config, "outer_tolerance", 1e-4, float),
        neural_dir=Path(neural_dir) if neural_dir else None,
    )


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    image_dir = Path(args.images)
    paths = sorted(
        p for p in image_dir.iterdir()
        if p.suffix.lower() in (".pgm", ".ppm") and p.is_file()
    )
    if not paths:
        raise ValueError(f"no PGM/PPM images in {image_dir}")
    methods = _parse_methods(_resolve(args, config, "methods", "random,aa", str))
    densities = _parse_densities(_resolve(args, config, "densities", "0.1", str))
    seed = _resolve(args, config, "seed", 0, int)
    threads = int(os.environ.get("INPAINT_OPT_THREADS", "1"))

    result = run_sweep(
        paths, methods, densities, seed,
        options=_harness_options(args, config),
        threads=max(1, threads),
        log=lambda message: print(message, file=sys.stderr),
    )
    csv_path = Path(args.csv)
    write_records_csv(result.records, csv_path)
    write_summary_csv(result.records, csv_path.parent / "summary.csv")
    print(f"rows={len(result.records)} failures={len(result.failures)} csv={csv_path}")
    return 1 if result.failures else 0


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    img = load_image(args.input)
    methods = _parse_methods(_resolve(args, config, "methods", "random,aa", str))
    densities = _parse_densities(_resolve(args, config, "densities", "0.1", str))
    records = run_bench(
        img, Path(args.input).stem, methods, densities,
        repeats=_resolve(args, config, "repeats", 3, int),
        base_seed=_resolve(args, config, "seed", 0, int),
        options=_harness_options(args, config),
    )
    write_records_csv(records, args.csv)
    print(f"rows={len(records)} csv={args.csv}")
    return 0


def _cmd_corpus(args: argparse.Namespace) -> int:
    paths = write_corpus(args.out, size=args.size)
    print(f"wrote {len(paths)} images to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inpaint-opt",
        description="Sparse-data optimisation for homogeneous diffusion inpainting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mask = sub.add_parser("mask", help="generate an inpainting mask")
    mask.add_argument("--method", choices=_MASK_METHODS)
    mask.add_argument("--input", required=True, help="source PGM/PPM image")
    mask.add_argument("--density", type=float)
    mask.add_argument("--seed", type=int)
    mask.add_argument("--out", required=True, help="output mask PGM")
    mask.add_argument("--p", type=float, help="sparsification candidate fraction")
    mask.add_argument("--q", type=float, help="sparsification return fraction")
    mask.add_argument("--cycles", type=int, help="pixel exchange cycles")
    mask.add_argument("--swap-size", dest="swap_size", type=int)
    mask.add_argument("--tolerance", type=float, help="solver relative residual")
    mask.add_argument("--config", help="key=value defaults file")
    mask.set_defaults(handler=_cmd_mask)

    inp = sub.add_parser("inpaint", help="inpaint an image from a mask")
    inp.add_argument("--input", required=True)
    inp.add_argument("--mask", required=True)
    inp.add_argument("--tonal", help="TONAL file with optimised values")
    inp.add_argument("--out", help="output reconstruction PGM/PPM")
    inp.add_argument("--tolerance", type=float)
    inp.add_argument("--config")
    inp.set_defaults(handler=_cmd_inpaint)

    tonal = sub.add_parser("tonal", help="optimise tonal values for a mask")
    tonal.add_argument("--input", required=True)
    tonal.add_argument("--mask", required=True)
    tonal.add_argument("--method", choices=("lsq", "echo"))
    tonal.add_argument("--out", required=True, help="output TONAL file")
    tonal.add_argument("--sweeps", type=int, help="echo sweeps")
    tonal.add_argument("--tolerance", type=float)
    tonal.add_argument("--outer-tolerance", dest="outer_tolerance", type=float)
    tonal.add_argument("--seed", type=int)
    tonal.add_argument("--config")
    tonal.set_defaults(handler=_cmd_tonal)

    sweep = sub.add_parser("sweep", help="run a density sweep over an image directory")
    sweep.add_argument("--images", required=True, help="directory of PGM/PPM images")
    sweep.add_argument("--methods", help="comma list, e.g. random,aa,ps,ps+nlpe,tonal_lsq")
    sweep.add_argument("--densities", help="comma list of fractions, e.g. 0.01,0.05,0.1")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--csv", required=True, help="output CSV (summary.csv written beside it)")
    sweep.add_argument("--neural-dir", dest="neural_dir",
                       help="directory of exported masknet/tonalnet files")
    sweep.add_argument("--p", type=float)
    sweep.add_argument("--q", type=float)
    sweep.add_argument("--cycles", type=int)
    sweep.add_argument("--swap-size", dest="swap_size", type=int)
    sweep.add_argument("--sweeps", type=int)
    sweep.add_argument("--tolerance", type=float)
    sweep.add_argument("--outer-tolerance", dest="outer_tolerance", type=float)
    sweep.add_argument("--config")
    sweep.set_defaults(handler=_cmd_sweep)

    bench = sub.add_parser("bench", help="repeat optimisation stages and record timings")
    bench.add_argument("--input", required=True)
    bench.add_argument("--methods")
    bench.add_argument("--densities")
    bench.add_argument("--repeats", type=int)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--csv", required=True)
    bench.add_argument("--neural-dir", dest="neural_dir")
    bench.add_argument("--p", type=float)
    bench.add_argument("--q", type=float)
    bench.add_argument("--cycles", type=int)
    bench.add_argument("--swap-size", dest="swap_size", type=int)
    bench.add_argument("--sweeps", type=int)
    bench.add_argument("--tolerance", type=float)
    bench.add_argument("--outer-tolerance", dest="outer_tolerance", type=float)
    bench.add_argument("--config")
    bench.set_defaults(handler=_cmd_bench)

    corpus = sub.add_parser("corpus", help="write the bundled synthetic test images")
    corpus.add_argument("--out", required=True)
    corpus.add_argument("--size", type=int, default=64)
    corpus.set_defaults(handler=_cmd_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
