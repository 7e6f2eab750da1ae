"""Command-line interface.

Subcommands: unmix, gen-dl, degrade, train, sr, reconstruct, eval,
phantom, pipeline. Exit codes: 0 success, 2 usage or validation error,
3 data-format error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import AbundanceMap, DataFormatError, NumericalError, reconstruct
from .deadleaves import GeneratorConfig, generate_dataset, load_dataset
from .degrade import DegradationSpec, bicubic_resample, degrade
from .io import (
    load_abundance,
    load_cube,
    load_endmembers,
    pair_kind,
    save_abundance,
    save_cube,
    save_endmembers,
)
from .metrics import evaluate
from .noise import NoiseConfig
from .phantom import make_phantom
from .pipeline import PipelineConfig, run_pipeline
from .srnet import TrainConfig, load_checkpoint, save_checkpoint, super_resolve, train_network
from .unmixing import decompose_pca, estimate_abundances_ls, extract_endmembers_minvol

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_NUMERIC = 4


def _say(args, msg):
    if not args.quiet:
        print(msg)


def cmd_unmix(args) -> int:
    cube = load_cube(args.cube)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.backend == "minvol":
        endmembers = extract_endmembers_minvol(cube, args.materials)
        abundance = estimate_abundances_ls(cube, endmembers)
        save_endmembers(endmembers, out / "endmembers.csv")
        np.savetxt(out / "endmembers_pinv.csv", endmembers.pinv, delimiter=",", fmt="%.17g")
        save_abundance(abundance, out / "a_lr")
        _say(args, f"wrote endmembers.csv, endmembers_pinv.csv, a_lr.(json|raw) to {out}")
    else:
        components, coefficients, mean = decompose_pca(cube, args.materials)
        np.savetxt(out / "components.csv", components, delimiter=",", fmt="%.17g")
        np.savetxt(out / "mean_spectrum.csv", mean[None, :], delimiter=",", fmt="%.17g")
        save_abundance(coefficients, out / "coefficients")
        _say(args, f"wrote components.csv, mean_spectrum.csv, coefficients.(json|raw) to {out}")
    return EXIT_OK


def cmd_gen_dl(args) -> int:
    config = GeneratorConfig(
        height=args.height,
        width=args.width,
        materials=args.materials,
        scale_factor=args.scale,
        value_mode=args.value_mode,
        seed=args.seed if args.seed is not None else 0,
        noisy_fraction=args.noisy_fraction,
    )
    source = load_abundance(args.source) if args.source else None
    spec = DegradationSpec(args.scale, args.sigma)
    meta = generate_dataset(config, spec, args.n, args.out, source=source)
    _say(args, f"wrote {meta['n']} pairs to {args.out}")
    return EXIT_OK


def cmd_degrade(args) -> int:
    spec = DegradationSpec(args.scale, args.sigma)
    if pair_kind(args.input) == "cube":
        save_cube(degrade(load_cube(args.input), spec), args.out)
    else:
        save_abundance(degrade(load_abundance(args.input), spec), args.out)
    _say(args, f"wrote {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    meta, samples = load_dataset(args.dataset)
    pinv = None
    if args.pinv:
        pinv = np.loadtxt(args.pinv, delimiter=",", ndmin=2)
    noise = NoiseConfig(sigma_max=args.sigma_max, lam=args.lam, mode=args.noise_mode)
    seed = args.seed if args.seed is not None else 0
    train_config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        patch_size=args.patch_size,
        learning_rate=args.learning_rate,
        seed=seed,
    )
    progress = None if args.quiet else (lambda e: print(f"epoch {e['epoch']} mean_l1 {e['mean_l1']:.6f}"))
    params, log = train_network(
        samples,
        meta["scale"],
        train_config,
        noise,
        pinv=pinv,
        n_filters=args.filters,
        n_blocks=args.blocks,
        progress=progress,
    )
    hyper = {
        "scale": meta["scale"],
        "n_materials": meta["materials"],
        "n_filters": args.filters,
        "n_blocks": args.blocks,
        "noise_mode": noise.mode,
        "sigma_max": noise.sigma_max,
        "lam": noise.lam,
        "seed": seed,
        "epochs": train_config.epochs,
        "patch_size": train_config.patch_size,
        "learning_rate": train_config.learning_rate,
    }
    save_checkpoint(args.out, params, hyper)
    log_path = Path(args.out).with_suffix(".log.jsonl")
    with open(log_path, "w") as fh:
        for entry in log:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    _say(args, f"wrote checkpoint {args.out} and {log_path}")
    return EXIT_OK


def cmd_sr(args) -> int:
    params, hyper = load_checkpoint(args.checkpoint)
    a_lr = load_abundance(args.abundance)
    a_sr = super_resolve(params, a_lr, args.sigma, hyper["scale"])
    save_abundance(AbundanceMap(a_sr), args.out)
    _say(args, f"wrote {args.out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    abundance = load_abundance(args.abundance)
    endmembers = load_endmembers(args.endmembers)
    save_cube(reconstruct(abundance, endmembers), args.out)
    _say(args, f"wrote {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    report = evaluate(load_cube(args.reference), load_cube(args.test), args.scale)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_phantom(args) -> int:
    phantom = make_phantom(
        height=args.height,
        width=args.width,
        n_bands=args.bands,
        n_materials=args.materials,
        scale=args.scale,
        seed=args.seed if args.seed is not None else 0,
    )
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    save_cube(phantom.cube_hr, out / "hsi_hr")
    save_cube(phantom.cube_lr, out / "hsi_lr")
    save_abundance(phantom.abundance_hr, out / "a_hr_gt")
    save_endmembers(phantom.endmembers, out / "s_gt.csv")
    _say(args, f"wrote hsi_hr, hsi_lr, a_hr_gt, s_gt.csv to {out}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    raw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
    # explicit flags override config-file fields
    if args.cube is not None:
        raw["input_cube"] = args.cube
    if args.out is not None:
        raw["out_dir"] = args.out
    if args.reference is not None:
        raw["reference_cube"] = args.reference
    if args.scale is not None:
        raw["scale"] = args.scale
    if args.materials is not None:
        raw["materials"] = args.materials
    if args.n is not None:
        raw["dataset_size"] = args.n
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.noise_mode is not None:
        raw.setdefault("noise", {})["mode"] = args.noise_mode
    if args.epochs is not None:
        raw.setdefault("training", {})["epochs"] = args.epochs
    if "input_cube" not in raw or "out_dir" not in raw:
        raise ValueError("pipeline needs an input cube and an output directory")
    config = PipelineConfig.from_dict(raw)
    manifest = run_pipeline(config, progress=None if args.quiet else (lambda m: print(m)))
    if manifest["metrics"] is not None:
        print(json.dumps(manifest["metrics"], sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypersr",
        description="Hyperspectral super-resolution via unmixing and synthetic abundances",
    )
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    parser.add_argument("--config", default=None, help="JSON config file (pipeline)")
    parser.add_argument("--out", default=None, help="output file or directory")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("unmix", help="extract endmembers and abundances from a cube")
    p.add_argument("cube")
    p.add_argument("--materials", "-m", type=int, required=True)
    p.add_argument("--backend", choices=("minvol", "pca"), default="minvol")
    p.set_defaults(func=cmd_unmix)

    p = sub.add_parser("gen-dl", help="generate a synthetic abundance dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--materials", type=int, required=True)
    p.add_argument("--value-mode", choices=("empirical", "dirichlet"), default="empirical")
    p.add_argument("--source", default=None, help="abundance file for the empirical sampler")
    p.add_argument("--sigma", type=float, default=None, help="blur sigma (default: scale)")
    p.add_argument("--noisy-fraction", type=float, default=0.5)
    p.set_defaults(func=cmd_gen_dl)

    p = sub.add_parser("degrade", help="blur and downsample a cube or abundance map")
    p.add_argument("input")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("train", help="train the super-resolution network on a dataset")
    p.add_argument("dataset")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--patch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--filters", type=int, default=32)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--noise-mode", choices=("clean", "noisy", "halfmix", "stdaware"),
                   default="stdaware")
    p.add_argument("--sigma-max", type=float, default=1e-3)
    p.add_argument("--lambda", dest="lam", type=float, default=2000.0)
    p.add_argument("--pinv", default=None, help="endmember pseudo-inverse CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sr", help="super-resolve an abundance map with a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("abundance")
    p.add_argument("--sigma", type=float, default=0.0, help="noise level hint")
    p.set_defaults(func=cmd_sr)

    p = sub.add_parser("reconstruct", help="mix abundances and endmembers into a cube")
    p.add_argument("abundance")
    p.add_argument("endmembers")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("eval", help="PSNR / SAM / ERGAS of a reconstruction")
    p.add_argument("reference")
    p.add_argument("test")
    p.add_argument("--scale", type=int, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("phantom", help="generate a synthetic ground-truth scene")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--bands", type=int, required=True)
    p.add_argument("--materials", type=int, required=True)
    p.add_argument("--scale", type=int, required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("pipeline", help="run the full unmix/train/super-resolve flow")
    p.add_argument("--cube", default=None, help="input low-resolution cube")
    p.add_argument("--reference", default=None, help="high-resolution reference cube")
    p.add_argument("--scale", type=int, default=None)
    p.add_argument("--materials", type=int, default=None)
    p.add_argument("--n", type=int, default=None, help="dataset size")
    p.add_argument("--noise-mode", choices=("clean", "noisy", "halfmix", "stdaware"), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


_REQUIRED_OUT = {"gen-dl", "degrade", "train", "sr", "reconstruct"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in _REQUIRED_OUT and not args.out:
        parser.error(f"{args.command} requires --out")
    try:
        return args.func(args)
    except DataFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except NumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
