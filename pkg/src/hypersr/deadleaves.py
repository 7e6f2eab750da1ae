"""Synthetic abundance maps grown from randomly stacked rotated rectangles.

A map is produced by dropping opaque rectangular leaves until every pixel
is covered. Each new leaf only fills pixels that are still empty, so the
earliest leaf covering a pixel wins: later leaves slide underneath, which
is what makes the piecewise-constant occlusion statistics stationary. The
abundance vector carried by a leaf is either copied from a random pixel of
a real low-resolution abundance map (preserving its material statistics)
or drawn from a flat Dirichlet prior.

Datasets are written as ``meta.json`` plus ``hr_%05d`` / ``lr_%05d`` file
pairs; the low-resolution member of each pair is the blur + downsample
degradation of the high-resolution one. Noise is never baked into the
files, only flagged, so a single dataset serves every training mode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import AbundanceMap, NumericalError
from .degrade import DegradationSpec, degrade
from .io import load_abundance, save_abundance
from .validation import abundance_array

VALUE_MODES = ("empirical", "dirichlet")

# Generation is almost surely finite; this cap only turns a runaway
# configuration into a diagnosable error.
LEAF_CAP = 1_000_000


@dataclass(frozen=True)
class Leaf:
    """One rectangle: side lengths, rotation (degrees), value vector, center."""

    a: float
    b: float
    theta: float
    v: np.ndarray
    x: float
    y: float


@dataclass(frozen=True)
class GeneratorConfig:
    """Geometry and sampling choices for one synthetic abundance map."""

    height: int
    width: int
    materials: int
    scale_factor: int
    value_mode: str = "empirical"
    seed: int = 0
    noisy_fraction: float = 0.5

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("height and width must be >= 1")
        if self.materials < 1:
            raise ValueError("materials must be >= 1")
        if self.scale_factor < 1:
            raise ValueError("scale_factor must be >= 1")
        if self.value_mode not in VALUE_MODES:
            raise ValueError(f"value_mode must be one of {VALUE_MODES}, got {self.value_mode!r}")
        if not 0.0 <= self.noisy_fraction <= 1.0:
            raise ValueError(f"noisy_fraction must be in [0, 1], got {self.noisy_fraction}")
        if self.size_interval[0] > self.size_interval[1]:
            raise ValueError(
                f"empty leaf-size interval [{self.size_interval[0]}, {self.size_interval[1]}]: "
                "min(height, width)/3 must be >= 2 * scale_factor"
            )
        if self.height % self.scale_factor or self.width % self.scale_factor:
            raise ValueError("height and width must be divisible by scale_factor")

    @property
    def size_interval(self) -> tuple[float, float]:
        return 2.0 * self.scale_factor, min(self.height, self.width) / 3.0


def value_sampler_empirical(source, rng: np.random.Generator) -> np.ndarray:
    """Abundance vector of a uniformly chosen source pixel, clamped to [0, 1]."""
    data = source.data if isinstance(source, AbundanceMap) else source
    h, w = data.shape[:2]
    idx = rng.integers(h * w)
    return np.clip(data.reshape(-1, data.shape[2])[idx], 0.0, 1.0)


def value_sampler_dirichlet(n_materials: int, rng: np.random.Generator) -> np.ndarray:
    """Point drawn uniformly on the unit simplex (normalized exponentials)."""
    if n_materials < 1:
        raise ValueError("n_materials must be >= 1")
    draws = rng.standard_exponential(n_materials)
    return draws / draws.sum()


def make_value_source(config: GeneratorConfig, source=None):
    """Bind the configured value mode to a ``sampler(rng) -> vector`` callable."""
    if config.value_mode == "empirical":
        if source is None:
            raise ValueError("empirical value mode requires a source abundance map")
        data = abundance_array(source)
        if data.shape[2] != config.materials:
            raise ValueError(
                f"source has {data.shape[2]} materials, config expects {config.materials}"
            )
        return lambda rng: value_sampler_empirical(data, rng)
    return lambda rng: value_sampler_dirichlet(config.materials, rng)


def sample_leaf(config: GeneratorConfig, value_source, rng: np.random.Generator) -> Leaf:
    """Draw one leaf. The draw order (a, b, theta, x, y, v) is part of the
    determinism contract for seeded generation."""
    lo, hi = config.size_interval
    a = rng.uniform(lo, hi)
    b = rng.uniform(lo, hi)
    theta = rng.uniform(0.0, 45.0)
    x = rng.uniform(0.0, config.width)
    y = rng.uniform(0.0, config.height)
    return Leaf(a=a, b=b, theta=theta, v=np.asarray(value_source(rng), dtype=np.float64), x=x, y=y)


def _leaf_mask(leaf: Leaf, height: int, width: int):
    """Pixels covered by the leaf, as a bounding-box slice plus a boolean mask.

    A pixel (row r, col c) belongs to the leaf iff its center (c, r),
    rotated by -theta about the leaf center, falls inside the axis-aligned
    a x b box. Leaves may extend outside the image and are clipped.
    """
    half_diag = 0.5 * math.hypot(leaf.a, leaf.b)
    r0 = max(0, math.floor(leaf.y - half_diag))
    r1 = min(height - 1, math.ceil(leaf.y + half_diag))
    c0 = max(0, math.floor(leaf.x - half_diag))
    c1 = min(width - 1, math.ceil(leaf.x + half_diag))
    if r0 > r1 or c0 > c1:
        return None
    rows = np.arange(r0, r1 + 1, dtype=np.float64)[:, None] - leaf.y
    cols = np.arange(c0, c1 + 1, dtype=np.float64)[None, :] - leaf.x
    t = math.radians(leaf.theta)
    ct, st = math.cos(t), math.sin(t)
    u = ct * cols + st * rows
    w = -st * cols + ct * rows
    inside = (np.abs(u) <= leaf.a / 2.0) & (np.abs(w) <= leaf.b / 2.0)
    return (slice(r0, r1 + 1), slice(c0, c1 + 1)), inside


def generate_abundance(config: GeneratorConfig, value_source, rng: np.random.Generator) -> AbundanceMap:
    """Grow one high-resolution abundance map until every pixel is covered."""
    out = np.zeros((config.height, config.width, config.materials))
    covered = np.zeros((config.height, config.width), dtype=bool)
    remaining = config.height * config.width
    n_leaves = 0
    while remaining:
        leaf = sample_leaf(config, value_source, rng)
        n_leaves += 1
        if n_leaves > LEAF_CAP:
            raise NumericalError(
                f"dead-leaves generation did not terminate within {LEAF_CAP} leaves "
                f"({remaining} of {config.height * config.width} pixels uncovered)"
            )
        located = _leaf_mask(leaf, config.height, config.width)
        if located is None:
            continue
        window, inside = located
        fresh = inside & ~covered[window]
        count = int(np.count_nonzero(fresh))
        if count:
            out[window][fresh] = leaf.v
            covered[window] |= inside
            remaining -= count
    return AbundanceMap(out)


def generate_pair(
    config: GeneratorConfig,
    value_source,
    spec: DegradationSpec,
    rng: np.random.Generator,
) -> tuple[AbundanceMap, AbundanceMap]:
    """One (high-resolution, low-resolution) synthetic training pair."""
    if spec.scale != config.scale_factor:
        raise ValueError(
            f"degradation scale {spec.scale} does not match config scale {config.scale_factor}"
        )
    hr = generate_abundance(config, value_source, rng)
    return hr, degrade(hr, spec)


def noisy_flag(index: int, fraction: float) -> bool:
    """Deterministic per-index flag spreading the noisy fraction evenly.

    Exactly floor(n * fraction) of the first n indices are flagged; at
    fraction 0.5 this flags the odd indices.
    """
    return math.floor((index + 1) * fraction) - math.floor(index * fraction) >= 1


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible stream for sample ``index`` of a dataset."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def generate_dataset(
    config: GeneratorConfig,
    spec: DegradationSpec,
    n: int,
    out_dir,
    source=None,
) -> dict:
    """Write ``n`` synthetic pairs plus ``meta.json`` under ``out_dir``.

    Sample i is generated from a child seed derived from (config.seed, i),
    so any subset of the dataset can be reproduced independently.
    """
    if n < 1:
        raise ValueError(f"dataset size must be >= 1, got {n}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    value_source = make_value_source(config, source)
    flags = [noisy_flag(i, config.noisy_fraction) for i in range(n)]
    for i in range(n):
        try:
            hr, lr = generate_pair(config, value_source, spec, sample_rng(config.seed, i))
            save_abundance(hr, out_dir / f"hr_{i:05d}")
            save_abundance(lr, out_dir / f"lr_{i:05d}")
        except OSError as e:
            raise OSError(f"failed writing dataset sample {i}: {e}") from e
    meta = {
        "n": n,
        "height": config.height,
        "width": config.width,
        "materials": config.materials,
        "scale": spec.scale,
        "blur_sigma": spec.blur_sigma,
        "value_mode": config.value_mode,
        "seed": config.seed,
        "noisy_fraction": config.noisy_fraction,
        "flags": flags,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return meta


def load_dataset(dataset_dir) -> tuple[dict, list[tuple[np.ndarray, np.ndarray, bool]]]:
    """Read a dataset directory back as (meta, [(lr, hr, noisy_flag), ...])."""
    dataset_dir = Path(dataset_dir)
    meta = json.loads((dataset_dir / "meta.json").read_text())
    samples = []
    for i in range(meta["n"]):
        hr = load_abundance(dataset_dir / f"hr_{i:05d}")
        lr = load_abundance(dataset_dir / f"lr_{i:05d}")
        samples.append((lr.data, hr.data, bool(meta["flags"][i])))
    return meta, samples
