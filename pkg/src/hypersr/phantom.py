"""Synthetic ground-truth scenes for end-to-end verification.

A phantom is a cube built from known smooth spectra mixed with a
dead-leaves abundance map, with one guaranteed pure pixel per material so
blind endmember extraction has an exactly recoverable answer. The paired
low-resolution cube is the blur + downsample degradation of the
high-resolution one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AbundanceMap, EndmemberMatrix, NumericalError, SpectralCube, reconstruct
from .deadleaves import GeneratorConfig, generate_abundance, make_value_source
from .degrade import DegradationSpec, degrade


@dataclass(frozen=True)
class Phantom:
    cube_hr: SpectralCube
    cube_lr: SpectralCube
    abundance_hr: AbundanceMap
    endmembers: EndmemberMatrix
    scale: int


def synthetic_spectra(n_materials: int, n_bands: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth per-material spectra: 2-3 Gaussian bumps rescaled into [0.05, 1]."""
    if n_materials > n_bands:
        raise ValueError(f"n_materials ({n_materials}) exceeds n_bands ({n_bands})")
    bands = np.arange(n_bands, dtype=np.float64)
    spectra = np.empty((n_materials, n_bands))
    for m in range(n_materials):
        n_bumps = int(rng.integers(2, 4))
        s = np.zeros(n_bands)
        for _ in range(n_bumps):
            center = rng.uniform(0, n_bands)
            width = rng.uniform(n_bands / 10.0, n_bands / 3.0)
            amp = rng.uniform(0.3, 1.0)
            s += amp * np.exp(-((bands - center) ** 2) / (2.0 * width * width))
        lo, hi = s.min(), s.max()
        spectra[m] = 0.05 + 0.95 * (s - lo) / (hi - lo)
    return spectra


def make_phantom(
    height: int,
    width: int,
    n_bands: int,
    n_materials: int,
    scale: int,
    seed: int = 0,
) -> Phantom:
    """Build the four-piece ground truth: HR cube, LR cube, abundances, spectra."""
    root = np.random.SeedSequence(seed)
    spectra_seq, leaves_seq = root.spawn(2)

    # random smooth spectra are full rank almost surely; retry on the
    # freak draw that is not
    spectra_rng = np.random.default_rng(spectra_seq)
    endmembers = None
    for _ in range(10):
        try:
            endmembers = EndmemberMatrix(synthetic_spectra(n_materials, n_bands, spectra_rng))
            break
        except NumericalError:
            continue
    if endmembers is None:
        raise NumericalError("could not draw a full-rank spectra matrix")

    config = GeneratorConfig(
        height=height,
        width=width,
        materials=n_materials,
        scale_factor=scale,
        value_mode="dirichlet",
        seed=seed,
    )
    abundance = generate_abundance(
        config, make_value_source(config), np.random.default_rng(leaves_seq)
    ).data

    # reserve one exactly pure pixel per material, spread over the image
    for m in range(n_materials):
        r = (m + 1) * height // (n_materials + 1)
        c = (m + 1) * width // (n_materials + 1)
        abundance[r, c] = 0.0
        abundance[r, c, m] = 1.0

    abundance_hr = AbundanceMap(abundance)
    cube_hr = reconstruct(abundance_hr, endmembers)
    cube_lr = degrade(cube_hr, DegradationSpec(scale))
    return Phantom(
        cube_hr=cube_hr,
        cube_lr=cube_lr,
        abundance_hr=abundance_hr,
        endmembers=endmembers,
        scale=scale,
    )
