"""Reconstruction quality metrics: PSNR, SAM, and ERGAS.

All three compare a reference cube X against a reconstruction Y of the
same shape. PSNR uses the mean squared error over every entry; SAM is the
mean per-pixel spectral angle in degrees; ERGAS aggregates per-band RMSE
normalized by the band means of the reconstruction and by the resolution
ratio 1/scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .validation import check_same_shape, cube_array


@dataclass
class MetricReport:
    """One evaluation of a reconstruction against its reference."""

    psnr: float
    sam_deg: float
    ergas: float
    scale: int
    sam_excluded_pixels: int = 0

    def to_json(self) -> str:
        payload = asdict(self)
        # json has no literal for infinity; a perfect match serializes as "inf"
        if math.isinf(payload["psnr"]):
            payload["psnr"] = "inf"
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        payload = json.loads(text)
        if payload.get("psnr") == "inf":
            payload["psnr"] = math.inf
        return cls(**payload)


def psnr(x, y, max_value: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for a perfect match."""
    x = cube_array(x)
    y = cube_array(y)
    check_same_shape(x, y, "cubes")
    if max_value <= 0:
        raise ValueError(f"max_value must be > 0, got {max_value}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_value * max_value / mse)


def sam_with_exclusions(x, y) -> tuple[float, int]:
    """Mean spectral angle in degrees plus the count of excluded pixels.

    Pixels where either spectrum has zero norm carry no angular
    information and are left out of the average (all-black pixels occur
    in synthetic phantoms).
    """
    x = cube_array(x)
    y = cube_array(y)
    check_same_shape(x, y, "cubes")
    nx = np.linalg.norm(x, axis=2)
    ny = np.linalg.norm(y, axis=2)
    valid = (nx > 0.0) & (ny > 0.0)
    excluded = int(valid.size - np.count_nonzero(valid))
    if excluded == valid.size:
        raise ValueError("every pixel has a zero-norm spectrum; SAM is undefined")
    # the half-angle form of arccos(<x,y>/(|x||y|)) stays exact for
    # identical spectra, where the naive cosine rounds past 1
    u = x[valid] / nx[valid, None]
    v = y[valid] / ny[valid, None]
    angles = 2.0 * np.arctan2(
        np.linalg.norm(u - v, axis=1), np.linalg.norm(u + v, axis=1)
    )
    return float(np.degrees(angles).mean()), excluded


def sam(x, y) -> float:
    """Mean spectral angle between corresponding pixel spectra, in degrees."""
    return sam_with_exclusions(x, y)[0]


def ergas(x, y, scale: int) -> float:
    """Relative dimensionless global error of the reconstruction y.

    Band means are taken from y; a zero band mean makes the ratio
    undefined and is rejected with the offending band index.
    """
    x = cube_array(x)
    y = cube_array(y)
    check_same_shape(x, y, "cubes")
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    rmse = np.sqrt(np.mean((x - y) ** 2, axis=(0, 1)))
    mu = y.mean(axis=(0, 1))
    zero = np.nonzero(mu == 0.0)[0]
    if zero.size:
        raise ValueError(f"band {int(zero[0])} of the reconstruction has zero mean")
    return 100.0 / scale * float(np.sqrt(np.mean((rmse / mu) ** 2)))


def evaluate(x, y, scale: int, max_value: float = 1.0) -> MetricReport:
    """Compute the full metric report for reconstruction y against reference x."""
    angle, excluded = sam_with_exclusions(x, y)
    return MetricReport(
        psnr=psnr(x, y, max_value),
        sam_deg=angle,
        ergas=ergas(x, y, scale),
        scale=int(scale),
        sam_excluded_pixels=excluded,
    )
