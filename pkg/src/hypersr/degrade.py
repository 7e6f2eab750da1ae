"""Spatial degradation operators: separable Gaussian blur and bicubic resampling.

The forward model mapping a high-resolution map to its low-resolution
observation is a Gaussian blur (kernel truncated to a total width of about
six standard deviations) followed by bicubic downsampling. The same Keys
bicubic kernel, evaluated polyphase at fractional source positions, also
provides the upsampler reused by the super-resolution network. Boundaries
are handled by mirror reflection about the edge sample everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import convolve1d

from sklearn.base import BaseEstimator, TransformerMixin

from .core import AbundanceMap, SpectralCube

# Keys cubic convolution parameter; -0.5 reproduces affine signals exactly.
KEYS_A = -0.5


@dataclass(frozen=True)
class DegradationSpec:
    """Scale factor and blur width of the simulated point spread function."""

    scale: int
    blur_sigma: float | None = None

    def __post_init__(self):
        if int(self.scale) != self.scale or self.scale < 2:
            raise ValueError(f"scale must be an integer >= 2, got {self.scale}")
        object.__setattr__(self, "scale", int(self.scale))
        sigma = float(self.scale) if self.blur_sigma is None else float(self.blur_sigma)
        if not sigma > 0:
            raise ValueError(f"blur_sigma must be > 0, got {sigma}")
        object.__setattr__(self, "blur_sigma", sigma)

    @property
    def kernel_radius(self) -> int:
        return int(math.ceil(3.0 * self.blur_sigma))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian taps on [-ceil(3*sigma), ceil(3*sigma)], normalized to sum 1."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _wrap(x):
    if isinstance(x, SpectralCube):
        return x.data, SpectralCube
    if isinstance(x, AbundanceMap):
        return x.data, AbundanceMap
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D or 3-D array, got shape {arr.shape}")
    return arr, None


def _rewrap(data, ctor):
    return data if ctor is None else ctor(data)


def blur(x, sigma: float):
    """Separable Gaussian blur per channel with mirror-reflect boundaries."""
    data, ctor = _wrap(x)
    kernel = gaussian_kernel(sigma)
    out = convolve1d(data, kernel, axis=0, mode="mirror")
    out = convolve1d(out, kernel, axis=1, mode="mirror")
    return _rewrap(out, ctor)


def _keys(x: np.ndarray) -> np.ndarray:
    """The Keys cubic convolution kernel with a = KEYS_A."""
    ax = np.abs(x)
    a = KEYS_A
    near = (a + 2.0) * ax**3 - (a + 3.0) * ax**2 + 1.0
    far = a * (ax**3 - 5.0 * ax**2 + 8.0 * ax - 4.0)
    return np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))


def _reflect_index(idx: np.ndarray, n: int) -> np.ndarray:
    """Fold indices into [0, n-1] by mirror reflection about the edge samples."""
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


@lru_cache(maxsize=128)
def resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) operator for 1-D bicubic resampling.

    Output sample i reads from source coordinate (i + 0.5) * n_in / n_out
    - 0.5 through four Keys taps; reflected taps accumulate, and each row
    is normalized to sum exactly 1.
    """
    if n_in < 1 or n_out < 1:
        raise ValueError("resampling requires positive sizes")
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    matrix = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for tap in range(-1, 3):
        weights = _keys(frac - tap)
        cols = _reflect_index(base + tap, n_in)
        np.add.at(matrix, (rows, cols), weights)
    matrix /= matrix.sum(axis=1, keepdims=True)
    matrix.setflags(write=False)
    return matrix


def _resample_plane(plane: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return (rows @ plane) @ cols.T


def bicubic_resample(x, out_height: int, out_width: int):
    """Resample spatially to (out_height, out_width) with the Keys kernel."""
    data, ctor = _wrap(x)
    if out_height < 1 or out_width < 1:
        raise ValueError("output dimensions must be >= 1")
    rows = resample_matrix(data.shape[0], out_height)
    cols = resample_matrix(data.shape[1], out_width)
    if data.ndim == 2:
        return _rewrap(_resample_plane(data, rows, cols), ctor)
    out = np.empty((out_height, out_width, data.shape[2]))
    for c in range(data.shape[2]):
        out[:, :, c] = _resample_plane(data[:, :, c], rows, cols)
    return _rewrap(out, ctor)


def upsample(x, scale: int):
    """Bicubic upsampling by an integer factor."""
    data, _ = _wrap(x)
    return bicubic_resample(x, data.shape[0] * scale, data.shape[1] * scale)


def degrade(x, spec: DegradationSpec):
    """Blur then bicubically downsample by spec.scale; channels stay independent."""
    data, _ = _wrap(x)
    h, w = data.shape[:2]
    if h % spec.scale or w % spec.scale:
        raise ValueError(
            f"spatial dims ({h}, {w}) must be divisible by the scale factor {spec.scale}"
        )
    return bicubic_resample(blur(x, spec.blur_sigma), h // spec.scale, w // spec.scale)


class Degrader(BaseEstimator, TransformerMixin):
    """Stateless transformer applying the blur + downsample forward model.

    Exists so the degradation step can sit inside an sklearn pipeline next
    to the unmixing and super-resolution estimators.
    """

    def __init__(self, scale=2, blur_sigma=None):
        self.scale = scale
        self.blur_sigma = blur_sigma

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return degrade(X, DegradationSpec(self.scale, self.blur_sigma))
