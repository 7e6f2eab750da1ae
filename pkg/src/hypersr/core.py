"""Core data containers and the linear mixing model.

Arrays follow a (row, col, channel) layout: cubes are (H, W, L) with L
spectral bands, abundance maps are (H, W, M) with M materials, and an
endmember matrix is (M, L) with one spectrum per row. All internal
arithmetic is float64; the on-disk formats store float32 (see
:mod:`hypersr.io`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class DataFormatError(Exception):
    """A file does not conform to the expected on-disk format."""


class NumericalError(Exception):
    """A numerical procedure failed (rank deficiency, non-termination, ...)."""


def _checked_grid(data, kind: str) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 3:
        raise ValueError(f"{kind} data must be 3-D (rows, cols, channels), got shape {data.shape}")
    if min(data.shape) < 1:
        raise ValueError(f"{kind} dimensions must all be >= 1, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{kind} contains non-finite values")
    return data


@dataclass(frozen=True, eq=False)
class SpectralCube:
    """A hyperspectral image stored as a (height, width, bands) float64 array."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _checked_grid(self.data, "cube"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class AbundanceMap:
    """Per-pixel material proportions stored as a (height, width, materials) array.

    Values are guaranteed to lie in [0, 1] only for maps produced by the
    dead-leaves generator; least-squares estimates are deliberately left
    unconstrained.
    """

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _checked_grid(self.data, "abundance map"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def materials(self) -> int:
        return self.data.shape[2]


# Relative singular-value cutoff below which a spectra matrix is rejected,
# and the condition-number limit beyond which the pseudo-inverse switches
# from normal equations to an SVD.
RANK_RTOL = 1e-10
_COND_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class EndmemberMatrix:
    """Endmember spectra, one material per row: shape (materials, bands)."""

    spectra: np.ndarray

    def __post_init__(self):
        spectra = np.asarray(self.spectra, dtype=np.float64)
        if spectra.ndim != 2:
            raise ValueError(f"endmember spectra must be 2-D (materials, bands), got shape {spectra.shape}")
        m, n_bands = spectra.shape
        if m < 1 or n_bands < 1:
            raise ValueError(f"endmember matrix dimensions must be >= 1, got shape {spectra.shape}")
        if m > n_bands:
            raise ValueError(f"more materials ({m}) than bands ({n_bands})")
        if not np.all(np.isfinite(spectra)):
            raise ValueError("endmember spectra contain non-finite values")
        row_norms = np.linalg.norm(spectra, axis=1)
        if np.any(row_norms == 0.0):
            raise ValueError("endmember spectra contain an all-zero row")
        sv = np.linalg.svd(spectra, compute_uv=False)
        if sv[-1] <= RANK_RTOL * sv[0]:
            raise NumericalError(
                f"endmember matrix is rank deficient (singular value ratio {sv[-1] / sv[0]:.3e})"
            )
        object.__setattr__(self, "spectra", spectra)

    @property
    def materials(self) -> int:
        return self.spectra.shape[0]

    @property
    def bands(self) -> int:
        return self.spectra.shape[1]

    @cached_property
    def pinv(self) -> np.ndarray:
        """Moore-Penrose pseudo-inverse, shape (bands, materials).

        Computed from the normal equations with a Cholesky solve, which is
        cheap and accurate for the small material counts used here; falls
        back to an SVD when the Gram matrix is badly conditioned.
        """
        gram = self.spectra @ self.spectra.T
        if np.linalg.cond(gram) > _COND_LIMIT:
            return np.linalg.pinv(self.spectra)
        factor = cho_factor(gram, lower=True)
        # S+ = S^T (S S^T)^-1
        return cho_solve(factor, self.spectra).T


def pseudo_inverse(endmembers: EndmemberMatrix) -> np.ndarray:
    """Return the (bands, materials) pseudo-inverse of the endmember matrix."""
    return endmembers.pinv


def reconstruct(abundances: AbundanceMap, endmembers: EndmemberMatrix) -> SpectralCube:
    """Mix abundances with endmember spectra into a cube.

    Every output spectrum is ``sum_m A(i, j, m) * S(m, :)``, the linear
    mixing model evaluated pixel by pixel.
    """
    if abundances.materials != endmembers.materials:
        raise ValueError(
            f"abundance materials ({abundances.materials}) do not match "
            f"endmember materials ({endmembers.materials})"
        )
    return SpectralCube(abundances.data @ endmembers.spectra)
