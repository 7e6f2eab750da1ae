"""Input validation helpers shared by the estimators and the functional API.

The estimators accept either plain numpy arrays or the typed containers
from :mod:`hypersr.core`; these helpers normalize both to float64 arrays.
"""

from __future__ import annotations

import numpy as np

from .core import AbundanceMap, EndmemberMatrix, SpectralCube


def as_grid(x, kind: str = "array") -> np.ndarray:
    """Coerce a cube/abundance container or array to a (H, W, C) float64 array."""
    if isinstance(x, (SpectralCube, AbundanceMap)):
        return x.data
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"{kind} must be 3-D (rows, cols, channels), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{kind} contains non-finite values")
    return arr


def cube_array(x) -> np.ndarray:
    return as_grid(x, "cube")


def abundance_array(x) -> np.ndarray:
    return as_grid(x, "abundance map")


def endmember_matrix(e) -> EndmemberMatrix:
    """Coerce an (M, L) array-like to an EndmemberMatrix (validating it)."""
    if isinstance(e, EndmemberMatrix):
        return e
    return EndmemberMatrix(np.asarray(e, dtype=np.float64))


def pinv_array(p, n_materials: int | None = None) -> np.ndarray:
    """Coerce an EndmemberMatrix or (L, M) array to a pseudo-inverse array."""
    if isinstance(p, EndmemberMatrix):
        arr = p.pinv
    else:
        arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"pseudo-inverse must be 2-D (bands, materials), got shape {arr.shape}")
    if n_materials is not None and arr.shape[1] != n_materials:
        raise ValueError(
            f"pseudo-inverse maps to {arr.shape[1]} materials, expected {n_materials}"
        )
    return arr


def check_same_shape(x: np.ndarray, y: np.ndarray, what: str = "inputs") -> None:
    if x.shape != y.shape:
        raise ValueError(f"{what} must have identical shapes, got {x.shape} and {y.shape}")


def make_rng(seed) -> np.random.Generator:
    """Return a Generator from a seed, SeedSequence, Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
