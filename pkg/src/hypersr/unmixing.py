"""Blind decomposition of a cube into endmembers and abundances.

Endmember extraction is a successive greedy scheme: at each round the
pixel spectrum with the largest residual after nonnegative least-squares
projection onto the spectra selected so far is added to the set. Rows of
the result are therefore always actual pixel spectra of the input cube.
Abundances are the unconstrained per-pixel least-squares solution, which
keeps additive cube noise exactly equivalent to a pseudo-inverse-mapped
perturbation of the abundances.

A plain PCA decomposition is provided as an alternative backend for
comparison; its components are not physical spectra.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import nnls
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import AbundanceMap, EndmemberMatrix, NumericalError, SpectralCube, reconstruct
from .validation import abundance_array, cube_array, endmember_matrix

# Residuals this small relative to the largest pixel norm mean the pixel
# cloud cannot support another linearly independent endmember.
_DEGENERATE_RTOL = 1e-9


def extract_endmembers_minvol(cube, n_materials: int, nnls_iter_factor: int = 50) -> EndmemberMatrix:
    """Greedy successive endmember extraction from the pixel cloud.

    Parameters
    ----------
    cube : SpectralCube or (H, W, L) array
        Nonnegative input cube.
    n_materials : int
        Number of endmembers to select.
    nnls_iter_factor : int
        The inner nonnegative projection runs at most
        ``nnls_iter_factor * n_materials`` active-set iterations.

    Returns
    -------
    EndmemberMatrix
        ``n_materials`` pixel spectra of the cube, in selection order.
    """
    data = cube_array(cube)
    if n_materials < 1:
        raise ValueError(f"n_materials must be >= 1, got {n_materials}")
    if data.min() < -1e-8:
        raise ValueError(f"cube must be nonnegative, found minimum {data.min():.3e}")
    pixels = data.reshape(-1, data.shape[2])
    n_pixels, n_bands = pixels.shape
    if n_materials > n_bands or n_materials > n_pixels:
        raise NumericalError(
            f"cannot extract {n_materials} endmembers from {n_pixels} pixels x {n_bands} bands"
        )

    max_iter = nnls_iter_factor * n_materials
    norms = np.linalg.norm(pixels, axis=1)
    scale = float(norms.max())
    if scale == 0.0:
        raise NumericalError("cube is identically zero; extraction failed")

    selected: list[int] = []
    for _ in range(n_materials):
        if not selected:
            residuals = norms
        else:
            basis = pixels[selected].T  # (L, k)
            residuals = np.empty(n_pixels)
            for i in range(n_pixels):
                residuals[i] = nnls(basis, pixels[i], maxiter=max_iter)[1]
        best = int(np.argmax(residuals))  # argmax keeps the lowest row-major index on ties
        if selected and residuals[best] <= _DEGENERATE_RTOL * scale:
            raise NumericalError(
                f"degenerate pixel cloud: no independent spectrum left after "
                f"{len(selected)} of {n_materials} endmembers"
            )
        selected.append(best)
    return EndmemberMatrix(pixels[selected])


def estimate_abundances_ls(cube, endmembers) -> AbundanceMap:
    """Unconstrained least-squares abundances, pixel by pixel.

    The solution is X @ S+ with S+ the pseudo-inverse of the endmember
    matrix; values are deliberately not clipped or renormalized.
    """
    data = cube_array(cube)
    em = endmember_matrix(endmembers)
    if data.shape[2] != em.bands:
        raise ValueError(f"cube has {data.shape[2]} bands, endmembers have {em.bands}")
    return AbundanceMap(data @ em.pinv)


def decompose_pca(cube, n_components: int):
    """Principal component decomposition of the band covariance.

    Returns ``(components, coefficients, mean_spectrum)`` where the cube is
    approximated by ``coefficients @ components + mean_spectrum``, the best
    rank-``n_components`` fit in the squared-error sense. Component signs
    are fixed so the largest-magnitude entry of each is positive.
    """
    data = cube_array(cube)
    h, w, n_bands = data.shape
    if n_components < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    if n_components > n_bands:
        raise ValueError(f"n_components ({n_components}) exceeds band count ({n_bands})")
    pixels = data.reshape(-1, n_bands)
    mean = pixels.mean(axis=0)
    centered = pixels - mean
    cov = centered.T @ centered / pixels.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    components = eigvecs[:, order].T  # (M, L)
    flip = np.sign(components[np.arange(n_components), np.argmax(np.abs(components), axis=1)])
    components = components * flip[:, None]
    coefficients = centered @ components.T
    return components, AbundanceMap(coefficients.reshape(h, w, n_components)), mean


def reconstruct_pca(coefficients, components: np.ndarray, mean_spectrum: np.ndarray) -> SpectralCube:
    """Invert decompose_pca: coefficients @ components + mean."""
    coeffs = abundance_array(coefficients)
    return SpectralCube(coeffs @ components + mean_spectrum)


class MinVolUnmixer(BaseEstimator, TransformerMixin):
    """Blind linear unmixing with greedily extracted pixel-spectrum endmembers.

    fit() selects ``n_materials`` endmembers from the pixel cloud;
    transform() maps a cube of matching band count to per-pixel abundance
    maps; inverse_transform() mixes abundances back into a cube.

    Attributes
    ----------
    endmembers_ : EndmemberMatrix
        Selected spectra, one per row.
    """

    def __init__(self, n_materials=6, nnls_iter_factor=50):
        self.n_materials = n_materials
        self.nnls_iter_factor = nnls_iter_factor

    def fit(self, X, y=None):
        self.endmembers_ = extract_endmembers_minvol(X, self.n_materials, self.nnls_iter_factor)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "endmembers_")
        return estimate_abundances_ls(X, self.endmembers_).data

    def inverse_transform(self, A) -> np.ndarray:
        check_is_fitted(self, "endmembers_")
        return reconstruct(AbundanceMap(abundance_array(A)), self.endmembers_).data


class PCAUnmixer(BaseEstimator, TransformerMixin):
    """Rank-reducing PCA alternative to blind unmixing.

    Attributes
    ----------
    components_ : (n_components, bands) ndarray
    mean_ : (bands,) ndarray
    """

    def __init__(self, n_components=6):
        self.n_components = n_components

    def fit(self, X, y=None):
        self.components_, _, self.mean_ = decompose_pca(X, self.n_components)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "components_")
        data = cube_array(X)
        if data.shape[2] != self.components_.shape[1]:
            raise ValueError(
                f"cube has {data.shape[2]} bands, components have {self.components_.shape[1]}"
            )
        coeffs = (data.reshape(-1, data.shape[2]) - self.mean_) @ self.components_.T
        return coeffs.reshape(data.shape[0], data.shape[1], self.n_components)

    def inverse_transform(self, A) -> np.ndarray:
        check_is_fitted(self, "components_")
        return reconstruct_pca(A, self.components_, self.mean_).data
