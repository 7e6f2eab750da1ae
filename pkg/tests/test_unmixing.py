import numpy as np
import pytest

from hypersr.core import AbundanceMap, EndmemberMatrix, NumericalError, reconstruct
from hypersr.unmixing import (
    MinVolUnmixer,
    PCAUnmixer,
    decompose_pca,
    estimate_abundances_ls,
    extract_endmembers_minvol,
    reconstruct_pca,
)


def match_rows_up_to_permutation(found, expected):
    """Greatest elementwise error after the best row matching."""
    used = set()
    worst = 0.0
    for row in expected:
        errs = [np.abs(found[i] - row).max() if i not in used else np.inf for i in range(len(found))]
        best = int(np.argmin(errs))
        used.add(best)
        worst = max(worst, errs[best])
    return worst


def simplex_cube(rng, vertices, n_mixtures, h, w):
    m, l = vertices.shape
    weights = rng.dirichlet(np.ones(m), size=n_mixtures)
    pixels = np.vstack([vertices, weights @ vertices])
    pad = h * w - len(pixels)
    extra = rng.dirichlet(np.ones(m), size=pad) @ vertices
    pixels = np.vstack([pixels, extra])
    rng.shuffle(pixels)
    return pixels.reshape(h, w, l)


def test_minvol_two_pure_spectra():
    e1 = np.array([1.0, 0.0, 0.2, 0.4])
    e2 = np.array([0.1, 1.0, 0.5, 0.0])
    data = np.empty((4, 4, 4))
    data[:, :2] = e1
    data[:, 2:] = e2
    em = extract_endmembers_minvol(data, 2)
    assert match_rows_up_to_permutation(em.spectra, np.vstack([e1, e2])) < 1e-12


def test_minvol_single_material_takes_max_norm_pixel():
    rng = np.random.default_rng(0)
    data = rng.random((5, 5, 3))
    data[3, 2] = [2.0, 2.0, 2.0]  # clear max-norm pixel
    em = extract_endmembers_minvol(data, 1)
    np.testing.assert_allclose(em.spectra[0], data[3, 2])


def test_minvol_recovers_simplex_vertices():
    rng = np.random.default_rng(1)
    vertices = rng.random((3, 8)) + 0.2
    cube = simplex_cube(rng, vertices, 50, 8, 8)
    em = extract_endmembers_minvol(cube, 3)
    assert match_rows_up_to_permutation(em.spectra, vertices) < 1e-6


def test_minvol_rows_are_pixel_spectra():
    rng = np.random.default_rng(2)
    cube = rng.random((6, 6, 5))
    em = extract_endmembers_minvol(cube, 3)
    pixels = cube.reshape(-1, 5)
    for row in em.spectra:
        assert np.any(np.all(pixels == row, axis=1))


def test_minvol_errors():
    with pytest.raises(NumericalError):
        extract_endmembers_minvol(np.ones((3, 3, 2)), 3)  # M > L
    with pytest.raises(NumericalError):
        extract_endmembers_minvol(np.ones((4, 4, 6)), 2)  # all pixels identical
    with pytest.raises(ValueError):
        extract_endmembers_minvol(np.ones((3, 3, 4)), 0)
    with pytest.raises(ValueError):
        extract_endmembers_minvol(-np.ones((3, 3, 4)), 1)


def test_ls_abundances_recover_exact_mixture():
    rng = np.random.default_rng(3)
    em = EndmemberMatrix(rng.random((3, 9)) + 0.1)
    a0 = rng.random((7, 6, 3))
    cube = reconstruct(AbundanceMap(a0), em)
    est = estimate_abundances_ls(cube, em)
    np.testing.assert_allclose(est.data, a0, atol=1e-9)


def test_ls_abundances_zero_cube():
    em = EndmemberMatrix(np.eye(3, 5) + 0.01)
    est = estimate_abundances_ls(np.zeros((4, 4, 5)), em)
    assert np.all(est.data == 0.0)


@pytest.mark.parametrize("noise_scale", [1.0, 1e-3])
def test_ls_abundances_noise_identity(noise_scale):
    # additive cube noise lands on the abundances exactly through the
    # pseudo-inverse, with no interaction with the clean part
    rng = np.random.default_rng(4)
    em = EndmemberMatrix(rng.random((4, 12)) + 0.1)
    cube = rng.random((6, 5, 12))
    noise = noise_scale * rng.normal(size=cube.shape)
    delta = estimate_abundances_ls(cube + noise, em).data - estimate_abundances_ls(cube, em).data
    expected = noise @ em.pinv
    rel = np.abs(delta - expected).max() / np.abs(expected).max()
    assert rel < 1e-12


def test_ls_optimality_against_perturbations():
    rng = np.random.default_rng(5)
    em = EndmemberMatrix(rng.random((3, 8)) + 0.1)
    cube = rng.random((5, 5, 8))
    a_star = estimate_abundances_ls(cube, em)
    best = np.linalg.norm(reconstruct(a_star, em).data - cube)
    for _ in range(20):
        other = AbundanceMap(a_star.data + 1e-3 * rng.normal(size=a_star.data.shape))
        assert np.linalg.norm(reconstruct(other, em).data - cube) >= best


def test_pca_zero_variance_cube():
    spectrum = np.linspace(0.2, 0.8, 6)
    cube = np.broadcast_to(spectrum, (4, 4, 6)).copy()
    components, coeffs, mean = decompose_pca(cube, 2)
    np.testing.assert_allclose(coeffs.data, 0.0, atol=1e-12)
    np.testing.assert_allclose(mean, spectrum, atol=1e-12)


def test_pca_rank_one_exact():
    rng = np.random.default_rng(6)
    s = rng.random(7) + 0.1
    alphas = rng.random((5, 5, 1))
    cube = alphas * s
    components, coeffs, mean = decompose_pca(cube, 1)
    rebuilt = reconstruct_pca(coeffs, components, mean)
    np.testing.assert_allclose(rebuilt.data, cube, atol=1e-9)


def test_pca_beats_canonical_basis_projections():
    rng = np.random.default_rng(7)
    cube = rng.random((8, 8, 6))
    components, coeffs, mean = decompose_pca(cube, 3)
    pca_err = np.linalg.norm(reconstruct_pca(coeffs, components, mean).data - cube)

    pixels = cube.reshape(-1, 6)
    centered = pixels - pixels.mean(axis=0)
    from itertools import combinations

    for bands in combinations(range(6), 3):
        basis = np.eye(6)[list(bands)]
        approx = centered @ basis.T @ basis
        basis_err = np.linalg.norm(approx - centered)
        assert pca_err <= basis_err + 1e-12


def test_pca_rejects_too_many_components():
    with pytest.raises(ValueError):
        decompose_pca(np.zeros((3, 3, 4)), 5)


def test_minvol_estimator_round_trip():
    rng = np.random.default_rng(8)
    vertices = rng.random((3, 10)) + 0.2
    cube = simplex_cube(rng, vertices, 40, 8, 8)
    est = MinVolUnmixer(n_materials=3).fit(cube)
    abundances = est.transform(cube)
    assert abundances.shape == (8, 8, 3)
    rebuilt = est.inverse_transform(abundances)
    np.testing.assert_allclose(rebuilt, cube, atol=1e-8)
    assert est.get_params()["n_materials"] == 3


def test_pca_estimator_round_trip():
    rng = np.random.default_rng(9)
    cube = rng.random((6, 6, 8))
    est = PCAUnmixer(n_components=8).fit(cube)
    rebuilt = est.inverse_transform(est.transform(cube))
    np.testing.assert_allclose(rebuilt, cube, atol=1e-9)


def test_estimators_are_cloneable():
    from sklearn.base import clone

    for est in (MinVolUnmixer(n_materials=4), PCAUnmixer(n_components=2)):
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
