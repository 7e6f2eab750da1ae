import math

import numpy as np
import pytest

from hypersr.core import AbundanceMap, SpectralCube
from hypersr.degrade import (
    DegradationSpec,
    Degrader,
    bicubic_resample,
    blur,
    degrade,
    gaussian_kernel,
    upsample,
)


def keys_weight(x):
    # independent scalar evaluation of the a = -0.5 cubic kernel
    ax = abs(x)
    if ax <= 1.0:
        return 1.5 * ax**3 - 2.5 * ax**2 + 1.0
    if ax < 2.0:
        return -0.5 * (ax**3 - 5.0 * ax**2 + 8.0 * ax - 4.0)
    return 0.0


def reflect(i, n):
    period = 2 * n - 2
    i = abs(i) % period
    return period - i if i >= n else i


def oracle_resample_1d(signal, n_out):
    n_in = len(signal)
    out = []
    for i in range(n_out):
        src = (i + 0.5) * n_in / n_out - 0.5
        base = math.floor(src)
        taps = [(reflect(base + t, n_in), keys_weight(src - (base + t))) for t in range(-1, 3)]
        total = sum(w for _, w in taps)
        out.append(sum(signal[j] * w for j, w in taps) / total)
    return np.array(out)


def test_spec_defaults_and_validation():
    spec = DegradationSpec(3)
    assert spec.blur_sigma == 3.0 and spec.kernel_radius == 9
    assert 2 * spec.kernel_radius + 1 >= 6 * spec.blur_sigma
    with pytest.raises(ValueError):
        DegradationSpec(1)
    with pytest.raises(ValueError):
        DegradationSpec(2, 0.0)


def test_kernel_normalization_and_symmetry():
    for sigma in (0.4, 1.0, 2.0, 3.7):
        k = gaussian_kernel(sigma)
        assert abs(k.sum() - 1.0) < 1e-15
        assert np.array_equal(k, k[::-1])
        assert len(k) == 2 * math.ceil(3 * sigma) + 1
    with pytest.raises(ValueError):
        gaussian_kernel(0.0)


def test_kernel_sigma2_tap_ratio():
    k = gaussian_kernel(2.0)
    center = len(k) // 2
    assert k[center] / k[center + 2] == pytest.approx(math.exp(0.5), rel=1e-12)


def test_blur_preserves_constants():
    x = np.full((9, 9, 2), 0.7)
    np.testing.assert_allclose(blur(x, 2.0), x, rtol=1e-12)


def test_blur_impulse_equals_kernel_outer_product():
    sigma = 1.5
    k = gaussian_kernel(sigma)
    radius = len(k) // 2
    x = np.zeros((31, 31))
    x[15, 15] = 1.0
    out = blur(x, sigma)
    window = out[15 - radius : 15 + radius + 1, 15 - radius : 15 + radius + 1]
    np.testing.assert_allclose(window, np.outer(k, k), atol=1e-12)
    footprint = np.zeros_like(x, dtype=bool)
    footprint[15 - radius : 15 + radius + 1, 15 - radius : 15 + radius + 1] = True
    assert np.all(out[~footprint] == 0.0)


def test_blur_keeps_interior_of_linear_ramp():
    i = np.arange(40, dtype=float)
    ramp = 0.3 * i[:, None] + 0.1 * i[None, :] + 2.0
    out = blur(ramp, 2.0)
    r = math.ceil(3 * 2.0)
    np.testing.assert_allclose(out[r:-r, r:-r], ramp[r:-r, r:-r], rtol=1e-12)


def test_bicubic_identity_at_equal_dims():
    rng = np.random.default_rng(0)
    x = rng.random((7, 9, 3))
    np.testing.assert_allclose(bicubic_resample(x, 7, 9), x, atol=1e-12)


def test_bicubic_constant_stays_constant():
    x = np.full((6, 6), 0.4)
    for dims in ((12, 12), (3, 3), (9, 5)):
        np.testing.assert_allclose(bicubic_resample(x, *dims), 0.4, rtol=1e-12)


def test_bicubic_1d_upsample_matches_hand_oracle():
    signal = np.array([0.0, 1.0, 2.0, 3.0])
    out = bicubic_resample(signal[:, None], 8, 1)[:, 0]
    np.testing.assert_allclose(out, oracle_resample_1d(signal, 8), atol=1e-14)
    # positions with all four taps interior reproduce the ramp exactly
    assert out[3] == pytest.approx(1.25, abs=1e-12)
    assert out[4] == pytest.approx(1.75, abs=1e-12)


def test_bicubic_downsample_matches_hand_oracle():
    rng = np.random.default_rng(1)
    signal = rng.random(12)
    out = bicubic_resample(signal[:, None], 5, 1)[:, 0]
    np.testing.assert_allclose(out, oracle_resample_1d(signal, 5), atol=1e-13)


def test_degrade_dims_and_constant():
    x = np.full((8, 8, 3), 0.6)
    out = degrade(x, DegradationSpec(2))
    assert out.shape == (4, 4, 3)
    np.testing.assert_allclose(out, 0.6, rtol=1e-12)
    with pytest.raises(ValueError):
        degrade(np.zeros((9, 8, 1)), DegradationSpec(2))


def test_degrade_upsample_round_trip_on_smooth_map():
    i = np.arange(16)
    lr = 1.0 + 0.1 * np.cos(2 * np.pi * i[:, None] / 16) * np.cos(2 * np.pi * i[None, :] / 16)
    lr = lr[:, :, None]
    rt = degrade(upsample(lr, 2), DegradationSpec(2))
    assert np.linalg.norm(rt - lr) / np.linalg.norm(lr) < 0.05


def test_degrade_is_linear():
    rng = np.random.default_rng(2)
    a, b = rng.random((16, 16, 2)), rng.random((16, 16, 2))
    spec = DegradationSpec(2)
    lhs = degrade(0.7 * a - 1.3 * b, spec)
    rhs = 0.7 * degrade(a, spec) - 1.3 * degrade(b, spec)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_degrade_channels_are_independent():
    rng = np.random.default_rng(3)
    x = rng.random((12, 12, 3))
    spec = DegradationSpec(3)
    full = degrade(x, spec)
    for c in range(3):
        np.testing.assert_allclose(full[:, :, c], degrade(x[:, :, c], spec), atol=0)


def test_degrade_preserves_mean_of_constant_sign_map():
    for seed in range(3):
        x = np.random.default_rng(seed).random((64, 64, 2)) + 0.5
        for scale in (2, 4):
            y = degrade(x, DegradationSpec(scale))
            assert abs(y.mean() - x.mean()) / x.mean() < 1e-3


def test_type_wrappers_round_trip():
    rng = np.random.default_rng(4)
    cube = SpectralCube(rng.random((8, 8, 3)))
    out = degrade(cube, DegradationSpec(2))
    assert isinstance(out, SpectralCube) and out.height == 4
    amap = AbundanceMap(rng.random((8, 8, 2)))
    out = upsample(amap, 2)
    assert isinstance(out, AbundanceMap) and out.height == 16


def test_degrader_estimator():
    est = Degrader(scale=2)
    assert est.get_params()["scale"] == 2
    x = np.random.default_rng(5).random((8, 8, 2))
    np.testing.assert_allclose(est.fit_transform(x), degrade(x, DegradationSpec(2)), atol=0)
