import json

import numpy as np
import pytest
from scipy.stats import kstest, wasserstein_distance

from hypersr.deadleaves import (
    GeneratorConfig,
    _leaf_mask,
    generate_abundance,
    generate_dataset,
    generate_pair,
    load_dataset,
    make_value_source,
    noisy_flag,
    sample_leaf,
    sample_rng,
    value_sampler_dirichlet,
    value_sampler_empirical,
)
from hypersr.degrade import DegradationSpec, degrade


def small_config(**overrides):
    base = dict(height=32, width=32, materials=2, scale_factor=2, seed=0)
    base.update(overrides)
    return GeneratorConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError, match="size interval"):
        GeneratorConfig(height=8, width=8, materials=2, scale_factor=2)
    with pytest.raises(ValueError, match="divisible"):
        GeneratorConfig(height=33, width=32, materials=2, scale_factor=2)
    with pytest.raises(ValueError):
        small_config(value_mode="nope")
    with pytest.raises(ValueError):
        small_config(noisy_fraction=1.5)


def test_leaf_geometry_distributions():
    config = small_config()
    vs = make_value_source(config, np.zeros((2, 2, 2)))
    rng = np.random.default_rng(0)
    leaves = [sample_leaf(config, vs, rng) for _ in range(100000)]
    lo, hi = config.size_interval
    a = np.array([leaf.a for leaf in leaves])
    theta = np.array([leaf.theta for leaf in leaves])
    assert a.min() >= lo and a.max() <= hi
    assert np.all((theta >= 0.0) & (theta <= 45.0))
    assert abs(a.mean() - (lo + hi) / 2) / ((lo + hi) / 2) < 0.01
    xs = np.array([leaf.x for leaf in leaves])
    assert xs.min() >= 0.0 and xs.max() < config.width


def test_empirical_sampler_single_pixel():
    source = np.array([[[0.2, 0.7]]])
    rng = np.random.default_rng(1)
    for _ in range(10):
        np.testing.assert_array_equal(value_sampler_empirical(source, rng), [0.2, 0.7])


def test_empirical_sampler_two_pixel_split():
    source = np.zeros((1, 2, 1))
    source[0, 1, 0] = 1.0
    rng = np.random.default_rng(2)
    n = 10000
    hits = sum(value_sampler_empirical(source, rng)[0] for _ in range(n))
    # 3 sigma binomial bound around n/2
    assert abs(hits - n / 2) < 3 * np.sqrt(n * 0.25)


def test_empirical_sampler_clamps_values():
    source = np.array([[[1.3, -0.2]]])
    v = value_sampler_empirical(source, np.random.default_rng(3))
    np.testing.assert_array_equal(v, [1.0, 0.0])


def test_dirichlet_sampler_simplex():
    rng = np.random.default_rng(4)
    assert value_sampler_dirichlet(1, rng) == pytest.approx([1.0])
    for m in (2, 3, 6):
        draws = np.array([value_sampler_dirichlet(m, rng) for _ in range(200)])
        assert np.all(draws >= 0.0)
        np.testing.assert_allclose(draws.sum(axis=1), 1.0, atol=1e-12)


def test_dirichlet_first_coordinate_uniform():
    rng = np.random.default_rng(5)
    first = np.array([value_sampler_dirichlet(2, rng)[0] for _ in range(100000)])
    assert kstest(first, "uniform").statistic < 0.01


def test_generate_constant_with_single_pixel_source():
    config = small_config(materials=2)
    source = np.array([[[0.3, 0.6]]])
    vs = make_value_source(config, source)
    out = generate_abundance(config, vs, np.random.default_rng(6))
    assert np.all(out.data == np.array([0.3, 0.6]))


def test_generate_full_coverage_and_source_membership():
    rng = np.random.default_rng(7)
    source = rng.random((6, 6, 2)) * 1.4 - 0.2  # includes values outside [0, 1]
    config = small_config()
    vs = make_value_source(config, source)
    out = generate_abundance(config, vs, np.random.default_rng(8)).data
    clamped = {tuple(v) for v in np.clip(source.reshape(-1, 2), 0.0, 1.0)}
    produced = {tuple(v) for v in out.reshape(-1, 2)}
    assert produced <= clamped
    # zero vector is not in the source set, so coverage is also implied
    assert len(produced) > 1


def test_generation_is_deterministic():
    config = small_config(seed=9)
    source = np.random.default_rng(9).random((4, 4, 2))
    vs = make_value_source(config, source)
    a = generate_abundance(config, vs, sample_rng(config.seed, 0)).data
    b = generate_abundance(config, vs, sample_rng(config.seed, 0)).data
    assert np.array_equal(a, b)


def test_leaves_never_overwrite():
    # replay the leaf sequence: the final map must show each leaf's value
    # exactly on the pixels that leaf claimed first
    config = small_config()
    source = np.random.default_rng(10).random((5, 5, 2))
    vs = make_value_source(config, source)
    out = generate_abundance(config, vs, np.random.default_rng(11)).data

    rng = np.random.default_rng(11)
    covered = np.zeros((config.height, config.width), dtype=bool)
    replayed = 0
    while not covered.all():
        leaf = sample_leaf(config, vs, rng)
        located = _leaf_mask(leaf, config.height, config.width)
        if located is None:
            continue
        window, inside = located
        fresh = inside & ~covered[window]
        if fresh.any():
            np.testing.assert_array_equal(
                out[window][fresh], np.broadcast_to(leaf.v, (int(fresh.sum()), 2))
            )
        covered[window] |= inside
        replayed += 1
    assert replayed > 1


def test_generate_pair_contracts():
    config = small_config()
    spec = DegradationSpec(2)
    source = np.array([[[0.5, 0.5]]])
    vs = make_value_source(config, source)
    hr, lr = generate_pair(config, vs, spec, np.random.default_rng(12))
    assert hr.data.shape == (32, 32, 2) and lr.data.shape == (16, 16, 2)
    np.testing.assert_allclose(lr.data, 0.5, rtol=1e-12)  # constant propagates

    rng_a = np.random.default_rng(13)
    source2 = np.random.default_rng(14).random((4, 4, 2))
    vs2 = make_value_source(config, source2)
    hr2, lr2 = generate_pair(config, vs2, spec, rng_a)
    np.testing.assert_allclose(lr2.data, degrade(hr2, spec).data, atol=0)

    with pytest.raises(ValueError, match="scale"):
        generate_pair(config, vs, DegradationSpec(4), np.random.default_rng(15))


def test_noisy_flags_spread_evenly():
    flags = [noisy_flag(i, 0.5) for i in range(10)]
    assert sum(flags) == 5
    assert flags == [False, True] * 5
    assert sum(noisy_flag(i, 0.25) for i in range(16)) == 4
    assert sum(noisy_flag(i, 1.0) for i in range(7)) == 7
    assert sum(noisy_flag(i, 0.0) for i in range(7)) == 0


def test_dataset_layout_and_determinism(tmp_path):
    config = small_config(height=16, width=16, materials=3, seed=21)
    source = np.random.default_rng(20).random((4, 4, 3))
    spec = DegradationSpec(2)
    meta = generate_dataset(config, spec, 4, tmp_path / "d1", source=source)
    assert meta["n"] == 4 and len(meta["flags"]) == 4

    loaded_meta, samples = load_dataset(tmp_path / "d1")
    assert loaded_meta == json.loads((tmp_path / "d1" / "meta.json").read_text())
    assert len(samples) == 4
    for lr, hr, _flag in samples:
        assert hr.shape == (16, 16, 3) and lr.shape == (8, 8, 3)

    generate_dataset(config, spec, 4, tmp_path / "d2", source=source)
    for name in sorted(p.name for p in (tmp_path / "d1").iterdir()):
        assert (tmp_path / "d1" / name).read_bytes() == (tmp_path / "d2" / name).read_bytes()


def test_dataset_samples_reproducible_in_isolation(tmp_path):
    config = small_config(height=16, width=16, seed=33)
    source = np.random.default_rng(30).random((4, 4, 2))
    spec = DegradationSpec(2)
    generate_dataset(config, spec, 3, tmp_path / "d", source=source)
    _, samples = load_dataset(tmp_path / "d")

    vs = make_value_source(config, source)
    hr2, _Chk = generate_pair(config, vs, spec, sample_rng(config.seed, 2))
    stored = samples[2][1]
    np.testing.assert_allclose(stored, hr2.data.astype(np.float32).astype(np.float64), atol=0)


def test_marginal_histogram_converges_to_source():
    rng = np.random.default_rng(40)
    source = rng.random((8, 8, 2))
    config = small_config()
    vs = make_value_source(config, source)
    maps = [generate_abundance(config, vs, np.random.default_rng(500 + i)).data for i in range(40)]
    src_vals = np.clip(source[:, :, 0].ravel(), 0.0, 1.0)

    def emd(k):
        vals = np.concatenate([m[:, :, 0].ravel() for m in maps[:k]])
        return wasserstein_distance(src_vals, vals)

    assert emd(40) < emd(4) < emd(1)
