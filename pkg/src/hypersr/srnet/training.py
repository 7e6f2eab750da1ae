"""Adam optimizer, the patch-based training loop, and the sklearn estimator.

Training is a single deterministic stream: given the same seed, dataset,
and configuration, two runs produce bit-identical parameters. Each step
crops an aligned random patch from a (possibly noise-corrupted) input
stack and its clean high-resolution target, runs the network forward,
takes the mean-absolute-error gradient, and applies one Adam update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..noise import NoiseConfig, build_input_stack, prepare_training_sample
from ..validation import abundance_array, pinv_array
from .network import (
    DEFAULT_BLOCKS,
    DEFAULT_FILTERS,
    backward,
    forward,
    forward_with_cache,
    init_params,
)
from .nn import l1_loss_backward, l1_loss_forward


@dataclass
class AdamState:
    """First/second moment accumulators and step counter for one param dict."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict, learning_rate: float) -> "AdamState":
        state = cls(learning_rate=learning_rate)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """One in-place Adam update with bias correction."""
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for key, p in params.items():
        g = grads[key]
        state.m[key] = state.beta1 * state.m[key] + (1.0 - state.beta1) * g
        state.v[key] = state.beta2 * state.v[key] + (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (state.m[key] / c1) / (np.sqrt(state.v[key] / c2) + state.eps)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters (the noise law lives in NoiseConfig)."""

    epochs: int = 200
    batch_size: int = 1
    patch_size: int = 16
    learning_rate: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.patch_size < 1:
            raise ValueError("epochs, batch_size, and patch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


def _sample_step(params, a_lr, a_hr, flag, scale, patch, noise_config, pinv, rng):
    """Loss and gradients for one randomly cropped training sample."""
    stack, target = prepare_training_sample((a_lr, a_hr), flag, noise_config, pinv, rng)
    h, w = stack.shape[:2]
    p = min(patch, h, w)
    r = int(rng.integers(0, h - p + 1))
    c = int(rng.integers(0, w - p + 1))
    in_patch = stack[r : r + p, c : c + p].transpose(2, 0, 1)[None]
    tgt_patch = target[r * scale : (r + p) * scale, c * scale : (c + p) * scale]
    tgt_patch = tgt_patch.transpose(2, 0, 1)[None]
    out, cache = forward_with_cache(params, in_patch, scale)
    loss = l1_loss_forward(out, tgt_patch)
    grads, _ = backward(params, cache, l1_loss_backward(out, tgt_patch), scale)
    return loss, grads


def train_network(
    samples,
    scale: int,
    train_config: TrainConfig,
    noise_config: NoiseConfig,
    pinv=None,
    n_filters: int = DEFAULT_FILTERS,
    n_blocks: int = DEFAULT_BLOCKS,
    progress=None,
):
    """Train on [(a_lr, a_hr, noisy_flag), ...]; returns (params, epoch log).

    ``pinv`` (the endmember pseudo-inverse) is required by every noise mode
    except "clean". Batches larger than 1 average gradients before the
    Adam step, which leaves the loss semantics unchanged.
    """
    if not samples:
        raise ValueError("training requires at least one sample")
    n_materials = abundance_array(samples[0][0]).shape[2]
    pinv_arr = None
    if noise_config.mode != "clean":
        if pinv is None:
            raise ValueError(f"noise mode {noise_config.mode!r} requires the pseudo-inverse")
        pinv_arr = pinv_array(pinv, n_materials)

    init_seq, data_seq = np.random.SeedSequence(train_config.seed).spawn(2)
    params = init_params(n_materials, n_filters, n_blocks, np.random.default_rng(init_seq))
    state = AdamState.for_params(params, train_config.learning_rate)
    rng = np.random.default_rng(data_seq)

    log = []
    for epoch in range(train_config.epochs):
        order = rng.permutation(len(samples))
        losses = []
        for start in range(0, len(order), train_config.batch_size):
            batch = order[start : start + train_config.batch_size]
            acc = None
            for idx in batch:
                a_lr, a_hr, flag = samples[idx]
                loss, grads = _sample_step(
                    params, a_lr, a_hr, flag, scale, train_config.patch_size,
                    noise_config, pinv_arr, rng,
                )
                losses.append(loss)
                if acc is None:
                    acc = grads
                else:
                    for key in acc:
                        acc[key] += grads[key]
            if len(batch) > 1:
                for key in acc:
                    acc[key] /= len(batch)
            adam_step(params, acc, state)
        entry = {"epoch": epoch, "mean_l1": float(np.mean(losses))}
        log.append(entry)
        if progress is not None:
            progress(entry)
    return params, log


def super_resolve(params: dict, a_lr, sigma_hint: float, scale: int) -> np.ndarray:
    """Super-resolve one abundance map: (h, w, M) -> (h*scale, w*scale, M).

    ``sigma_hint`` fills the noise-level channel; 0 means clean inference.
    """
    data = abundance_array(a_lr)
    expected = params["head.weight"].shape[1] - 1
    if data.shape[2] != expected:
        raise ValueError(f"abundance map has {data.shape[2]} materials, network expects {expected}")
    stack = build_input_stack(data, sigma_hint).transpose(2, 0, 1)
    return forward(params, stack, scale).transpose(1, 2, 0)


class ResidualSRNet(BaseEstimator):
    """Residual super-resolver over a bicubic baseline, in sklearn clothing.

    fit(X, y) takes aligned lists of low- and high-resolution abundance
    maps in (h, w, M) layout; predict(X) maps one low-resolution map to
    its super-resolved counterpart. Because the final layer starts at
    zero, an unfitted forward pass equals plain bicubic upsampling.

    Parameters
    ----------
    scale : int
        Spatial magnification factor.
    n_filters, n_blocks : int
        Width and depth of the residual trunk.
    epochs, batch_size, patch_size, learning_rate, seed :
        Optimization settings, see TrainConfig.
    noise_mode : {"clean", "noisy", "halfmix", "stdaware"}
        Training-time corruption strategy, see NoiseConfig.
    sigma_max, noise_lam : float
        Parameters of the noise-level law sigma_max - Exp(noise_lam).
    """

    def __init__(
        self,
        scale=2,
        n_filters=DEFAULT_FILTERS,
        n_blocks=DEFAULT_BLOCKS,
        epochs=200,
        batch_size=1,
        patch_size=16,
        learning_rate=1e-4,
        seed=0,
        noise_mode="stdaware",
        sigma_max=1e-3,
        noise_lam=2000.0,
    ):
        self.scale = scale
        self.n_filters = n_filters
        self.n_blocks = n_blocks
        self.epochs = epochs
        self.batch_size = batch_size
        self.patch_size = patch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.noise_mode = noise_mode
        self.sigma_max = sigma_max
        self.noise_lam = noise_lam

    def fit(self, X, y, noisy=None, pinv=None, progress=None):
        """Train on lists of (h, w, M) inputs and (h*scale, w*scale, M) targets.

        ``noisy`` optionally flags which samples the halfmix/stdaware modes
        corrupt (default: none); ``pinv`` is the endmember pseudo-inverse
        needed to correlate the injected noise.
        """
        if len(X) != len(y):
            raise ValueError(f"got {len(X)} inputs but {len(y)} targets")
        flags = [False] * len(X) if noisy is None else [bool(f) for f in noisy]
        if len(flags) != len(X):
            raise ValueError(f"got {len(flags)} noisy flags for {len(X)} samples")
        samples = [(abundance_array(a), abundance_array(b), f) for a, b, f in zip(X, y, flags)]
        self.params_, self.loss_log_ = train_network(
            samples,
            self.scale,
            TrainConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                patch_size=self.patch_size,
                learning_rate=self.learning_rate,
                seed=self.seed,
            ),
            NoiseConfig(sigma_max=self.sigma_max, lam=self.noise_lam, mode=self.noise_mode),
            pinv=pinv,
            n_filters=self.n_filters,
            n_blocks=self.n_blocks,
            progress=progress,
        )
        self.n_materials_ = self.params_["tail.weight"].shape[0]
        return self

    def predict(self, X, sigma=0.0) -> np.ndarray:
        """Super-resolve one (h, w, M) abundance map."""
        check_is_fitted(self, "params_")
        return super_resolve(self.params_, X, sigma, self.scale)
