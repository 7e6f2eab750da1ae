"""The residual super-resolution network and its checkpoint format.

Architecture: the (M + 1)-channel input stack (abundances plus a constant
noise-level channel) is bicubically upsampled to the target resolution,
run through a small stack of 2-D residual blocks, and the trunk output is
added to the bicubic upsample of the abundance channels alone. The tail
convolution starts at zero, so an untrained network is exactly the bicubic
baseline and training is measurable as improvement over it.

Checkpoints are a JSON manifest (layer names, shapes, hyperparameters)
plus a raw little-endian float32 blob of the parameters concatenated in
manifest order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..core import DataFormatError
from ..degrade import resample_matrix
from .nn import conv2d_backward, conv2d_forward, relu_backward, relu_forward

DEFAULT_FILTERS = 32
DEFAULT_BLOCKS = 4


def param_names(n_blocks: int) -> list[str]:
    names = ["head.weight", "head.bias"]
    for i in range(n_blocks):
        names += [
            f"block{i}.conv1.weight",
            f"block{i}.conv1.bias",
            f"block{i}.conv2.weight",
            f"block{i}.conv2.bias",
        ]
    names += ["tail.weight", "tail.bias"]
    return names


def init_params(
    n_materials: int,
    n_filters: int = DEFAULT_FILTERS,
    n_blocks: int = DEFAULT_BLOCKS,
    rng: np.random.Generator | None = None,
) -> dict[str, np.ndarray]:
    """He-style Gaussian init for head/block kernels; tail and biases at zero."""
    rng = rng or np.random.default_rng(0)

    def he(shape):
        fan_in = shape[1] * shape[2] * shape[3]
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)

    params = {
        "head.weight": he((n_filters, n_materials + 1, 3, 3)),
        "head.bias": np.zeros(n_filters),
    }
    for i in range(n_blocks):
        params[f"block{i}.conv1.weight"] = he((n_filters, n_filters, 3, 3))
        params[f"block{i}.conv1.bias"] = np.zeros(n_filters)
        params[f"block{i}.conv2.weight"] = he((n_filters, n_filters, 3, 3))
        params[f"block{i}.conv2.bias"] = np.zeros(n_filters)
    params["tail.weight"] = np.zeros((n_materials, n_filters, 3, 3))
    params["tail.bias"] = np.zeros(n_materials)
    return params


def n_blocks_of(params: dict) -> int:
    return sum(1 for name in params if name.endswith(".conv1.weight"))


def _upsample_nchw(x: np.ndarray, scale: int) -> np.ndarray:
    n, c, h, w = x.shape
    rows = resample_matrix(h, h * scale)
    cols = resample_matrix(w, w * scale)
    out = np.empty((n, c, h * scale, w * scale))
    for i in range(n):
        for j in range(c):
            out[i, j] = (rows @ x[i, j]) @ cols.T
    return out


def _upsample_adjoint_nchw(g: np.ndarray, scale: int) -> np.ndarray:
    n, c, hs, ws = g.shape
    rows = resample_matrix(hs // scale, hs)
    cols = resample_matrix(ws // scale, ws)
    out = np.empty((n, c, hs // scale, ws // scale))
    for i in range(n):
        for j in range(c):
            out[i, j] = (rows.T @ g[i, j]) @ cols
    return out


def forward_with_cache(params: dict, stack: np.ndarray, scale: int):
    """Run the network on an (N, M+1, h, w) input stack.

    Returns the (N, M, h*scale, w*scale) output and the activation cache
    needed by :func:`backward`.
    """
    if stack.ndim != 4:
        raise ValueError(f"expected an (N, C, h, w) stack, got shape {stack.shape}")
    if stack.shape[1] != params["head.weight"].shape[1]:
        raise ValueError(
            f"stack has {stack.shape[1]} channels, network expects "
            f"{params['head.weight'].shape[1]}"
        )
    n_materials = params["tail.weight"].shape[0]
    up = _upsample_nchw(stack, scale)
    t = conv2d_forward(up, params["head.weight"], params["head.bias"])
    blocks = []
    for i in range(n_blocks_of(params)):
        a1 = conv2d_forward(t, params[f"block{i}.conv1.weight"], params[f"block{i}.conv1.bias"])
        r1 = relu_forward(a1)
        a2 = conv2d_forward(r1, params[f"block{i}.conv2.weight"], params[f"block{i}.conv2.bias"])
        blocks.append((t, a1, r1))
        t = t + a2
    out = up[:, :n_materials] + conv2d_forward(t, params["tail.weight"], params["tail.bias"])
    cache = {"stack_shape": stack.shape, "up": up, "blocks": blocks, "trunk": t}
    return out, cache


def forward(params: dict, stack: np.ndarray, scale: int) -> np.ndarray:
    """Single-sample convenience: (M+1, h, w) stack -> (M, h*s, w*s) output."""
    out, _ = forward_with_cache(params, stack[None], scale)
    return out[0]


def backward(params: dict, cache: dict, grad_out: np.ndarray, scale: int):
    """Backpropagate grad_out through the cached forward pass.

    Returns (grads, grad_stack) with grads keyed like params.
    """
    n_materials = params["tail.weight"].shape[0]
    grads: dict[str, np.ndarray] = {}

    g_up = np.zeros_like(cache["up"])
    g_up[:, :n_materials] += grad_out

    gt, grads["tail.weight"], grads["tail.bias"] = conv2d_backward(
        cache["trunk"], params["tail.weight"], grad_out
    )
    for i in reversed(range(n_blocks_of(params))):
        t_in, a1, r1 = cache["blocks"][i]
        g_r1, grads[f"block{i}.conv2.weight"], grads[f"block{i}.conv2.bias"] = conv2d_backward(
            r1, params[f"block{i}.conv2.weight"], gt
        )
        g_a1 = relu_backward(a1, g_r1)
        g_in, grads[f"block{i}.conv1.weight"], grads[f"block{i}.conv1.bias"] = conv2d_backward(
            t_in, params[f"block{i}.conv1.weight"], g_a1
        )
        gt = gt + g_in
    g_head_in, grads["head.weight"], grads["head.bias"] = conv2d_backward(
        cache["up"], params["head.weight"], gt
    )
    g_up += g_head_in
    return grads, _upsample_adjoint_nchw(g_up, scale)


def save_checkpoint(path, params: dict, hyper: dict) -> None:
    """Write ``<path>.json`` manifest and ``<path>.bin`` float32 parameter blob."""
    base = Path(path)
    if base.suffix in (".json", ".bin"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    layers = [{"name": name, "shape": list(params[name].shape)} for name in params]
    manifest = {"layers": layers, "hyper": hyper}
    base.with_suffix(".json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    blob = np.concatenate([params[layer["name"]].ravel() for layer in layers])
    base.with_suffix(".bin").write_bytes(blob.astype("<f4").tobytes())


def load_checkpoint(path) -> tuple[dict, dict]:
    """Read a checkpoint pair back into (params, hyper)."""
    base = Path(path)
    if base.suffix in (".json", ".bin"):
        base = base.with_suffix("")
    try:
        manifest = json.loads(base.with_suffix(".json").read_text())
    except FileNotFoundError:
        raise DataFormatError(f"missing checkpoint manifest {base.with_suffix('.json')}")
    except json.JSONDecodeError as e:
        raise DataFormatError(f"malformed checkpoint manifest: {e}")
    layers = manifest.get("layers")
    if not isinstance(layers, list):
        raise DataFormatError("checkpoint manifest has no layer list")
    raw = base.with_suffix(".bin").read_bytes()
    total = sum(int(np.prod(layer["shape"])) for layer in layers)
    if len(raw) != total * 4:
        raise DataFormatError(
            f"checkpoint blob holds {len(raw)} bytes, manifest declares {total * 4}"
        )
    flat = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    params = {}
    offset = 0
    for layer in layers:
        size = int(np.prod(layer["shape"]))
        params[layer["name"]] = flat[offset : offset + size].reshape(layer["shape"])
        offset += size
    return params, manifest.get("hyper", {})
