"""Minimal NCHW tensor ops with exact float64 backward passes.

Only what the residual super-resolver needs: 3x3 stride-1 convolution with
reflect padding, ReLU, and mean-absolute-error loss. Convolutions are
im2col + matmul so the heavy lifting stays in BLAS. Every backward here is
the exact adjoint of its forward (verified against central finite
differences in the test suite).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _check_input(x: np.ndarray) -> None:
    if x.ndim != 4:
        raise ValueError(f"expected an (N, C, H, W) tensor, got shape {x.shape}")
    if x.shape[2] < 2 or x.shape[3] < 2:
        raise ValueError(f"spatial dims must be >= 2 for reflect padding, got {x.shape}")


def _check_kernel(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> None:
    if weight.ndim != 4 or weight.shape[2:] != (3, 3):
        raise ValueError(f"expected an (O, C, 3, 3) kernel, got shape {weight.shape}")
    if weight.shape[1] != x.shape[1]:
        raise ValueError(f"kernel expects {weight.shape[1]} channels, input has {x.shape[1]}")
    if bias.shape != (weight.shape[0],):
        raise ValueError(f"bias shape {bias.shape} does not match {weight.shape[0]} filters")


def reflect_pad1(x: np.ndarray) -> np.ndarray:
    """Pad the two spatial axes by one sample, mirrored about the edge."""
    return np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="reflect")


def reflect_pad1_adjoint(gp: np.ndarray) -> np.ndarray:
    """Adjoint of reflect_pad1: fold border gradients back onto their sources."""
    g = gp[:, :, 1:-1, 1:-1].copy()
    g[:, :, 1, :] += gp[:, :, 0, 1:-1]
    g[:, :, -2, :] += gp[:, :, -1, 1:-1]
    g[:, :, :, 1] += gp[:, :, 1:-1, 0]
    g[:, :, :, -2] += gp[:, :, 1:-1, -1]
    g[:, :, 1, 1] += gp[:, :, 0, 0]
    g[:, :, 1, -2] += gp[:, :, 0, -1]
    g[:, :, -2, 1] += gp[:, :, -1, 0]
    g[:, :, -2, -2] += gp[:, :, -1, -1]
    return g


def _im2col(xp: np.ndarray) -> np.ndarray:
    """(N, C, H+2, W+2) -> (N*H*W, C*9) patch matrix."""
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (N, C, H, W, 3, 3)
    n, c, h, w = win.shape[:4]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * 9)


def conv2d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 cross-correlation, stride 1, reflect pad 1; spatial dims preserved."""
    _check_input(x)
    _check_kernel(x, weight, bias)
    n, _, h, w = x.shape
    o = weight.shape[0]
    cols = _im2col(reflect_pad1(x))
    out = cols @ weight.reshape(o, -1).T + bias
    return out.reshape(n, h, w, o).transpose(0, 3, 1, 2)


def conv2d_backward(x: np.ndarray, weight: np.ndarray, grad_out: np.ndarray):
    """Gradients of a scalar loss through conv2d_forward.

    Returns (grad_input, grad_kernel, grad_bias) for the saved forward
    input ``x`` and upstream gradient ``grad_out``.
    """
    _check_input(x)
    if grad_out.shape != (x.shape[0], weight.shape[0], x.shape[2], x.shape[3]):
        raise ValueError(f"grad_out shape {grad_out.shape} does not match the forward output")
    n, c, h, w = x.shape
    o = weight.shape[0]

    g_cols = grad_out.transpose(0, 2, 3, 1).reshape(n * h * w, o)
    grad_bias = g_cols.sum(axis=0)
    grad_kernel = (g_cols.T @ _im2col(reflect_pad1(x))).reshape(o, c, 3, 3)

    # grad wrt the padded input is the full correlation of grad_out with the
    # spatially flipped, channel-transposed kernel
    back_kernel = weight[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    gz = np.pad(grad_out, ((0, 0), (0, 0), (2, 2), (2, 2)))
    cols = _im2col(gz)  # windows over the (H+2, W+2) padded-input positions
    gxp = cols @ back_kernel.reshape(c, -1).T
    gxp = gxp.reshape(n, h + 2, w + 2, c).transpose(0, 3, 1, 2)
    return reflect_pad1_adjoint(gxp), grad_kernel, grad_bias


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    # subgradient at 0 is taken as 0
    return grad_out * (x > 0.0)


def l1_loss_forward(pred: np.ndarray, target: np.ndarray) -> float:
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.abs(pred - target).mean())


def l1_loss_backward(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return np.sign(pred - target) / pred.size
