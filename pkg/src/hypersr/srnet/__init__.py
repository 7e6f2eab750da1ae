"""Residual super-resolution network: ops, architecture, training."""

from .network import (
    forward,
    forward_with_cache,
    backward,
    init_params,
    load_checkpoint,
    param_names,
    save_checkpoint,
)
from .nn import (
    conv2d_backward,
    conv2d_forward,
    l1_loss_backward,
    l1_loss_forward,
    relu_backward,
    relu_forward,
)
from .training import (
    AdamState,
    ResidualSRNet,
    TrainConfig,
    adam_step,
    super_resolve,
    train_network,
)

__all__ = [
    "AdamState",
    "ResidualSRNet",
    "TrainConfig",
    "adam_step",
    "backward",
    "conv2d_backward",
    "conv2d_forward",
    "forward",
    "forward_with_cache",
    "init_params",
    "l1_loss_backward",
    "l1_loss_forward",
    "load_checkpoint",
    "param_names",
    "relu_backward",
    "relu_forward",
    "save_checkpoint",
    "super_resolve",
    "train_network",
]
