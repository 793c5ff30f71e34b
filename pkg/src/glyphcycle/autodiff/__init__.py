from .ops import (
    add,
    concat_channels,
    conv2d,
    conv_transpose2d,
    instance_norm,
    leaky_relu,
    linear,
    pointwise,
    reduce_loss,
    relu,
    residual_add,
    scale,
    sigmoid,
    softmax,
    softmax_cross_entropy,
    spatial_mean,
    sub,
    tanh,
)
from .optim import Adam, AdamState, LrSchedule, adam_step, lr_at_epoch
from .tensor import Tape, Tensor, default_tape, no_grad

__all__ = [
    "Adam",
    "AdamState",
    "LrSchedule",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "concat_channels",
    "conv2d",
    "conv_transpose2d",
    "default_tape",
    "instance_norm",
    "leaky_relu",
    "linear",
    "lr_at_epoch",
    "no_grad",
    "pointwise",
    "reduce_loss",
    "relu",
    "residual_add",
    "scale",
    "sigmoid",
    "softmax",
    "softmax_cross_entropy",
    "spatial_mean",
    "sub",
    "tanh",
]
