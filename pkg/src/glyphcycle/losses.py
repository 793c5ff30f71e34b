"""Adversarial, cycle-consistency and total objectives.

All functions take patch maps or images as Tensors and return 0-d Tensors
that stay on the tape.
"""

from __future__ import annotations

from .autodiff import ops
from .errors import ConfigError

GAN_MODES = ("nonsaturating", "literal")


def gan_loss_generator(d_out_fake, mode="nonsaturating"):
    """-mean log D(G(x)); ``literal`` uses mean log(1 - D(G(x))) instead."""
    if mode == "nonsaturating":
        return ops.reduce_loss(d_out_fake, "mean_neg_log")
    if mode == "literal":
        return ops.scale(ops.reduce_loss(d_out_fake, "mean_neg_log1m"), -1.0)
    raise ConfigError(f"unknown gan mode {mode!r}")


def gan_loss_discriminator(d_out_real, d_out_fake):
    """Half the cross-entropy of calling real maps 1 and fake maps 0."""
    real = ops.reduce_loss(d_out_real, "mean_neg_log")
    fake = ops.reduce_loss(d_out_fake, "mean_neg_log1m")
    return ops.scale(ops.add(real, fake), 0.5)


def cycle_loss(x, x_rec, y, y_rec):
    return ops.add(ops.reduce_loss(x_rec, "mean_abs", x), ops.reduce_loss(y_rec, "mean_abs", y))


def total_loss(gan_g, gan_f, cycle, lambda_cycle=10.0):
    return ops.add(ops.add(gan_g, gan_f), ops.scale(cycle, lambda_cycle))
