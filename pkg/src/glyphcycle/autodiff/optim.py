from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DimensionError


@dataclass
class LrSchedule:
    """Constant rate for ``flat_epochs``, then a straight line down to zero."""

    base_rate: float = 2e-4
    flat_epochs: int = 100
    decay_epochs: int = 100

    def __post_init__(self):
        if self.base_rate < 0 or self.flat_epochs < 0 or self.decay_epochs < 0:
            raise ConfigError("learning-rate schedule fields must be non-negative")

    def rate(self, epoch):
        return lr_at_epoch(self, epoch)


def lr_at_epoch(sched, epoch):
    if epoch < 0:
        raise ConfigError(f"epoch must be non-negative, got {epoch}")
    if epoch < sched.flat_epochs:
        return sched.base_rate
    if sched.decay_epochs == 0:
        return 0.0
    remaining = 1.0 - (epoch - sched.flat_epochs) / sched.decay_epochs
    return max(0.0, sched.base_rate * remaining)


@dataclass
class AdamState:
    """Moments for an ordered list of named parameters."""

    names: list[str]
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params, **hyper):
        names = list(params)
        return cls(
            names=names,
            m={n: np.zeros_like(params[n].data) for n in names},
            v={n: np.zeros_like(params[n].data) for n in names},
            **hyper,
        )


@dataclass
class Adam:
    """Bias-corrected Adam over a named parameter dict.

    Parameters without a gradient this step are treated as having zero
    gradient, so moments of every parameter decay in lockstep.
    """

    params: dict
    state: AdamState = field(default=None)

    def __post_init__(self):
        if self.state is None:
            self.state = AdamState.fresh(self.params)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self, rate):
        adam_step(self.params, self.state, rate)


def adam_step(params, state, rate, grads=None):
    """One in-place Adam update; ``grads`` defaults to each param's ``.grad``."""
    if rate < 0:
        raise ConfigError(f"learning rate must be non-negative, got {rate}")
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    for name in state.names:
        p = params[name]
        g = p.grad if grads is None else grads[name]
        m, v = state.m[name], state.v[name]
        if m.shape != p.data.shape or v.shape != p.data.shape:
            raise DimensionError(f"adam moments for {name} do not match parameter", m.shape, p.data.shape)
        if g is None:
            g = np.zeros_like(p.data)
        elif g.shape != p.data.shape:
            raise DimensionError(f"gradient for {name} does not match parameter", g.shape, p.data.shape)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        if rate != 0.0:
            mhat = m / (1.0 - b1**t)
            vhat = v / (1.0 - b2**t)
            p.data -= (rate * mhat / (np.sqrt(vhat) + state.eps)).astype(p.data.dtype)
