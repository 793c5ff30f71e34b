"""CycleGAN training: two generators, two PatchGAN discriminators, batch size 1."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .autodiff.optim import AdamState, LrSchedule, adam_step, lr_at_epoch
from .autodiff.tensor import default_tape, no_grad
from .errors import ConfigError, DimensionError, NonFiniteError
from .losses import GAN_MODES, cycle_loss, gan_loss_discriminator, gan_loss_generator, total_loss
from .nets import DiscriminatorConfig, GeneratorConfig, build_discriminator, build_generator

MASK64 = (1 << 64) - 1


def splitmix64(state):
    """Advance a 64-bit state; used to derive one shuffle seed per epoch."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass
class TrainConfig:
    lambda_cycle: float = 10.0
    base_rate: float = 2e-4
    flat_epochs: int = 100
    decay_epochs: int = 100
    total_epochs: int | None = None
    seed: int = 0
    image_size: int = 64
    in_channels: int = 1
    base_filters: int = 64
    transfer_kind: str = "resnet"
    transfer_blocks: int | None = None
    growth_rate: int | None = None
    disc_base_filters: int = 64
    disc_layers: int | None = None
    checkpoint_every: int = 10
    gan_mode: str = "nonsaturating"
    batch_size: int = 1

    def __post_init__(self):
        if self.lambda_cycle < 0:
            raise ConfigError(f"lambda_cycle must be >= 0, got {self.lambda_cycle}")
        if self.batch_size != 1:
            raise ConfigError("batch_size is fixed at 1")
        if self.gan_mode not in GAN_MODES:
            raise ConfigError(f"gan_mode must be one of {GAN_MODES}")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.total_epochs is None:
            self.total_epochs = self.flat_epochs + self.decay_epochs
        if self.disc_layers is None:
            self.disc_layers = 3 if self.image_size >= 64 else 2
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be >= 0")
        self.generator_config()

    @property
    def schedule(self):
        return LrSchedule(self.base_rate, self.flat_epochs, self.decay_epochs)

    def generator_config(self):
        return GeneratorConfig(
            image_size=self.image_size,
            in_channels=self.in_channels,
            base_filters=self.base_filters,
            transfer_kind=self.transfer_kind,
            transfer_blocks=self.transfer_blocks,
            growth_rate=self.growth_rate,
        )

    def discriminator_config(self):
        return DiscriminatorConfig(self.in_channels, self.disc_base_filters, self.disc_layers)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class LossReport:
    gan_g: float
    gan_f: float
    cycle: float
    disc_g: float
    disc_f: float

    NAMES = ("gan_g", "gan_f", "cycle", "disc_g", "disc_f")

    def as_tuple(self):
        return tuple(getattr(self, n) for n in self.NAMES)

    def total(self, lambda_cycle):
        return self.gan_g + self.gan_f + lambda_cycle * self.cycle


@dataclass
class CycleGAN:
    """Full training state: networks, optimizer moments, position, RNG."""

    cfg: TrainConfig
    G: object
    F: object
    D_G: object
    D_F: object
    opt_gen: AdamState
    opt_disc: AdamState
    epoch: int = 0
    iteration: int = 0
    rng_state: int = 0

    @classmethod
    def create(cls, cfg):
        gcfg, dcfg = cfg.generator_config(), cfg.discriminator_config()
        G = build_generator(gcfg, "genG", seed=[cfg.seed, 1])
        F = build_generator(gcfg, "genF", seed=[cfg.seed, 2])
        D_G = build_discriminator(dcfg, "discG", seed=[cfg.seed, 3])
        D_F = build_discriminator(dcfg, "discF", seed=[cfg.seed, 4])
        return cls(
            cfg,
            G,
            F,
            D_G,
            D_F,
            AdamState.fresh({**G.params, **F.params}),
            AdamState.fresh({**D_G.params, **D_F.params}),
            rng_state=splitmix64(cfg.seed),
        )

    @property
    def gen_params(self):
        return {**self.G.params, **self.F.params}

    @property
    def disc_params(self):
        return {**self.D_G.params, **self.D_F.params}

    def networks(self):
        return (self.G, self.F, self.D_G, self.D_F)

    def all_params(self):
        out = {}
        for net in self.networks():
            out.update(net.params)
        return out

    def zero_grad(self):
        for net in self.networks():
            net.zero_grad()


def _check_finite(named, step):
    for name, t in named:
        if not t.is_finite():
            raise NonFiniteError(name, step)


def _check_input(state, t, what):
    c, s = state.cfg.in_channels, state.cfg.image_size
    if t.shape != (1, c, s, s):
        raise DimensionError(f"{what} does not match the configured image", t.shape, (1, c, s, s))


def generator_step(state, x, y, rate):
    """Update G and F on the total objective; discriminators are frozen.

    Returns the three generator-side losses and the fakes for the
    discriminator step.
    """
    cfg = state.cfg
    state.zero_grad()
    state.D_G.set_trainable(False)
    state.D_F.set_trainable(False)
    try:
        fake_y = state.G(x)
        rec_x = state.F(fake_y)
        fake_x = state.F(y)
        rec_y = state.G(fake_x)
        gan_g = gan_loss_generator(state.D_G(fake_y), cfg.gan_mode)
        gan_f = gan_loss_generator(state.D_F(fake_x), cfg.gan_mode)
        cyc = cycle_loss(x, rec_x, y, rec_y)
        total = total_loss(gan_g, gan_f, cyc, cfg.lambda_cycle)
        step = state.opt_gen.t
        if not total.is_finite():
            default_tape().reset()
            _check_finite(
                [("G(x)", fake_y), ("F(G(x))", rec_x), ("F(y)", fake_x), ("G(F(y))", rec_y),
                 ("loss_gan_G", gan_g), ("loss_gan_F", gan_f), ("loss_cycle", cyc), ("loss_total", total)],
                step,
            )
        total.backward()
    finally:
        state.D_G.set_trainable(True)
        state.D_F.set_trainable(True)
    adam_step(state.gen_params, state.opt_gen, rate)
    return (gan_g.item(), gan_f.item(), cyc.item()), (fake_y.detach(), fake_x.detach())


def discriminator_step(state, x, y, fake_y, fake_x, rate):
    state.zero_grad()
    d_g = gan_loss_discriminator(state.D_G(y), state.D_G(fake_y))
    d_f = gan_loss_discriminator(state.D_F(x), state.D_F(fake_x))
    if not (d_g.is_finite() and d_f.is_finite()):
        default_tape().reset()
        _check_finite([("loss_disc_G", d_g), ("loss_disc_F", d_f)], state.opt_disc.t)
    (d_g + d_f).backward()
    adam_step(state.disc_params, state.opt_disc, rate)
    return d_g.item(), d_f.item()


def train_step(state, x, y, rate):
    """Generators first, then both discriminators on detached fakes."""
    _check_input(state, x, "x")
    _check_input(state, y, "y")
    (gan_g, gan_f, cyc), (fake_y, fake_x) = generator_step(state, x, y, rate)
    d_g, d_f = discriminator_step(state, x, y, fake_y, fake_x, rate)
    return LossReport(gan_g, gan_f, cyc, d_g, d_f)


def epoch_length(n_x, n_y):
    if n_x < 1 or n_y < 1:
        raise ConfigError(f"both styles need at least one training sample, got {n_x} and {n_y}")
    return max(n_x, n_y)


def epoch_order(rng_state, n_x, n_y):
    """Index sequences for one epoch: fresh shuffles, the smaller set wrapping with reshuffles."""
    length = epoch_length(n_x, n_y)
    rng = np.random.default_rng(rng_state)

    def stream(n):
        reps = math.ceil(length / n)
        return np.concatenate([rng.permutation(n) for _ in range(reps)])[:length]

    return stream(n_x), stream(n_y)


class Trainer:
    """Walks the unpaired sample streams and applies :func:`train_step`.

    The order for an epoch is derived from ``state.rng_state`` alone, so a
    state restored mid-epoch picks up exactly where it stopped.
    """

    def __init__(self, state, xs, ys):
        self.state = state
        self.xs = list(xs)
        self.ys = list(ys)
        self.length = epoch_length(len(self.xs), len(self.ys))
        self._order = None

    def _current_order(self):
        if self._order is None or self._order[0] != (self.state.epoch, self.state.rng_state):
            self._order = ((self.state.epoch, self.state.rng_state), epoch_order(self.state.rng_state, len(self.xs), len(self.ys)))
        return self._order[1]

    def rate(self):
        return lr_at_epoch(self.state.cfg.schedule, self.state.epoch)

    def step(self, rate=None):
        s = self.state
        ox, oy = self._current_order()
        i = s.iteration
        lr = self.rate() if rate is None else rate
        report = train_step(s, self.xs[ox[i]], self.ys[oy[i]], lr)
        record = (s.epoch, i, report, lr)
        s.iteration += 1
        if s.iteration >= self.length:
            s.iteration = 0
            s.epoch += 1
            s.rng_state = splitmix64(s.rng_state)
        return record

    def run(self, n_steps, rate=None, callback=None):
        out = []
        for _ in range(n_steps):
            rec = self.step(rate)
            out.append(rec)
            if callback is not None:
                callback(rec)
        return out

    def run_epoch(self, callback=None):
        start = self.state.epoch
        out = []
        while self.state.epoch == start:
            out.append(self.step())
            if callback is not None:
                callback(out[-1])
        return out


def translate(stack, t):
    with no_grad():
        return stack(t)
