"""Generator, PatchGAN discriminator and evaluation classifier.

A :class:`LayerStack` is a recipe (list of :class:`Layer`) plus a flat dict of
named parameters following ``component.layer.kind`` naming, e.g.
``genG.enc0.weight`` or ``genG.res3.norm1.gain``. The checkpoint format keys
on these names, so they must stay stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import ops
from .autodiff.ops import conv_transpose_extent
from .autodiff.tensor import Tensor
from .errors import ConfigError, DimensionError

INIT_STD = 0.02


@dataclass(frozen=True)
class Layer:
    name: str
    kind: str  # conv | deconv | resblock | denseblock | pool | linear
    c_in: int
    c_out: int
    k: int = 0
    stride: int = 1
    pad: int = 0
    output_padding: int = 0
    norm: bool = False
    act: str | None = None


@dataclass
class LayerStack:
    component: str
    layers: list[Layer]
    params: dict[str, Tensor] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def scope(self, layer_name):
        prefix = f"{self.component}.{layer_name}."
        return {k[len(prefix) :]: v for k, v in self.params.items() if k.startswith(prefix)}

    def set_trainable(self, flag):
        for p in self.params.values():
            p.requires_grad = flag
            if not flag:
                p.grad = None

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def n_params(self):
        return sum(p.size for p in self.params.values())

    def __call__(self, x):
        return self.forward(x)

    def forward(self, x, taps=None):
        """Run the recipe. ``taps`` (a dict) collects named intermediate outputs."""
        kind = self.meta.get("kind")
        if kind == "generator":
            return _generator_forward(self, x, taps)
        out = x
        for layer in self.layers:
            out = apply_layer(layer, self.scope(layer.name), out)
            if taps is not None:
                taps[layer.name] = out
        return out


# parameter creation


def _conv_params(c_in, c_out, k, norm, transposed=False, bias=True):
    shape = (c_in, c_out, k, k) if transposed else (c_out, c_in, k, k)
    specs = {"weight": ("normal", shape)}
    if bias:
        specs["bias"] = ("zeros", (c_out,))
    if norm:
        specs["gain"] = ("ones", (c_out,))
        specs["shift"] = ("zeros", (c_out,))
    return specs


def _layer_param_specs(layer):
    if layer.kind in ("conv", "deconv"):
        return _conv_params(layer.c_in, layer.c_out, layer.k, layer.norm, transposed=layer.kind == "deconv")
    if layer.kind == "resblock":
        c = layer.c_in
        specs = {}
        for i in (0, 1):
            for key, spec in _conv_params(c, c, 3, True).items():
                specs[f"{'conv' if key in ('weight', 'bias') else 'norm'}{i}.{key}"] = spec
        return specs
    if layer.kind == "denseblock":
        return {
            "norm.gain": ("ones", (layer.c_in,)),
            "norm.shift": ("zeros", (layer.c_in,)),
            "conv.weight": ("normal", (layer.c_out, layer.c_in, 3, 3)),
            "conv.bias": ("zeros", (layer.c_out,)),
        }
    if layer.kind == "linear":
        return {"weight": ("normal", (layer.c_out, layer.c_in)), "bias": ("zeros", (layer.c_out,))}
    return {}


def init_params(component, layers, seed):
    """Gaussian(0, 0.02) weights, zero biases/shifts, unit gains, in recipe order."""
    rng = np.random.default_rng(seed)
    params = {}
    for layer in layers:
        for local, (how, shape) in _layer_param_specs(layer).items():
            if how == "normal":
                data = rng.normal(0.0, INIT_STD, size=shape)
            elif how == "ones":
                data = np.ones(shape)
            else:
                data = np.zeros(shape)
            name = f"{component}.{layer.name}.{local}"
            params[name] = Tensor(data.astype(np.float32), requires_grad=True, name=name)
    return params


# forward pieces


def apply_layer(layer, p, x):
    if layer.kind == "conv":
        out = ops.conv2d(x, p["weight"], p.get("bias"), layer.stride, layer.pad)
    elif layer.kind == "deconv":
        out = ops.conv_transpose2d(x, p["weight"], p.get("bias"), layer.stride, layer.pad, layer.output_padding)
    elif layer.kind == "resblock":
        return resnet_block_forward(x, p)
    elif layer.kind == "denseblock":
        return dense_block_forward(x if isinstance(x, list) else [x], p)
    elif layer.kind == "pool":
        return ops.spatial_mean(x)
    elif layer.kind == "linear":
        return ops.linear(x, p["weight"], p["bias"])
    else:
        raise ConfigError(f"unknown layer kind {layer.kind!r}")
    if layer.norm:
        out = ops.instance_norm(out, p["gain"], p["shift"])
    if layer.act is not None:
        out = ops.pointwise(out, layer.act)
    return out


def resnet_block_forward(x, p):
    """x + Norm(Conv(ReLU(Norm(Conv(x)))))."""
    c = p["conv0.weight"].shape[1]
    if x.ndim != 4 or x.shape[1] != c:
        raise DimensionError("resnet block input channels differ from block width", x.shape, p["conv0.weight"].shape)
    h = ops.conv2d(x, p["conv0.weight"], p["conv0.bias"], 1, 1)
    h = ops.relu(ops.instance_norm(h, p["norm0.gain"], p["norm0.shift"]))
    h = ops.conv2d(h, p["conv1.weight"], p["conv1.bias"], 1, 1)
    h = ops.instance_norm(h, p["norm1.gain"], p["norm1.shift"])
    return ops.residual_add(h, x)


def dense_block_forward(xs, p):
    """Conv(ReLU(Norm(concat(xs)))) emitting the growth-rate channels."""
    if not xs:
        raise DimensionError("dense block needs at least one input")
    z = ops.concat_channels(xs)
    z = ops.relu(ops.instance_norm(z, p["norm.gain"], p["norm.shift"]))
    return ops.conv2d(z, p["conv.weight"], p["conv.bias"], 1, 1)


def _generator_forward(stack, x, taps):
    out = x
    xs = None
    for layer in stack.layers:
        p = stack.scope(layer.name)
        if layer.kind == "denseblock":
            xs = [out] if xs is None else xs
            out = dense_block_forward(xs, p)
            xs.append(out)
        else:
            out = apply_layer(layer, p, out)
        if taps is not None:
            taps[layer.name] = out
    return out


# builders


@dataclass
class GeneratorConfig:
    image_size: int = 64
    in_channels: int = 1
    base_filters: int = 64
    transfer_kind: str = "resnet"
    transfer_blocks: int | None = None
    growth_rate: int | None = None

    def __post_init__(self):
        if self.transfer_kind not in ("resnet", "densenet"):
            raise ConfigError(f"transfer_kind must be resnet or densenet, got {self.transfer_kind!r}")
        if self.transfer_blocks is None:
            self.transfer_blocks = 6 if self.transfer_kind == "resnet" else 5
        if self.growth_rate is None:
            self.growth_rate = 4 * self.base_filters
        if self.image_size % 4 or self.image_size < 8:
            raise ConfigError(f"image_size must be a multiple of 4 and >= 8, got {self.image_size}")
        if min(self.in_channels, self.base_filters, self.transfer_blocks, self.growth_rate) < 1:
            raise ConfigError("generator widths and block count must be positive")


def generator_layers(cfg):
    bf = cfg.base_filters
    enc = 4 * bf
    layers = [
        Layer("enc0", "conv", cfg.in_channels, bf, k=7, stride=1, pad=3, norm=True, act="relu"),
        Layer("enc1", "conv", bf, 2 * bf, k=3, stride=2, pad=1, norm=True, act="relu"),
        Layer("enc2", "conv", 2 * bf, enc, k=3, stride=2, pad=1, norm=True, act="relu"),
    ]
    if cfg.transfer_kind == "resnet":
        layers += [Layer(f"res{i}", "resblock", enc, enc) for i in range(cfg.transfer_blocks)]
        dec_in = enc
    else:
        g = cfg.growth_rate
        layers += [Layer(f"dense{i}", "denseblock", enc + g * i, g) for i in range(cfg.transfer_blocks)]
        dec_in = g
    layers += [
        Layer("dec0", "deconv", dec_in, 2 * bf, k=3, stride=2, pad=1, output_padding=1, norm=True, act="relu"),
        Layer("dec1", "deconv", 2 * bf, bf, k=3, stride=2, pad=1, output_padding=1, norm=True, act="relu"),
        Layer("dec2", "deconv", bf, cfg.in_channels, k=7, stride=1, pad=3, norm=False, act="tanh"),
    ]
    return layers


def build_generator(cfg, component="genG", seed=0):
    layers = generator_layers(cfg)
    return LayerStack(component, layers, init_params(component, layers, seed), meta={"kind": "generator", "config": cfg})


@dataclass
class DiscriminatorConfig:
    in_channels: int = 1
    base_filters: int = 64
    n_layers: int = 3

    def __post_init__(self):
        if self.n_layers < 1 or self.base_filters < 1 or self.in_channels < 1:
            raise ConfigError("discriminator needs n_layers, base_filters, in_channels >= 1")


def discriminator_layers(cfg):
    bf = cfg.base_filters
    layers = [Layer("l0", "conv", cfg.in_channels, bf, k=4, stride=2, pad=1, norm=False, act="leaky_relu")]
    c = bf
    for i in range(1, cfg.n_layers):
        c_next = bf * min(2**i, 8)
        layers.append(Layer(f"l{i}", "conv", c, c_next, k=4, stride=2, pad=1, norm=True, act="leaky_relu"))
        c = c_next
    c_next = bf * min(2**cfg.n_layers, 8)
    n = cfg.n_layers
    layers.append(Layer(f"l{n}", "conv", c, c_next, k=4, stride=1, pad=1, norm=True, act="leaky_relu"))
    layers.append(Layer(f"l{n + 1}", "conv", c_next, 1, k=4, stride=1, pad=1, norm=False, act="sigmoid"))
    return layers


def build_discriminator(cfg, component="discG", seed=0):
    layers = discriminator_layers(cfg)
    return LayerStack(component, layers, init_params(component, layers, seed), meta={"kind": "discriminator", "config": cfg})


def receptive_field(layers):
    """Receptive field of one output unit: r <- r + (k - 1) * jump, jump <- jump * stride."""
    r, jump = 1, 1
    for layer in layers:
        if layer.kind in ("conv", "deconv") and layer.k:
            r += (layer.k - 1) * jump
            jump *= layer.stride
    return r


@dataclass
class ClassifierConfig:
    n_classes: int
    image_size: int = 32
    in_channels: int = 1
    widths: tuple = (32, 64)
    kernel: int = 5

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError(f"classifier needs at least 2 classes, got {self.n_classes}")
        if self.image_size % 4:
            raise ConfigError("classifier image_size must be a multiple of 4")


STYLE_LAYER = "conv1"


def classifier_layers(cfg):
    w0, w1 = cfg.widths
    k, p = cfg.kernel, cfg.kernel // 2
    return [
        Layer("conv0", "conv", cfg.in_channels, w0, k=k, stride=2, pad=p, norm=True, act="relu"),
        Layer(STYLE_LAYER, "conv", w0, w1, k=k, stride=2, pad=p, norm=True, act="relu"),
        Layer("pool", "pool", w1, w1),
        Layer("fc", "linear", w1, cfg.n_classes),
    ]


def build_classifier(cfg, component="clf", seed=0):
    layers = classifier_layers(cfg)
    return LayerStack(component, layers, init_params(component, layers, seed), meta={"kind": "classifier", "config": cfg})


# shape bookkeeping


def generator_output_size(cfg, size=None):
    """Spatial extent after encoder and decoder, from shape arithmetic alone."""
    s = cfg.image_size if size is None else size
    for layer in generator_layers(cfg):
        if layer.kind == "conv":
            s = (s + 2 * layer.pad - layer.k) // layer.stride + 1
        elif layer.kind == "deconv":
            s = conv_transpose_extent(s, layer.k, layer.stride, layer.pad, layer.output_padding)
    return s


def count_params(stack, prefix=None, kinds=("weight", "bias")):
    """Sum sizes of parameters whose name starts with ``prefix`` and ends with one of ``kinds``."""
    prefixes = [prefix] if isinstance(prefix, str) else prefix
    total = 0
    for name, p in stack.params.items():
        local = name.split(".", 1)[1]
        if prefixes is not None and not any(local.startswith(pf + ".") for pf in prefixes):
            continue
        if kinds is not None and name.rsplit(".", 1)[1] not in kinds:
            continue
        total += p.size
    return total


def transfer_prefixes(stack):
    return [layer.name for layer in stack.layers if layer.kind in ("resblock", "denseblock")]
