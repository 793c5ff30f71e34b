"""Flat ``key=value`` run configuration.

Precedence, lowest to highest: built-in defaults, the GLYPHCYCLE_SEED
environment variable (seed only, and only if nothing else sets it), the
config file, command-line flags.
"""

from __future__ import annotations

import os
import typing
from dataclasses import asdict, dataclass, fields

from .data.split import SplitSpec
from .errors import ConfigError
from .trainer import TrainConfig

SEED_ENV = "GLYPHCYCLE_SEED"


@dataclass
class RunConfig:
    # training (mirrors TrainConfig)
    lambda_cycle: float = 10.0
    base_rate: float = 2e-4
    flat_epochs: int = 100
    decay_epochs: int = 100
    total_epochs: typing.Optional[int] = None
    seed: int = 0
    image_size: int = 64
    in_channels: int = 1
    base_filters: int = 64
    transfer_kind: str = "resnet"
    transfer_blocks: typing.Optional[int] = None
    growth_rate: typing.Optional[int] = None
    disc_base_filters: int = 64
    disc_layers: typing.Optional[int] = None
    checkpoint_every: int = 10
    gan_mode: str = "nonsaturating"
    # split
    r_a: float = 1.0
    r_b: float = 1.0
    # paths
    style_a: str = ""
    style_b: str = ""
    input: str = ""
    output: str = ""
    checkpoint: str = ""
    resume: str = ""
    # ingest
    preprocess: str = "standard"
    threshold: int = 128
    median_radius: int = 1
    # generate
    reverse: bool = False
    # evaluate
    generated: str = ""
    target: str = ""
    source: str = ""
    classifier: str = ""
    classifier_epochs: int = 30

    def train_config(self):
        names = set(TrainConfig.field_names())
        return TrainConfig(**{k: v for k, v in asdict(self).items() if k in names})

    def split_spec(self):
        return SplitSpec(self.r_a, self.r_b, self.seed)

    def validate(self):
        self.train_config()
        self.split_spec()
        if self.preprocess not in ("standard", "calligraphy"):
            raise ConfigError(f"preprocess must be standard or calligraphy, got {self.preprocess!r}")
        return self

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                v = "none"
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


_TYPES = typing.get_type_hints(RunConfig)


def _coerce(key, raw):
    hint = _TYPES[key]
    optional = typing.get_origin(hint) is typing.Union
    base = [a for a in typing.get_args(hint) if a is not type(None)][0] if optional else hint
    text = raw.strip()
    if optional and text.lower() in ("none", ""):
        return None
    try:
        if base is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if base is int:
            return int(text, 0)
        if base is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {base.__name__}") from None


def parse_pairs(lines, origin="config"):
    """Parse ``key=value`` lines; '#' starts a comment. Unknown keys are errors."""
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_pairs(fh, origin=path)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None


def resolve(file_path=None, overrides=None, env=None):
    env = os.environ if env is None else env
    values = {}
    if file_path:
        values.update(load_config_file(file_path))
    values.update(overrides or {})
    if "seed" not in values and env.get(SEED_ENV):
        values["seed"] = _coerce("seed", env[SEED_ENV])
    return RunConfig(**values).validate()


def parse_text(text):
    return RunConfig(**parse_pairs(text.splitlines())).validate()


def write_resolved(cfg, directory, name="config.txt"):
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cfg.to_text())
    return path
