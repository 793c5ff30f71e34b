"""Content accuracy and Gram-matrix style discrepancy.

Both metrics run on a small convolutional classifier trained on the toy or
user data; its second conv block is the style layer.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .autodiff import ops
from .autodiff.optim import Adam
from .autodiff.tensor import Tensor, no_grad
from .errors import ConfigError, DimensionError
from .nets import STYLE_LAYER, ClassifierConfig, build_classifier


def gram_matrix(feature_map, normalize=True):
    """Channel inner products over spatial positions, divided by H*W when ``normalize``."""
    fm = feature_map.data if isinstance(feature_map, Tensor) else np.asarray(feature_map)
    if fm.ndim != 4 or fm.shape[0] != 1:
        raise DimensionError("gram_matrix takes one sample's (1, C, H, W) feature map", fm.shape)
    _, c, h, w = fm.shape
    flat = fm.reshape(c, h * w).astype(np.float64)
    g = flat @ flat.T
    if normalize:
        g /= h * w
    return 0.5 * (g + g.T)


@dataclass
class StyleRepresentation:
    gram: np.ndarray
    layer_id: str
    n_samples: int


def _stack_batch(samples):
    arrs = [s.data if isinstance(s, Tensor) else np.asarray(s, dtype=np.float32) for s in samples]
    return np.concatenate([a.reshape((1,) + a.shape[-3:]) for a in arrs], axis=0)


class Classifier:
    """A trained classifier stack plus the label set it predicts."""

    def __init__(self, stack, classes):
        self.stack = stack
        self.classes = list(classes)
        self.index = {c: i for i, c in enumerate(self.classes)}

    def _forward(self, batch, taps=None):
        with no_grad():
            return self.stack.forward(Tensor(batch), taps).data

    def logits(self, samples, batch_size=64):
        batch = _stack_batch(samples)
        return np.concatenate([self._forward(batch[i : i + batch_size]) for i in range(0, len(batch), batch_size)])

    def features(self, samples, layer_id=STYLE_LAYER, batch_size=64):
        batch = _stack_batch(samples)
        out = []
        for i in range(0, len(batch), batch_size):
            taps = {}
            self._forward(batch[i : i + batch_size], taps)
            out.append(taps[layer_id].data)
        return np.concatenate(out)

    def predict(self, samples):
        return [self.classes[i] for i in self.logits(samples).argmax(axis=1)]


def style_representation(classifier, samples, layer_id=STYLE_LAYER):
    samples = list(samples)
    if not samples:
        raise ConfigError("style representation of an empty set")
    feats = classifier.features(samples, layer_id)
    total = np.zeros((feats.shape[1], feats.shape[1]))
    for f in feats:
        total += gram_matrix(f[None])
    return StyleRepresentation(total / len(feats), layer_id, len(feats))


def style_discrepancy(rep_a, rep_b):
    """RMS over all Gram entries of rep_a - rep_b."""
    a = rep_a.gram if isinstance(rep_a, StyleRepresentation) else np.asarray(rep_a)
    b = rep_b.gram if isinstance(rep_b, StyleRepresentation) else np.asarray(rep_b)
    if isinstance(rep_a, StyleRepresentation) and isinstance(rep_b, StyleRepresentation):
        if rep_a.layer_id != rep_b.layer_id:
            raise ConfigError(f"style layers differ: {rep_a.layer_id} vs {rep_b.layer_id}")
    if a.shape != b.shape:
        raise DimensionError("style representations differ in size", a.shape, b.shape)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def self_split_discrepancy(classifier, samples, seed=0):
    """Discrepancy between two random halves of one style set."""
    samples = list(samples)
    if len(samples) < 2:
        raise ConfigError("self-split needs at least two samples")
    order = np.random.default_rng(seed).permutation(len(samples))
    half = len(samples) // 2
    a = style_representation(classifier, [samples[i] for i in order[:half]])
    b = style_representation(classifier, [samples[i] for i in order[half:]])
    return style_discrepancy(a, b)


@dataclass
class AccuracyReport:
    top1: float
    top5: float
    n_evaluated: int
    per_class: dict = field(default_factory=dict)  # label -> (top1 hits, count)


def content_accuracy(classifier, samples, labels):
    samples, labels = list(samples), list(labels)
    if not samples:
        raise ConfigError("content accuracy of an empty set")
    if len(samples) != len(labels):
        raise DimensionError("one label per sample", (len(samples),), (len(labels),))
    unknown = sorted({lab for lab in labels if lab not in classifier.index}, key=str)
    if unknown:
        raise ConfigError(f"labels unknown to the classifier: {unknown}")
    logits = np.asarray(classifier.logits(samples))
    k = min(5, logits.shape[1])
    ranked = np.argsort(-logits, axis=1, kind="stable")
    truth = np.array([classifier.index[lab] for lab in labels])
    hit1 = ranked[:, 0] == truth
    hit5 = (ranked[:, :k] == truth[:, None]).any(axis=1)
    per_class = defaultdict(lambda: [0, 0])
    for lab, h in zip(labels, hit1):
        per_class[lab][0] += int(h)
        per_class[lab][1] += 1
    return AccuracyReport(float(hit1.mean()), float(hit5.mean()), len(samples), {k_: tuple(v) for k_, v in per_class.items()})


def _stratified_holdout(labels, fraction, rng):
    by_class = defaultdict(list)
    for i, lab in enumerate(labels):
        by_class[lab].append(i)
    train, held = [], []
    for lab in sorted(by_class, key=str):
        idx = list(rng.permutation(by_class[lab]))
        n_held = min(int(len(idx) * fraction), len(idx) - 1)
        held += idx[:n_held]
        train += idx[n_held:]
    return sorted(train), sorted(held)


def train_classifier(samples, labels, epochs=30, seed=0, holdout=0.25, lr=2e-3, batch_size=16,
                     widths=(32, 64), kernel=5, classes=None):
    """Cross-entropy + Adam on (1, C, S, S) samples.

    Returns (classifier, held-out top-1); the held-out fraction is taken per
    class and is None when ``holdout`` is 0.
    """
    samples, labels = list(samples), list(labels)
    if not samples:
        raise ConfigError("no training samples for the classifier")
    present = set(labels)
    classes = sorted(present, key=str) if classes is None else list(classes)
    missing = [c for c in classes if c not in present]
    if missing:
        raise ConfigError(f"classes absent from training data: {missing}")
    if len(classes) < 2:
        raise ConfigError("classifier needs at least two classes")

    rng = np.random.default_rng([seed, 7])
    train_idx, held_idx = _stratified_holdout(labels, holdout, rng) if holdout else (list(range(len(samples))), [])
    batch = _stack_batch(samples)
    index = {c: i for i, c in enumerate(classes)}
    targets = np.array([index[lab] for lab in labels])
    cfg = ClassifierConfig(n_classes=len(classes), image_size=batch.shape[-1], in_channels=batch.shape[1], widths=widths, kernel=kernel)
    stack = build_classifier(cfg, seed=[seed, 8])
    opt = Adam(stack.params)
    train_idx = np.array(train_idx)
    for _ in range(epochs):
        order = train_idx[rng.permutation(len(train_idx))]
        for start in range(0, len(order), batch_size):
            sel = order[start : start + batch_size]
            opt.zero_grad()
            loss = ops.softmax_cross_entropy(stack.forward(Tensor(batch[sel])), targets[sel])
            loss.backward()
            opt.step(lr)
    clf = Classifier(stack, classes)
    held_acc = None
    if held_idx:
        held_acc = content_accuracy(clf, [batch[i] for i in held_idx], [labels[i] for i in held_idx]).top1
    return clf, held_acc


def write_metrics(path, values):
    """Flat ``key value`` lines, keys sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(values):
            v = values[key]
            fh.write(f"{key} {v:.6g}\n" if isinstance(v, float) else f"{key} {v}\n")


def read_metrics(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                key, value = line.split(" ", 1)
                out[key] = value.strip()
    return out


CLASSES_KEY = "clf.classes"


def save_classifier(clf):
    from .checkpoint import Checkpoint, encode

    tensors = {n: p.data for n, p in clf.stack.params.items()}
    tensors[CLASSES_KEY] = np.array(clf.classes, dtype=np.float32)
    return encode(Checkpoint(0, 0, tensors))


def load_classifier(data):
    """Rebuild a classifier from its snapshot; widths and kernel come from tensor shapes."""
    from .checkpoint import decode, restore_params

    t = decode(data).tensors
    if CLASSES_KEY not in t:
        raise ConfigError("snapshot carries no classifier label set")
    classes = [int(c) for c in t[CLASSES_KEY]]
    w0 = t["clf.conv0.weight"]
    w1 = t[f"clf.{STYLE_LAYER}.weight"]
    cfg = ClassifierConfig(
        n_classes=len(classes), in_channels=w0.shape[1], widths=(w0.shape[0], w1.shape[0]), kernel=w0.shape[2]
    )
    stack = build_classifier(cfg)
    restore_params(stack.params, t)
    return Classifier(stack, classes)
