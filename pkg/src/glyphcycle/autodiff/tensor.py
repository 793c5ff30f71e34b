"""Dense tensor with a reverse-mode tape.

Every differentiable op appends one record to the active :class:`Tape`;
``backward`` replays the records newest-first. Records are only written for
ops whose inputs require gradients and only while gradient mode is on.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        if dtype is None:
            dtype = DEFAULT_DTYPE
        arr = np.asarray(data, dtype=dtype)
        self.data = arr if arr.flags.c_contiguous else arr.copy()
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name

    # structural helpers

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def detach(self):
        """Same values, no history; gradients stop here."""
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype, name=self.name)

    def is_finite(self):
        return bool(np.isfinite(self.data).all())

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self):
        """Backpropagate from this scalar through the default tape."""
        default_tape().backward(self)

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"

    # arithmetic sugar, routed through ops so it lands on the tape

    def __add__(self, other):
        from . import ops

        if isinstance(other, (int, float)):
            return ops.add_constant(self, other)
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __mul__(self, other):
        from . import ops

        if not isinstance(other, (int, float)):
            raise TypeError("tensors only scale by python numbers")
        return ops.scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops

        return ops.scale(self, -1.0)


@dataclass
class Record:
    out: Tensor
    inputs: Sequence[Tensor]
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]
    op: str


class Tape:
    def __init__(self):
        self.records: list[Record] = []

    def __len__(self):
        return len(self.records)

    def push(self, record):
        self.records.append(record)

    def reset(self):
        self.records.clear()

    def backward(self, loss):
        if loss.size != 1:
            raise ValueError(f"backward needs a scalar, got shape {loss.shape}")
        if not loss.requires_grad:
            self.reset()
            return
        loss.grad = np.ones_like(loss.data)
        for rec in reversed(self.records):
            g = rec.out.grad
            if g is None:
                continue
            for inp, gi in zip(rec.inputs, rec.backward(g)):
                if gi is not None and inp.requires_grad:
                    inp.accumulate_grad(gi)
        self.reset()


_DEFAULT_TAPE = Tape()
_GRAD_ENABLED = [True]


def default_tape():
    return _DEFAULT_TAPE


def grad_enabled():
    return _GRAD_ENABLED[-1]


@contextlib.contextmanager
def no_grad():
    """Forward-only region: nothing is recorded."""
    _GRAD_ENABLED.append(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.pop()


def record(op, out_data, inputs, backward_fn):
    """Wrap ``out_data`` in a Tensor and tape it when any input needs a gradient."""
    needs = grad_enabled() and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=needs, dtype=out_data.dtype)
    if needs:
        _DEFAULT_TAPE.push(Record(out, tuple(inputs), backward_fn, op))
    return out


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x), dtype=dtype)
