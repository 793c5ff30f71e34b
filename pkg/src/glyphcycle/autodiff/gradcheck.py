"""Central finite-difference checks against the tape, in float64."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, default_tape, no_grad, record


@dataclass
class GradCheckResult:
    max_rel_error: float
    n_checked: int
    worst: tuple | None

    def ok(self, rtol=1e-3):
        return self.max_rel_error < rtol


def _project(out, weights):
    return record("project", np.asarray((out.data * weights).sum()), (out,), lambda g: (g * weights,))


def check_gradients(fn, arrays, seed=0, h=1e-3, floor=1e-6, wrt=None):
    """Compare tape gradients of ``fn`` with central differences.

    ``fn`` maps a list of Tensors to one Tensor; a fixed random projection
    turns non-scalar outputs into a scalar objective. ``wrt`` selects which
    argument indices to check (all by default). Elements whose analytic
    gradient magnitude is at most ``floor`` are skipped.
    """
    rng = np.random.default_rng(seed)
    base = [np.array(a, dtype=np.float64) for a in arrays]
    wrt = range(len(base)) if wrt is None else wrt

    tensors = [Tensor(a, requires_grad=True, dtype=np.float64) for a in base]
    out = fn(tensors)
    weights = rng.standard_normal(out.shape) if out.size > 1 else np.ones(out.shape)
    loss = _project(out, weights)
    default_tape().backward(loss)
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]

    def objective(vals):
        with no_grad():
            res = fn([Tensor(v, dtype=np.float64) for v in vals])
        return float((res.data * weights).sum())

    worst = None
    max_err = 0.0
    n = 0
    for idx in wrt:
        flat = base[idx].reshape(-1)
        ga = analytic[idx].reshape(-1)
        for e in range(flat.size):
            if abs(ga[e]) <= floor:
                continue
            orig = flat[e]
            flat[e] = orig + h
            fp = objective(base)
            flat[e] = orig - h
            fm = objective(base)
            flat[e] = orig
            numeric = (fp - fm) / (2 * h)
            err = abs(numeric - ga[e]) / max(abs(ga[e]), abs(numeric))
            n += 1
            if err > max_err:
                max_err = err
                worst = (idx, e, float(ga[e]), numeric)
    return GradCheckResult(max_err, n, worst)
