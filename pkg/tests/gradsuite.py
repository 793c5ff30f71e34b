"""Finite-difference cases for every differentiable op, five random shapes each.

Shared by the unit tests and the acceptance script. Inputs to kinked ops
(relu, leaky_relu, |.|) are pushed at least 0.05 away from the kink so a
1e-3 central difference never straddles it.
"""

import numpy as np

from glyphcycle.autodiff import ops

SHAPE_SEED = 20240611


def _away_from_zero(a, margin=0.05):
    return np.sign(a) * (np.abs(a) + margin) + (a == 0) * margin


def _conv_cases(rng):
    # (N, Cin, H, W, Cout, k, stride, pad)
    specs = [(1, 1, 5, 5, 2, 3, 1, 0), (2, 2, 6, 7, 3, 3, 2, 1), (1, 3, 8, 8, 2, 4, 2, 1),
             (1, 2, 7, 5, 1, 7, 1, 3), (2, 1, 4, 6, 2, 1, 1, 0)]
    out = []
    for n, ci, h, w, co, k, s, p in specs:
        arrays = [rng.standard_normal((n, ci, h, w)), rng.standard_normal((co, ci, k, k)), rng.standard_normal(co)]
        out.append((f"conv2d{(n, ci, h, w)}k{k}s{s}p{p}", lambda t, s=s, p=p: ops.conv2d(t[0], t[1], t[2], s, p), arrays))
    return out


def _deconv_cases(rng):
    # (N, Cin, H, W, Cout, k, stride, pad, output_padding)
    specs = [(1, 1, 2, 2, 1, 3, 2, 1, 1), (1, 2, 3, 4, 3, 3, 2, 1, 1), (2, 2, 3, 3, 2, 7, 1, 3, 0),
             (1, 3, 4, 3, 2, 4, 2, 1, 0), (1, 1, 3, 3, 2, 3, 3, 0, 2)]
    out = []
    for n, ci, h, w, co, k, s, p, op in specs:
        arrays = [rng.standard_normal((n, ci, h, w)), rng.standard_normal((ci, co, k, k)), rng.standard_normal(co)]
        fn = lambda t, s=s, p=p, op=op: ops.conv_transpose2d(t[0], t[1], t[2], s, p, op)  # noqa: E731
        out.append((f"conv_transpose2d{(n, ci, h, w)}k{k}s{s}p{p}op{op}", fn, arrays))
    return out


def _norm_cases(rng):
    shapes = [(1, 1, 3, 3), (2, 3, 4, 4), (1, 4, 5, 3), (3, 2, 2, 6), (1, 2, 8, 8)]
    out = []
    for sh in shapes:
        arrays = [rng.standard_normal(sh) * 2 + 0.5, rng.standard_normal(sh[1]), rng.standard_normal(sh[1])]
        out.append((f"instance_norm{sh}", lambda t: ops.instance_norm(t[0], t[1], t[2]), arrays))
    return out


def _pointwise_cases(rng):
    shapes = [(1, 1, 2, 2), (2, 3, 3, 3), (1, 2, 5, 4), (3, 1, 2, 7), (1, 4, 4, 4)]
    out = []
    for kind in ("relu", "leaky_relu", "tanh", "sigmoid"):
        for sh in shapes:
            arrays = [_away_from_zero(rng.standard_normal(sh) * 2)]
            out.append((f"{kind}{sh}", lambda t, kind=kind: ops.pointwise(t[0], kind), arrays))
    return out


def _concat_cases(rng):
    specs = [((1, 1, 2, 2), (1, 2, 2, 2)), ((2, 2, 3, 3), (2, 1, 3, 3), (2, 3, 3, 3)),
             ((1, 3, 4, 5), (1, 3, 4, 5)), ((1, 1, 1, 1), (1, 1, 1, 1), (1, 4, 1, 1)), ((3, 2, 2, 3),)]
    out = []
    for shapes in specs:
        arrays = [rng.standard_normal(sh) for sh in shapes]
        out.append((f"concat_channels{shapes}", lambda t: ops.concat_channels(list(t)), arrays))
    return out


def _binary_cases(rng):
    shapes = [(1, 1, 2, 2), (2, 2, 3, 3), (1, 3, 4, 2), (2, 1, 5, 5), (1, 4, 1, 3)]
    out = []
    for sh in shapes:
        a, b = rng.standard_normal(sh), rng.standard_normal(sh)
        out.append((f"residual_add{sh}", lambda t: ops.residual_add(t[0], t[1]), [a, b]))
        out.append((f"sub{sh}", lambda t: ops.sub(t[0], t[1]), [a, b]))
        c = float(rng.uniform(-3, 3))
        out.append((f"scale{sh}", lambda t, c=c: ops.scale(t[0], c), [a]))
    return out


def _loss_cases(rng):
    shapes = [(1, 1, 2, 2), (2, 1, 3, 3), (1, 3, 4, 4), (2, 2, 2, 5), (1, 1, 6, 6)]
    out = []
    for sh in shapes:
        p = rng.uniform(0.05, 0.95, sh)
        out.append((f"mean_neg_log{sh}", lambda t: ops.reduce_loss(t[0], "mean_neg_log"), [p]))
        out.append((f"mean_neg_log1m{sh}", lambda t: ops.reduce_loss(t[0], "mean_neg_log1m"), [p]))
        target = rng.standard_normal(sh)
        x = target + _away_from_zero(rng.standard_normal(sh))
        out.append((f"mean_abs{sh}", lambda t: ops.reduce_loss(t[0], "mean_abs", t[1]), [x, target]))
    return out


def _head_cases(rng):
    out = []
    for sh in [(1, 1, 2, 2), (2, 3, 3, 3), (1, 4, 5, 2), (3, 2, 1, 4), (2, 5, 4, 4)]:
        out.append((f"spatial_mean{sh}", lambda t: ops.spatial_mean(t[0]), [rng.standard_normal(sh)]))
    for n, f, k in [(1, 2, 2), (2, 3, 4), (4, 5, 3), (3, 8, 2), (5, 4, 6)]:
        arrays = [rng.standard_normal((n, f)), rng.standard_normal((k, f)), rng.standard_normal(k)]
        out.append((f"linear{(n, f, k)}", lambda t: ops.linear(t[0], t[1], t[2]), arrays))
        labels = rng.integers(0, k, n)
        out.append((f"softmax_cross_entropy{(n, k)}",
                    lambda t, labels=labels: ops.softmax_cross_entropy(t[0], labels), [rng.standard_normal((n, k))]))
    return out


def all_cases():
    rng = np.random.default_rng(SHAPE_SEED)
    cases = []
    for make in (_conv_cases, _deconv_cases, _norm_cases, _pointwise_cases, _concat_cases, _binary_cases,
                 _loss_cases, _head_cases):
        cases += make(rng)
    return cases


def op_family(name):
    return name.split("(")[0]
