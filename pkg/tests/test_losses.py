import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from glyphcycle.autodiff import Tensor
from glyphcycle.errors import ConfigError, DimensionError
from glyphcycle.losses import cycle_loss, gan_loss_discriminator, gan_loss_generator, total_loss


def patch(*values):
    return Tensor(np.array(values, dtype=np.float64).reshape(1, 1, 1, -1))


def test_generator_loss_examples():
    assert gan_loss_generator(patch(0.5, 0.5, 0.5)).item() == pytest.approx(math.log(2), abs=1e-6)
    assert gan_loss_generator(patch(1.0, 1.0)).item() == pytest.approx(0.0, abs=1e-6)
    assert gan_loss_generator(patch(0.5, 0.25)).item() == pytest.approx((math.log(2) + math.log(4)) / 2, abs=1e-6)


def test_generator_loss_literal_mode():
    # log(1 - D) of 0.25 -> log 0.75
    assert gan_loss_generator(patch(0.25), "literal").item() == pytest.approx(math.log(0.75), abs=1e-6)
    with pytest.raises(ConfigError):
        gan_loss_generator(patch(0.5), "lsgan")


def test_discriminator_loss_examples():
    assert gan_loss_discriminator(patch(1.0, 1.0), patch(0.0, 0.0)).item() == pytest.approx(0.0, abs=1e-6)
    assert gan_loss_discriminator(patch(0.5), patch(0.5)).item() == pytest.approx(math.log(2), abs=1e-6)
    assert gan_loss_discriminator(patch(0.9), patch(0.1)).item() == pytest.approx(-math.log(0.9), abs=1e-6)
    assert -math.log(0.9) == pytest.approx(0.1054, abs=1e-4)


def test_cycle_loss_examples(rng):
    x, y = Tensor(rng.standard_normal((1, 1, 4, 4))), Tensor(rng.standard_normal((1, 1, 4, 4)))
    assert cycle_loss(x, x, y, y).item() == 0.0
    assert cycle_loss(x, Tensor(x.data + 1), y, y).item() == pytest.approx(1.0, abs=1e-6)


def test_cycle_loss_flat_loop_oracle(rng):
    arrs = [rng.standard_normal((1, 2, 5, 3)) for _ in range(4)]
    x, xr, y, yr = (Tensor(a) for a in arrs)
    xs, xrs, ys, yrs = (t.data.ravel().tolist() for t in (x, xr, y, yr))
    expect = sum(abs(a - b) for a, b in zip(xrs, xs)) / len(xs) + sum(abs(a - b) for a, b in zip(yrs, ys)) / len(ys)
    assert cycle_loss(x, xr, y, yr).item() == pytest.approx(expect, abs=1e-6)


def test_cycle_loss_symmetric_under_domain_swap(rng):
    x, xr, y, yr = (Tensor(rng.standard_normal((1, 1, 3, 3))) for _ in range(4))
    assert cycle_loss(x, xr, y, yr).item() == pytest.approx(cycle_loss(y, yr, x, xr).item(), abs=1e-7)


def test_cycle_loss_shape_mismatch():
    a, b = Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 3, 3)))
    with pytest.raises(DimensionError):
        cycle_loss(a, b, a, a)


def test_total_loss_examples():
    zero = Tensor(0.0)
    assert total_loss(zero, zero, Tensor(0.5), 10).item() == pytest.approx(5.0)
    assert total_loss(Tensor(0.3), Tensor(0.4), Tensor(9.0), 0).item() == pytest.approx(0.7, abs=1e-6)


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 10), st.floats(0, 50), st.floats(0, 50))
def test_total_loss_composition_and_monotonicity(g, f, c, lam_a, lam_b):
    lo, hi = sorted((lam_a, lam_b))
    direct = total_loss(Tensor(g), Tensor(f), Tensor(c), lo).item()
    assert direct == pytest.approx(np.float32(g) + np.float32(f) + lo * np.float32(c), rel=1e-5, abs=1e-5)
    assert total_loss(Tensor(g), Tensor(f), Tensor(c), hi).item() >= direct - 1e-4
