import numpy as np
import pytest

from wormbergman.oracle import fourier_panels
from wormbergman.params import ModeIndex, WormParams
from wormbergman.weight import WeightSpec, fourier_weight, weight_direct

# (n, J, k) configurations used for transform and pole checks
TRANSFORM_CASES = [(3, (0,), -2), (4, (0, 0), -2), (4, (1, 0), -1)]

# below this fraction of sup|F| a grid point is treated as an exact zero of F
ZERO_FLOOR = 1e-10


def transform_errors(n, J, k, xis=None):
    """Closed-form transform against panel quadrature of ``weight_direct``.

    Returns ``(max relative error off the zeros, max |error| / sup|F| on the zeros)``.
    """
    p = WormParams(dim=n)
    spec = WeightSpec.build(ModeIndex(J, k), p)
    if xis is None:
        xis = np.arange(-20, 20.0001, 0.25)
    closed, _ = fourier_weight(xis.astype(complex), spec)
    numeric = fourier_panels(lambda t: weight_direct(t, spec), spec.breakpoints(), xis)
    sup = np.abs(closed).max()
    zero = np.abs(closed) < ZERO_FLOOR * sup
    rel = np.abs(closed - numeric)[~zero] / np.abs(closed)[~zero]
    at_zero = np.abs(closed - numeric)[zero].max() / sup if zero.any() else 0.0
    return float(rel.max()), float(at_zero)


@pytest.fixture
def worm4():
    return WormParams(dim=4)


@pytest.fixture
def worm3():
    return WormParams(dim=3)
