import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TRANSFORM_CASES, transform_errors
from wormbergman.errors import PoleError
from wormbergman.oracle import (
    SampledFunction,
    StripQuadConfig,
    dirichlet_constant,
    fourier_panels,
    gaussian_norm_semianalytic,
    numeric_fourier,
    strip_inner_product,
)
from wormbergman.params import ModeIndex, WormParams
from wormbergman.poles import g_value
from wormbergman.weight import (
    WeightSpec,
    cnj_constant,
    fourier_weight,
    fourier_weight_derivative,
    sum_eval,
    weight_direct,
    weight_fourier_closed,
)


# -- exact identity


def test_sum_eval_examples():
    assert sum_eval(0, 3, 7) == (Fraction(1, 7), Fraction(1, 7))
    assert sum_eval(1, 1, 3) == (Fraction(-1, 4), Fraction(-1, 4))
    assert sum_eval(2, 1, 1) == (Fraction(-8, 3), Fraction(-8, 3))


def test_sum_eval_pole():
    with pytest.raises(PoleError):
        sum_eval(2, 1, 0)


fractions = st.fractions(min_value=-20, max_value=20, max_denominator=50)


@given(j=st.integers(0, 12), alpha=fractions.filter(lambda a: a != 0), xi=fractions)
@settings(max_examples=300, deadline=None)
def test_sum_eval_identity(j, alpha, xi):
    try:
        lhs, rhs = sum_eval(j, alpha, xi)
    except PoleError:
        return
    assert lhs == rhs


# -- constants


@pytest.mark.parametrize(
    "n,J,expected",
    [(3, (0,), math.pi**2), (4, (0, 0), math.pi**3 / 2), (4, (1, 0), math.pi**3 / 6)],
)
def test_cnj_closed_form(n, J, expected):
    assert cnj_constant(n, J) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("n,J", [(3, (0,)), (3, (2,)), (4, (0, 0)), (4, (1, 0)), (4, (1, 1))])
def test_cnj_matches_oracle(n, J):
    assert float(dirichlet_constant(n, J)) == pytest.approx(cnj_constant(n, J), rel=1e-10)


# -- direct weight


def test_weight_direct_example():
    spec = WeightSpec.build(ModeIndex((0,), -1), WormParams(dim=3))
    assert weight_direct(0.0, spec, normalized=True) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("n,J,k", TRANSFORM_CASES)
def test_weight_support_and_positivity(n, J, k):
    spec = WeightSpec.build(ModeIndex(J, k), WormParams(dim=n))
    a, b = spec.support()
    outside = np.concatenate([np.linspace(a - 3, a - 1e-9, 20), np.linspace(b + 1e-9, b + 3, 20)])
    assert np.all(weight_direct(outside, spec) == 0)
    inside = np.linspace(a, b, 200)[1:-1]
    assert np.all(weight_direct(inside, spec) > 0)


# -- transform


@pytest.mark.parametrize("n,J,k", TRANSFORM_CASES)
def test_transform_matches_quadrature(n, J, k):
    rel, at_zero = transform_errors(n, J, k)
    assert rel < 1e-6
    assert at_zero < 1e-12


@pytest.mark.parametrize("n,J,k", TRANSFORM_CASES)
def test_transform_matches_quadrature_off_axis(n, J, k):
    xis = np.array([0.5 + 1.5j, -3.0 - 2.0j, 7.25 + 0.75j, -1.0 + 4.0j])
    spec = WeightSpec.build(ModeIndex(J, k), WormParams(dim=n))
    closed, _ = fourier_weight(xis, spec)
    numeric = fourier_panels(lambda t: weight_direct(t, spec), spec.breakpoints(), xis)
    assert np.max(np.abs(closed - numeric) / np.abs(closed)) < 1e-9


@pytest.mark.parametrize("n,J,k", TRANSFORM_CASES)
def test_parseval_spot_check(n, J, k):
    spec = WeightSpec.build(ModeIndex(J, k), WormParams(dim=n))
    total = fourier_panels(lambda t: weight_direct(t, spec), spec.breakpoints(), 0.0)[0] * math.sqrt(2 * math.pi)
    closed = weight_fourier_closed(0.0, spec).value * math.sqrt(2 * math.pi)
    assert abs(closed - total) < 1e-8 * abs(total)


def test_annulus_removable_limit():
    spec = WeightSpec.build(ModeIndex((0, 0), -2), WormParams(dim=4))
    xi0 = 1j / spec.params.alpha  # k + 1 - i alpha xi = 0
    v = weight_fourier_closed(xi0, spec)
    assert v.removable_flag
    # the annulus factor equals 2 ln(beta) there, so compare with the factor removed
    near = weight_fourier_closed(xi0 + 1e-3, spec).value
    assert abs(v.value - near) < 1e-2 * abs(v.value)


@pytest.mark.parametrize("n,J,k", TRANSFORM_CASES)
def test_transform_finite_and_continuous_at_removable_points(n, J, k):
    spec = WeightSpec.build(ModeIndex(J, k), WormParams(dim=n))
    q = spec.cos_power
    points = [complex(q - 2 * s) for s in range(q + 1)] + [-1j * (k + 1) / spec.params.alpha]
    for x in points:
        for d in (0, 1e-7, 1e-5j, 3e-4, -5e-4j):
            v = weight_fourier_closed(x + d, spec).value
            assert np.isfinite(v)
        ref = fourier_panels(lambda t: weight_direct(t, spec), spec.breakpoints(), x)[0]
        got = weight_fourier_closed(x, spec).value
        assert abs(got - ref) < 1e-9 * max(abs(ref), 1e-3)


def test_composite_vanishes_at_cosine_zeros():
    spec = WeightSpec.build(ModeIndex((0, 0), -2), WormParams(dim=4))
    assert np.all(np.abs(g_value(np.array([2j, -2j]), spec)) < 1e-12)


def test_derivative_against_difference_quotient():
    spec = WeightSpec.build(ModeIndex((0, 0), -2), WormParams(dim=4))
    rng = np.random.default_rng(4)
    xi = rng.normal(size=10) * 3 + 1j * rng.normal(size=10)
    h = 1e-5
    fd = (fourier_weight(xi + h, spec)[0] - fourier_weight(xi - h, spec)[0]) / (2 * h)
    an = fourier_weight_derivative(xi, spec)
    assert np.max(np.abs(an - fd) / np.abs(an)) < 1e-7


# -- oracle self-checks


def test_numeric_fourier_gaussian():
    f = SampledFunction.sample(lambda t: np.exp(-(t**2) / 2), -12, 12, 4001)
    for xi in (0.0, 1.0, 2.0):
        assert abs(numeric_fourier(f, xi).value - math.exp(-(xi**2) / 2)) < 1e-8


def test_numeric_fourier_box():
    a = 1.5
    f = SampledFunction.sample(lambda t: np.ones_like(t), -a, a, 2001)
    for xi in (0.5, 1.0, 3.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            got = numeric_fourier(f, xi).value
        assert abs(got - math.sqrt(2 / math.pi) * math.sin(a * xi) / xi) < 1e-8


def test_numeric_fourier_warns_on_clipped_support():
    f = SampledFunction.sample(lambda t: np.ones_like(t), -1, 1, 101)
    with pytest.warns(UserWarning):
        numeric_fourier(f, 1.0)


def test_numeric_fourier_simpson_order():
    g = lambda t: np.where(np.abs(t) < 1, (1 - t**2) ** 4, 0.0)  # noqa: E731
    exact = fourier_panels(g, [-1, 1], 2.0, order=64)[0]
    errs = [abs(numeric_fourier(SampledFunction.sample(g, -1, 1, m + 1), 2.0).value - exact) for m in (40, 80, 160)]
    assert errs[0] / errs[1] >= 4 and errs[1] / errs[2] >= 4


def test_numeric_fourier_matches_closed_form():
    spec = WeightSpec.build(ModeIndex((0, 0), -2), WormParams(dim=4))
    a, b = spec.support()
    f = SampledFunction.sample(lambda t: weight_direct(t, spec), a - 0.5, b + 0.5, 2**14 + 1)
    for xi in (0.0, 1.5, 5.0):
        closed = weight_fourier_closed(xi, spec).value
        est = numeric_fourier(f, xi)
        assert abs(est.value - closed) < 1e-6 * abs(closed)


def test_strip_inner_product_properties():
    spec = WeightSpec.build(ModeIndex((0, 0), -2), WormParams(dim=4))
    f = lambda z: np.exp(-(z**2))  # noqa: E731
    g = lambda z: np.exp(-((z - 0.5) ** 2)) * (1 + z)  # noqa: E731
    ff = strip_inner_product(f, f, spec, 7.0)
    assert ff.real > 0 and abs(ff.imag) < 1e-12 * ff.real
    fg = strip_inner_product(f, g, spec, 7.0)
    gf = strip_inner_product(g, f, spec, 7.0)
    assert abs(fg - np.conj(gf)) < 1e-12 * abs(fg)
    assert abs(ff.real - gaussian_norm_semianalytic(spec)) < 1e-8 * ff.real


def test_strip_inner_product_detects_divergence():
    from wormbergman.errors import NormDivergenceError

    spec = WeightSpec.build(ModeIndex((0, 0), -2), WormParams(dim=4))
    f = lambda z: np.exp(1j * 0.7 * z)  # noqa: E731
    with pytest.raises(NormDivergenceError):
        strip_inner_product(f, f, spec, 7.0, StripQuadConfig())
