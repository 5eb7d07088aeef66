import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wormbergman.blowup import (
    CONVERGENT,
    FAR,
    LEADING,
    LOG_DIVERGENT,
    NEAR,
    POWER_DIVERGENT,
    SERIES,
    ProbeRegion,
    SobolevParams,
    TailProfile,
    classify_profile,
    default_eps_grid,
    divergence_scan,
    far_radial_exponent,
    log_fit,
    radial_exponent,
    s_grid_around,
    sobolev_tail_integral,
    tail_profile,
    threshold_and_range,
)
from wormbergman.errors import InconclusiveFitError, PreconditionError
from wormbergman.params import WormParams


def test_threshold_values():
    p3 = WormParams(dim=3)
    assert threshold_and_range(2, p3).s_star == pytest.approx(math.pi / 2)
    assert threshold_and_range(1, p3).s_star == pytest.approx(3.0708, abs=1e-4)
    assert threshold_and_range(4, WormParams(dim=4)).s_star == pytest.approx(math.pi / 2 - 1)


def test_lp_range():
    lo, hi = threshold_and_range(2, WormParams(dim=4)).lp_range
    assert lo == pytest.approx(1.1202, abs=1e-4)
    assert hi == pytest.approx(9.3196, abs=1e-4)
    # the upper end is where s* = 0, the lower where the far-side threshold vanishes
    assert threshold_and_range(hi, WormParams(dim=4)).s_star == pytest.approx(0, abs=1e-12)
    assert 4 * (1 / lo - 0.5) - math.pi / 2 == pytest.approx(0, abs=1e-12)
    assert threshold_and_range(2, WormParams(dim=3)).lp_range is None


def test_threshold_rejects_small_p():
    with pytest.raises(PreconditionError):
        threshold_and_range(0.5, WormParams())


def test_sobolev_params():
    sp = SobolevParams.from_s(2, 1.57)
    assert (sp.m, sp.t_frac) == (2, pytest.approx(0.43))
    assert SobolevParams.from_s(2, 2.0).m == 2
    assert SobolevParams.from_s(2, 0.0).m == 0
    with pytest.raises(PreconditionError):
        SobolevParams(2, 1.0, 3, 0.5)
    with pytest.raises(PreconditionError):
        SobolevParams.from_s(2, -0.1)


@given(
    p=st.fractions(1, 12, max_denominator=20),
    s=st.fractions(0, 6, max_denominator=20),
    n=st.integers(3, 6),
    nu=st.fractions(Fraction(1, 10), 4, max_denominator=20),
)
@settings(max_examples=200, deadline=None)
def test_radial_exponent_identity(p, s, n, nu):
    # the r1 power plus one equals -p (s - s*) exactly
    s_star = nu + n * (1 / p - Fraction(1, 2))
    assert radial_exponent(p, s, n, nu) + 1 == -p * (s - s_star)
    far_star = n * (1 / p - Fraction(1, 2)) - nu
    assert far_radial_exponent(p, s, n, nu) + 1 == -p * (s - far_star)


def _profile(slope, noise=0.0):
    eps = 2.0 ** -np.arange(5, 15)
    inc = np.exp(slope * np.log(1 / eps[1:])) * (1 + noise * np.cos(np.arange(eps.size - 1) * 2.1))
    first = 1.0
    return TailProfile(eps, np.cumsum(np.concatenate([[first], inc])), inc)


def test_classifier_labels():
    assert classify_profile(_profile(-1.0)).label == CONVERGENT
    assert classify_profile(_profile(0.0)).label == LOG_DIVERGENT
    assert classify_profile(_profile(0.5)).label == POWER_DIVERGENT


def test_classifier_rejects_noise():
    with pytest.raises(InconclusiveFitError):
        classify_profile(_profile(0.0, noise=0.9))
    bad = _profile(0.0)
    bad.increments[3] = -1
    with pytest.raises(InconclusiveFitError):
        classify_profile(bad)


def test_tail_slope_matches_exponent(worm4):
    region = ProbeRegion.default(worm4)
    grid = default_eps_grid(region)
    for s in (0.5, 1.2, 2.3):
        sp = SobolevParams.from_s(2, s)
        cls = classify_profile(tail_profile(sp, region, worm4, grid))
        s_star = threshold_and_range(2, worm4).s_star
        assert cls.slope == pytest.approx(2 * (s - s_star), abs=0.02)


def test_log_fit_at_threshold():
    p = WormParams(dim=3)
    s_star = threshold_and_range(2, p).s_star
    region = ProbeRegion.default(p)
    prof = tail_profile(SobolevParams.from_s(2, s_star), region, p, default_eps_grid(region))
    a, _, r2 = log_fit(prof)
    assert a > 0 and r2 > 0.99


def test_oscillation_is_harmless(worm4):
    """Dropping the phase of z1 changes I(eps) by a bounded factor only."""
    region = ProbeRegion.default(worm4)
    sp = SobolevParams.from_s(2, 1.8)
    ratios = [
        sobolev_tail_integral(sp, region, worm4, e) / sobolev_tail_integral(sp, region, worm4, e, modulus_only=True)
        for e in (2.0**-6, 2.0**-10, 2.0**-14)
    ]
    assert all(0.05 < r < 20 for r in ratios)
    assert max(ratios) / min(ratios) < 1.05


def test_series_agrees_with_leading_term():
    """Discrete terms lift to smooth powers of z1, so they never change the verdict."""
    p = WormParams(dim=3, alpha=0.35)
    region = ProbeRegion.default(p)
    grid = default_eps_grid(region)
    s_star = threshold_and_range(2, p).s_star
    for s in [0.3, 1.4] + s_grid_around(s_star, half_width=2):
        sp = SobolevParams.from_s(2, s)
        lead = tail_profile(sp, region, p, grid, use_kernel=LEADING)
        series = tail_profile(sp, region, p, grid, use_kernel=SERIES)
        assert classify_profile(series).label == classify_profile(lead).label
        if s > s_star:
            assert series.increments[-1] == pytest.approx(lead.increments[-1], rel=1e-6)


def test_eps_must_lie_below_delta(worm4):
    region = ProbeRegion.default(worm4)
    with pytest.raises(PreconditionError):
        sobolev_tail_integral(SobolevParams.from_s(2, 1), region, worm4, 0.5)


def test_scan_boundary_and_monotone():
    p = WormParams(dim=3)
    s_star = threshold_and_range(2, p).s_star
    res = divergence_scan([2.0], s_grid_around(s_star), p)
    assert res.monotone(2.0)
    assert abs(res.boundary(2.0) - s_star) <= 0.05


def test_far_side_catches_small_p():
    p = WormParams(dim=4)
    region = ProbeRegion.default(p)
    grid = default_eps_grid(region)
    sp = SobolevParams.from_s(1.05, 0.0)
    near = classify_profile(tail_profile(sp, region, p, grid, side=NEAR))
    far = classify_profile(tail_profile(sp, region, p, grid, side=FAR))
    assert near.label == CONVERGENT
    assert far.label == POWER_DIVERGENT
    res = divergence_scan([1.05], [0.0], p, sides=(NEAR, FAR))
    assert res.table[(1.05, 0.0)].label == POWER_DIVERGENT
