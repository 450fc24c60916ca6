from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from tflab.dyadic import (
    AdaptedBumpFamily,
    DyadicInterval,
    FreqSet,
    active_intervals,
    bump_samples,
    dyadic_containing,
    finite_difference,
    make_adapted_bump,
    measure_smoothness,
    smooth_step,
    spline_derivative_bound,
    spline_template,
)
from tflab.errors import ConfigurationError, DegenerateIntervalError, ParameterError


def test_interval_span_and_bins():
    w = DyadicInterval(2, 1)
    assert w.span(16) == (4, 8)
    assert list(w.bins(16)) == [-4, -3, -2, -1]
    assert w.contains(-4, 16) and not w.contains(0, 16)
    assert w.parent() == DyadicInterval(1, 0)
    assert w.length == 0.25


def test_interval_validation():
    with pytest.raises(ParameterError):
        DyadicInterval(2, 4)
    with pytest.raises(ParameterError):
        DyadicInterval(5, 0).span(16)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 6), st.integers(0, 63), st.integers(0, 6), st.integers(0, 63))
def test_intervals_nested_or_disjoint(k1, m1, k2, m2):
    m1 %= 2**k1
    m2 %= 2**k2
    a, b = DyadicInterval(k1, m1).span(64), DyadicInterval(k2, m2).span(64)
    sa, sb = set(range(*a)), set(range(*b))
    assert sa <= sb or sb <= sa or not (sa & sb)


@settings(max_examples=100, deadline=None)
@given(st.integers(-32, 31), st.integers(1, 6))
def test_dyadic_containing(freq, k):
    assert dyadic_containing(freq, k, 64).contains(freq, 64)


def test_freqset_validation():
    assert FreqSet((3, -1, 0), 16).xs == (-1, 0, 3)
    for bad in [(), (1, 1), (8,), (-9,)]:
        with pytest.raises(ConfigurationError):
            FreqSet(bad, 16)


def test_active_intervals():
    xi = FreqSet((-8, -7, 5), 16)
    assert active_intervals(xi, 1) == [DyadicInterval(1, 0), DyadicInterval(1, 1)]
    assert active_intervals(xi, 4) == [DyadicInterval(4, 0), DyadicInterval(4, 1), DyadicInterval(4, 13)]
    with pytest.raises(ParameterError):
        active_intervals(xi, 0)
    with pytest.raises(ParameterError):
        active_intervals(xi, 5)


def test_order_one_template_is_hat():
    t = np.linspace(-0.5, 1.5, 41)
    np.testing.assert_allclose(spline_template(t, 1), np.clip(1 - np.abs(2 * t - 1), 0, None), atol=1e-14)


@pytest.mark.parametrize("order", [2, 3, 5, 8])
def test_template_against_cox_de_boor(order):
    knots = np.arange(order + 2, dtype=float)
    ref = BSpline.basis_element(knots, extrapolate=False)
    t = np.linspace(0.01, 0.99, 57)
    expected = ref(t * (order + 1)) / ref((order + 1) / 2)
    np.testing.assert_allclose(spline_template(t, order), expected, rtol=1e-12)
    assert spline_template(np.array([0.5]), order)[0] == pytest.approx(1.0)
    assert np.all(spline_template(np.array([-1.0, 0.0, 1.0, 2.0]), order) == 0)


def test_template_order_range():
    with pytest.raises(ParameterError):
        spline_template(0.5, 17)


@pytest.mark.parametrize("order", [1, 2, 4, 8])
def test_derivative_bound_closed_form(order):
    # derivative of the unit-knot B-spline is sum_j (-1)^j C(order, j) on [j, j+1)
    b = BSpline.basis_element(np.arange(order + 2, dtype=float), extrapolate=False)
    d = b.derivative(order)
    peak = b((order + 1) / 2)
    centers = np.arange(order + 1) + 0.5
    assert np.abs(d(centers)).max() == pytest.approx(comb(order, order // 2))
    expected = np.abs(d(centers)).max() * (order + 1) ** order / peak
    assert spline_derivative_bound(order) == pytest.approx(expected, rel=1e-12)


def test_smooth_step():
    t = np.linspace(-1, 2, 301)
    s = smooth_step(t, 4)
    assert np.all(np.diff(s) >= -1e-15)
    assert np.all(s[t <= 0] == 0) and np.all(s[t >= 1] == 1)
    assert smooth_step(np.array([0.5]), 4)[0] == pytest.approx(0.5)


def test_bump_fallback_order():
    vals, used = bump_samples(6, 8)
    assert used == 2 and vals[0] == 0
    assert bump_samples(64, 8)[1] == 8
    with pytest.raises(DegenerateIntervalError):
        bump_samples(1, 8)


@pytest.mark.parametrize("M", [2, 4, 8])
def test_measured_smoothness_matches_closed_form(M):
    fam = AdaptedBumpFamily(4096, M)
    assert fam.smoothness(2) == pytest.approx(spline_derivative_bound(M), rel=1e-6)


def test_smoothness_dilation_invariant():
    fam = AdaptedBumpFamily(4096, 4)
    vals = [fam.smoothness(k) for k in range(1, 6)]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-6)
    assert fam.D_M >= vals[0]


def test_adapted_bump_support():
    n = 64
    w = DyadicInterval(3, 5)
    b = make_adapted_bump(w, 4, n)
    lo, hi = w.span(n)
    assert np.all(b[:lo] == 0) and np.all(b[hi:] == 0)
    assert b.max() <= 1.0 and b[lo] == 0
    np.testing.assert_array_equal(AdaptedBumpFamily(n, 4).bump(w), b)


def test_family_small_scale_and_indicator():
    fam = AdaptedBumpFamily(16, 4)
    assert fam.order_used(4) is None and not fam.bump(DyadicInterval(4, 3)).any()
    assert fam.order_used(1) == 3
    ind = AdaptedBumpFamily(16, 4, indicator=True)
    assert ind.bump(DyadicInterval(2, 1)).sum() == 4
    with pytest.raises(ParameterError):
        AdaptedBumpFamily(16, 0)


def test_finite_difference_and_measure_errors():
    x = np.arange(8.0) ** 2
    assert np.all(finite_difference(x, 2)[:6] == 2)
    with pytest.raises(DegenerateIntervalError):
        measure_smoothness(np.zeros(16), DyadicInterval(4, 0), 2)
    with pytest.raises(ParameterError):
        measure_smoothness(np.zeros(16), DyadicInterval(1, 0), 0)


def test_family_csv():
    fam = AdaptedBumpFamily(16, 2)
    text = fam.to_csv([DyadicInterval(1, 1)])
    lines = text.splitlines()
    assert lines[0] == "k,m,bin,value"
    assert all(line.startswith("1,1,") for line in lines[1:])
    assert len(lines) - 1 == np.count_nonzero(fam.scale_template(1)[0])
