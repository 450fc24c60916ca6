import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tflab.endpoint import endpoint_decompose, middle_scale, needed_scales
from tflab.errors import DegenerateIntervalError, ParameterError


def intervals(n=1024):
    return st.tuples(st.integers(-n // 2, n // 2 - 4), st.integers(4, n)).map(
        lambda t: (t[0], min(t[0] + t[1], n // 2))
    ).filter(lambda t: t[1] - t[0] >= 4)


def check_supports(d):
    centers = np.arange(d.lo, d.hi) + 0.5
    for key, vals in d.pieces.items():
        left, right = d.supports[key]
        inside = (centers > left) & (centers < right)
        np.testing.assert_array_equal(vals != 0, inside)


@settings(max_examples=60, deadline=None)
@given(intervals(), st.sampled_from([2, 4, 8]))
def test_partition_identity_and_supports(iv, M):
    d = endpoint_decompose(iv[0], iv[1], 1024, M=M)
    np.testing.assert_allclose(d.total(), 1.0, atol=1e-12)
    check_supports(d)
    jm = middle_scale(d.width, 1024)
    assert [k for k in d.pieces if k[0] == "m"] == [("m", jm)]


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 1024))
def test_middle_scale_definition(width):
    n = 1024
    j = middle_scale(width, n)
    assert width / 2 < n * 2.0 ** -(j - 1) <= width


def test_supports_follow_prescription():
    n = 1024
    d = endpoint_decompose(-100, 300, n, M=4)
    for j in d.j_values:
        if ("s", j) in d.supports:
            assert d.supports[("s", j)] == (-100 + n * 2.0 ** -(j + 1), -100 + 0.99 * n * 2.0 ** -(j - 1))
            assert d.supports[("d", j)] == (300 - 0.99 * n * 2.0 ** -(j - 1), 300 - n * 2.0 ** -(j + 1))
    jm = middle_scale(400, n)
    assert d.supports[("m", jm)] == pytest.approx((100 - 0.99 * n * 2.0**-jm, 100 + 0.99 * n * 2.0**-jm))


def test_mirror_symmetry():
    d = endpoint_decompose(-200, 312, 2048, M=4)
    for j in d.j_values:
        np.testing.assert_allclose(d.piece("s", j), d.piece("d", j)[::-1], atol=1e-14)


@pytest.mark.parametrize("M", [2, 4, 8])
def test_derivative_growth_slope(M):
    d = endpoint_decompose(-900, 1100, 4096, M=M)
    assert d.growth_slope("s") <= M + 0.1
    assert d.growth_slope("d") <= M + 0.1
    assert np.isfinite(d.C_M) and d.C_M > 0


def test_full_multiplier_placement():
    n = 64
    d = endpoint_decompose(-10, 6, n, M=2)
    total = sum(d.full(*k) for k in d.pieces)
    expected = np.zeros(n)
    expected[-10 + 32 : 6 + 32] = 1
    np.testing.assert_allclose(total, expected, atol=1e-12)


def test_degenerate_interval():
    with pytest.raises(DegenerateIntervalError):
        endpoint_decompose(0, 3, 64)
    d = endpoint_decompose(0, 3, 64, strict=False)
    assert d.degenerate
    np.testing.assert_array_equal(d.total(), np.ones(3))


def test_scale_range_must_cover():
    n = 256
    scales = needed_scales(40, n)
    with pytest.raises(ParameterError):
        endpoint_decompose(0, 40, n, j_range=range(scales.start + 1, 20))
    d = endpoint_decompose(0, 40, n, j_range=range(0, 20))
    np.testing.assert_allclose(d.total(), 1.0, atol=1e-12)
