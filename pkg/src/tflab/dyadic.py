"""Dyadic frequency intervals, frequency sets and adapted spline bumps.

A scale-k dyadic interval with index m is the normalized frequency interval
``[-1/2 + m 2**-k, -1/2 + (m+1) 2**-k)``.  On a grid of n bins it covers the
contiguous centered-array slice ``[m n 2**-k, (m+1) n 2**-k)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
from scipy.interpolate import BSpline

from .errors import ConfigurationError, DegenerateIntervalError, ParameterError
from .signal import log_size

DEFAULT_ORDER = 8
MIN_ORDER, MAX_ORDER = 0, 16


@dataclass(frozen=True, order=True)
class DyadicInterval:
    k: int
    m: int

    def __post_init__(self):
        if self.k < 0 or not 0 <= self.m < 2**self.k:
            raise ParameterError(f"invalid dyadic interval (k={self.k}, m={self.m})", key="k")

    @property
    def length(self) -> float:
        return 2.0**-self.k

    def span(self, n: int) -> tuple[int, int]:
        """Half-open centered-array slice ``(lo, hi)`` covered on an n-bin grid."""
        width = n >> self.k
        if width < 1:
            raise ParameterError(f"scale {self.k} finer than the {n}-bin grid", key="k")
        return self.m * width, (self.m + 1) * width

    def bins(self, n: int) -> np.ndarray:
        """Integer frequencies contained in the interval."""
        lo, hi = self.span(n)
        return np.arange(lo, hi) - n // 2

    def contains(self, freq: int, n: int) -> bool:
        lo, hi = self.span(n)
        return lo <= freq + n // 2 < hi

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.k - 1, self.m // 2)


def dyadic_containing(freq: int, k: int, n: int) -> DyadicInterval:
    """The scale-k dyadic interval containing integer frequency ``freq``."""
    return DyadicInterval(k, (freq + n // 2) // (n >> k))


@dataclass(frozen=True)
class FreqSet:
    """A finite sorted set of distinct integer frequencies on an n-bin grid."""

    xs: tuple
    n: int

    def __post_init__(self):
        log_size(self.n)
        xs = tuple(sorted(int(x) for x in self.xs))
        if not xs:
            raise ConfigurationError("frequency set must be nonempty", key="xs")
        if len(set(xs)) != len(xs):
            raise ConfigurationError("frequencies must be distinct", key="xs")
        if xs[0] < -self.n // 2 or xs[-1] >= self.n // 2:
            raise ConfigurationError(f"frequencies must lie in [-{self.n // 2}, {self.n // 2})", key="xs")
        object.__setattr__(self, "xs", xs)

    def __len__(self):
        return len(self.xs)

    def __iter__(self):
        return iter(self.xs)


def active_intervals(xi: FreqSet, k: int) -> list[DyadicInterval]:
    """Scale-k dyadic intervals meeting the frequency set, sorted by index."""
    L = log_size(xi.n)
    if not 1 <= k <= L:
        raise ParameterError(f"scale k={k} outside [1, {L}]", key="k")
    width = xi.n >> k
    ms = sorted({(x + xi.n // 2) // width for x in xi.xs})
    return [DyadicInterval(k, m) for m in ms]


# -- spline template -----------------------------------------------------


@lru_cache(maxsize=None)
def _basis(order: int) -> BSpline:
    knots = np.linspace(0.0, 1.0, order + 2)
    b = BSpline.basis_element(knots, extrapolate=False)
    return b


@lru_cache(maxsize=None)
def template_peak(order: int) -> float:
    return float(_basis(order)(0.5))


def spline_template(t, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Degree-``order`` cardinal B-spline rescaled to (0, 1), peak value 1 at t = 1/2.

    This is the ``order``-fold self-convolution of the indicator of an
    interval, so order 1 is the hat function.  Values outside the open
    interval (0, 1) are exactly zero.
    """
    if not MIN_ORDER <= order <= MAX_ORDER:
        raise ParameterError(f"spline order {order} outside [{MIN_ORDER}, {MAX_ORDER}]", key="M")
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = (t > 0.0) & (t < 1.0)
    if order == 0:
        out[inside] = 1.0
    else:
        out[inside] = _basis(order)(t[inside]) / template_peak(order)
    return out


def spline_derivative_bound(order: int) -> float:
    """Closed form ``max |d^order/dt^order spline_template|``.

    The order-th derivative of the cardinal B-spline on knots 0..order+1 is
    ``sum_j (-1)**j C(order, j) 1_[j, j+1)``; rescaling to unit support
    multiplies by ``(order+1)**order``.
    """
    return comb(order, order // 2) * (order + 1) ** order / template_peak(order)


def smooth_step(t, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Monotone C^order step: 0 for t <= 0, 1 for t >= 1 (normalized spline integral)."""
    t = np.asarray(t, dtype=float)
    anti = _antiderivative(order)
    out = np.where(t <= 0.0, 0.0, 1.0)
    inside = (t > 0.0) & (t < 1.0)
    out[inside] = anti(t[inside])
    return out


@lru_cache(maxsize=None)
def _antiderivative(order: int):
    b = _basis(order)
    anti = b.antiderivative()
    total = float(anti(1.0))
    return lambda t: anti(t) / total


def bump_samples(width: int, order: int) -> tuple[np.ndarray, int]:
    """Samples of the bump on ``width`` consecutive bins and the order actually used.

    Bin ``i`` sits at relative position ``i / width``; bin 0 is the left
    endpoint and is always zero.  Intervals narrower than ``2 order + 2``
    bins fall back to the largest order that fits.
    """
    if width < 2:
        raise DegenerateIntervalError(f"interval spans {width} bin(s); need at least 2")
    used = min(order, width // 2 - 1)
    return spline_template(np.arange(width) / width, used), used


def make_adapted_bump(omega: DyadicInterval, M: int, n: int) -> np.ndarray:
    """Full-length centered multiplier of the order-M bump adapted to ``omega``."""
    lo, hi = omega.span(n)
    vals, _ = bump_samples(hi - lo, M)
    out = np.zeros(n)
    out[lo:hi] = vals
    return out


def finite_difference(x: np.ndarray, M: int) -> np.ndarray:
    """Cyclic M-th forward difference."""
    d = np.asarray(x)
    for _ in range(M):
        d = np.roll(d, -1) - d
    return d


def difference_stride(width: int, M: int) -> int:
    """Sample stride keeping about 16 (M+1) points across ``width`` bins.

    Differencing every bin of a wide bump cancels catastrophically: the
    M-th difference is of size width**-M while rounding error stays near
    2**M machine epsilons.  Thinning the grid keeps the scaled difference
    accurate.
    """
    target = 1 << max(0, (16 * (M + 1) - 1).bit_length() - 1)
    return max(1, width // target)


def strided_difference(x, M: int, stride: int) -> np.ndarray:
    """Cyclic M-th difference of every ``stride``-th sample."""
    return finite_difference(np.asarray(x)[::stride], M)


def measure_smoothness(bump, omega: DyadicInterval, M: int, n: int | None = None) -> float:
    """Discrete D_M of one interval: ``|omega|**M * max |Delta_h^M bump| / h**M``.

    With |omega| = width/n and step h = stride/n this is
    ``(width/stride)**M * max |Delta^M|`` over the thinned samples.
    """
    bump = np.asarray(bump)
    n = bump.size if n is None else n
    lo, hi = omega.span(n)
    width = hi - lo
    if width < 2:
        raise DegenerateIntervalError(f"interval spans {width} bin(s); M-th difference undefined")
    if M < 1:
        raise ParameterError("smoothness order must be >= 1", key="M")
    stride = difference_stride(width, M)
    return float((width / stride) ** M * np.abs(strided_difference(bump, M, stride)).max())


@dataclass
class AdaptedBumpFamily:
    """Bumps phi_omega for every dyadic interval of an n-bin grid.

    All intervals of one scale share a template, so per-scale samples are
    cached.  ``indicator=True`` swaps in 1_omega (contrast experiments only).
    """

    n: int
    M: int = DEFAULT_ORDER
    indicator: bool = False
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.L = log_size(self.n)
        if not 1 <= self.M <= MAX_ORDER:
            raise ParameterError(f"bump order M={self.M} outside [1, {MAX_ORDER}]", key="M")

    def scale_template(self, k: int) -> tuple[np.ndarray, int | None]:
        """Per-interval samples at scale k and the spline order used (None if zero)."""
        if k not in self._cache:
            width = self.n >> k
            if self.indicator:
                entry = (np.ones(width), None)
            elif width < 2:
                # a single bin cannot carry a bump vanishing at its left endpoint
                entry = (np.zeros(width), None)
            else:
                entry = bump_samples(width, self.M)
            self._cache[k] = entry
        return self._cache[k]

    def order_used(self, k: int) -> int | None:
        return self.scale_template(k)[1]

    def bump(self, omega: DyadicInterval) -> np.ndarray:
        lo, hi = omega.span(self.n)
        out = np.zeros(self.n)
        out[lo:hi] = self.scale_template(omega.k)[0]
        return out

    def sum_over(self, intervals) -> np.ndarray:
        """Sum of bumps over a collection of (disjoint, same-or-mixed scale) intervals."""
        out = np.zeros(self.n)
        for w in intervals:
            lo, hi = w.span(self.n)
            out[lo:hi] += self.scale_template(w.k)[0]
        return out

    def smoothness(self, k: int) -> float:
        omega = DyadicInterval(k, 0)
        if self.n >> k < 2:
            return 0.0
        return measure_smoothness(self.bump(omega), omega, self.M, self.n)

    @property
    def D_M(self) -> float:
        """Family constant: max over scales of the per-interval measurement."""
        return max(self.smoothness(k) for k in range(1, self.L + 1))

    def to_csv(self, intervals=None) -> str:
        if intervals is None:
            intervals = [DyadicInterval(k, m) for k in range(1, self.L + 1) for m in range(2**k)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "m", "bin", "value"])
        for omega in intervals:
            lo, _ = omega.span(self.n)
            vals = self.scale_template(omega.k)[0]
            for i in np.flatnonzero(vals):
                w.writerow([omega.k, omega.m, lo + i - self.n // 2, repr(float(vals[i]))])
        return buf.getvalue()
