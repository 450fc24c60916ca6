"""Smooth partition of an interval's indicator into pieces concentrated at its endpoints.

For an interval v = [s, d) of frequency bins the indicator is split as
``1_v = sum_j psi_s,j + psi_m,j + psi_d,j`` where, with lengths measured in
normalized frequency (one bin = 1/n):

* ``psi_s,j`` lives on ``(s + 2**-(j+1), s + .99 * 2**-(j-1))`` and vanishes
  once ``2**-(j-1) > |v|``;
* ``psi_d,j`` is its mirror image at the right endpoint d;
* ``psi_m,j`` lives on ``((s+d)/2 - .99 * 2**-j, (s+d)/2 + .99 * 2**-j)`` and is
  nonzero for the single j with ``|v|/2 < 2**-(j-1) <= |v|``.

A bin takes part in a piece when its center ``b + 1/2`` lies inside that
piece's open support.  Raw spline profiles on each support are divided by
their sum, which makes the identity exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log2

import numpy as np

from .dyadic import DEFAULT_ORDER, difference_stride, spline_template, strided_difference
from .errors import DegenerateIntervalError, ParameterError
from .signal import log_size

KINDS = ("s", "m", "d")
SUPPORT_FRACTION = 0.99


@dataclass
class EndpointDecomposition:
    lo: int
    hi: int
    n: int
    M: int
    pieces: dict  # (kind, j) -> samples on the bins lo..hi-1
    supports: dict  # (kind, j) -> open support (left, right) in bin units
    degenerate: bool = False
    smoothness: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.hi - self.lo

    @property
    def j_values(self) -> list[int]:
        return sorted({j for _, j in self.pieces})

    def piece(self, kind: str, j: int) -> np.ndarray:
        return self.pieces.get((kind, j), np.zeros(self.width))

    def full(self, kind: str, j: int) -> np.ndarray:
        """Piece as a full-length centered multiplier."""
        out = np.zeros(self.n)
        a = self.lo + self.n // 2
        out[a : a + self.width] = self.piece(kind, j)
        return out

    def total(self) -> np.ndarray:
        return sum(self.pieces.values(), np.zeros(self.width))

    @property
    def C_M(self) -> float:
        """Smallest C with measured M-th derivative <= C 2**(M j) for every piece."""
        return max((v / 2.0 ** (self.M * j) for (_, j), v in self.smoothness.items()), default=0.0)

    def growth_slope(self, kind: str = "s") -> float:
        """Least-squares slope of log2(measured M-th derivative) against j."""
        pts = [(j, v) for (k, j), v in self.smoothness.items() if k == kind and v > 0]
        if len(pts) < 2:
            return 0.0
        j, v = np.array(pts).T
        return float(np.polyfit(j, np.log2(v), 1)[0])


def middle_scale(width: int, n: int) -> int:
    """The unique j with ``|v|/2 < 2**-(j-1) <= |v|`` for |v| = width/n."""
    return 1 + ceil(log2(n / width) - 1e-12)


def needed_scales(width: int, n: int) -> range:
    """Scales carrying nonzero pieces: from the middle scale down to L + 1."""
    return range(middle_scale(width, n), log_size(n) + 2)


def _profile(centers: np.ndarray, left: float, right: float, M: int) -> np.ndarray:
    return spline_template((centers - left) / (right - left), M)


def endpoint_decompose(lo: int, hi: int, n: int, j_range=None, M: int = DEFAULT_ORDER,
                       strict: bool = True) -> EndpointDecomposition:
    """Endpoint decomposition of the indicator of bins ``[lo, hi)`` on an n-bin grid."""
    log_size(n)
    width = hi - lo
    if width < 4:
        if strict:
            raise DegenerateIntervalError(f"interval spans {width} bins; need at least 4")
        return EndpointDecomposition(lo, hi, n, M, {("m", 0): np.ones(max(width, 0))},
                                     {("m", 0): (lo, hi)}, degenerate=True)
    scales = needed_scales(width, n)
    if j_range is None:
        js = list(scales)
    else:
        js = sorted(set(int(j) for j in j_range))
        missing = set(scales) - set(js)
        if missing:
            raise ParameterError(f"scale range misses required scales {sorted(missing)}", key="j_range")
    jm = scales.start
    centers = np.arange(width) + 0.5  # bin centers relative to s
    raw, supports = {}, {}
    for j in js:
        if j < jm:
            continue
        a, b = n * 2.0 ** -(j + 1), SUPPORT_FRACTION * n * 2.0 ** -(j - 1)
        supports[("s", j)] = (lo + a, lo + b)
        supports[("d", j)] = (hi - b, hi - a)
        raw[("s", j)] = _profile(centers, a, b, M)
        raw[("d", j)] = _profile(width - centers, a, b, M)
        if j == jm:
            half = SUPPORT_FRACTION * n * 2.0**-j
            mid = width / 2.0
            supports[("m", j)] = (lo + mid - half, lo + mid + half)
            raw[("m", j)] = _profile(centers, mid - half, mid + half, M)
    denom = sum(raw.values())
    if np.any(denom <= 0):
        raise DegenerateIntervalError("endpoint pieces fail to cover the interval")
    pieces = {key: v / denom for key, v in raw.items()}
    out = EndpointDecomposition(lo, hi, n, M, pieces, supports)
    for key in pieces:
        full = out.full(*key)
        if np.any(full):
            left, right = supports[key]
            stride = difference_stride(int(right - left), M)
            diff = strided_difference(full, M, stride)
            out.smoothness[key] = float(np.abs(diff).max() * (n / stride) ** M)
    return out
