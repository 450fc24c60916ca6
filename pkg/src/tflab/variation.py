"""r-variation norms and step-function decompositions of bounded-variation symbols."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParameterError

BRUTE_FORCE_LIMIT = 14


@dataclass(frozen=True, eq=False)
class VarSequence:
    """Values sampled at strictly increasing abscissae."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        if p.size != v.size:
            raise ConfigurationError("points and values must have equal length", key="points")
        if p.size > 1 and not np.all(np.diff(p) > 0):
            raise ConfigurationError("points must be strictly increasing", key="points")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values) -> "VarSequence":
        values = np.asarray(values)
        return cls(np.arange(values.size), values)

    def __len__(self):
        return self.values.size


def _values(seq) -> np.ndarray:
    if isinstance(seq, VarSequence):
        return seq.values
    return np.asarray(seq, dtype=complex).reshape(-1)


def _check_r(r: float) -> None:
    if not r >= 1:
        raise ParameterError(f"variation exponent r must be >= 1, got {r}", key="r")


def variation_norm(seq, r: float) -> float:
    """``sup|f| + sup_{increasing subsequences} (sum |f(x_j) - f(x_{j-1})|**r)**(1/r)``.

    Exact via the O(K**2) dynamic program ``best(i) = max_{j<i} best(j) + |f_i - f_j|**r``.
    """
    _check_r(r)
    v = _values(seq)
    if v.size == 0:
        return 0.0
    sup = float(np.abs(v).max())
    return sup + variation_part(v, r)


def variation_part(v, r: float) -> float:
    """The variation term alone (no sup-norm)."""
    v = np.asarray(v)
    if v.size < 2:
        return 0.0
    if r == np.inf:
        return float(np.abs(v[:, None] - v[None, :]).max())
    return float(prefix_variation(v, r)[-1] ** (1.0 / r))


def prefix_variation(v, r: float) -> np.ndarray:
    """``V[t]`` = r-th power of the r-variation of ``v[:t+1]``; nondecreasing in t."""
    v = np.asarray(v)
    K = v.size
    best = np.zeros(K)
    for i in range(1, K):
        best[i] = np.max(best[:i] + np.abs(v[i] - v[:i]) ** r)
    return np.maximum.accumulate(best)


def variation_norm_columns(values, r: float) -> np.ndarray:
    """Variation norm of every column of a (K, P) array, vectorized over columns.

    Row index is the sequence position, so column x holds ``k -> values[k, x]``.
    """
    _check_r(r)
    a = np.asarray(values)
    K = a.shape[0]
    sup = np.abs(a).max(axis=0)
    if K < 2:
        return sup
    if r == np.inf:
        var = np.zeros(a.shape[1])
        for i in range(1, K):
            var = np.maximum(var, np.abs(a[i] - a[:i]).max(axis=0))
        return sup + var
    best = np.zeros(a.shape, dtype=float)
    for i in range(1, K):
        best[i] = (best[:i] + np.abs(a[i] - a[:i]) ** r).max(axis=0)
    return sup + best.max(axis=0) ** (1.0 / r)


def _subset_orders(K: int) -> tuple[np.ndarray, np.ndarray]:
    """Every subset of range(K) with >= 2 elements: member positions first, and sizes."""
    masks = (np.arange(2**K)[:, None] >> np.arange(K)) & 1
    masks = masks[masks.sum(axis=1) >= 2].astype(bool)
    order = np.argsort(~masks, axis=1, kind="stable")
    return order, masks.sum(axis=1)


def variation_norm_bruteforce(seq, r: float) -> float:
    """Exhaustive maximum over all increasing subsequences (test oracle, K <= 14)."""
    _check_r(r)
    v = _values(seq)
    K = v.size
    if K > BRUTE_FORCE_LIMIT:
        raise ParameterError(f"brute force refused for length {K} > {BRUTE_FORCE_LIMIT}", key="length")
    if K == 0:
        return 0.0
    sup = float(np.abs(v).max())
    if K < 2:
        return sup
    order, sizes = _subset_orders(K)
    picked = v[order]
    inc = np.abs(np.diff(picked, axis=1))
    valid = np.arange(K - 1) < (sizes - 1)[:, None]
    if r == np.inf:
        totals = np.where(valid, inc, 0.0).max(axis=1)
    else:
        totals = np.where(valid, inc**r, 0.0).sum(axis=1) ** (1.0 / r)
    return sup + float(totals.max())


# -- step decomposition ----------------------------------------------------


@dataclass
class StepLevel:
    level: int
    lo: np.ndarray  # absolute first bin of each interval
    hi: np.ndarray  # one past the last bin
    coeffs: np.ndarray

    def __len__(self):
        return self.lo.size


@dataclass
class StepDecomposition:
    """``psi = sum_j sum_{I in levels[j]} c_I 1_I`` with at most 2**j disjoint intervals per level."""

    levels: list
    norm: float  # V^r norm of psi extended by zero
    r: float
    lo: int
    size: int
    clamp_slack: float = 0.0
    threshold: float = field(default=0.0, repr=False)

    def partial_sum(self, J: int) -> np.ndarray:
        """Reconstruction from levels 0..J on the interval's own bins."""
        out = np.zeros(self.size, dtype=complex)
        for lev in self.levels[: J + 1]:
            for a, b, c in zip(lev.lo, lev.hi, lev.coeffs):
                out[a - self.lo : b - self.lo] += c
        return out

    def to_json(self) -> str:
        return json.dumps(
            [
                {
                    "level": lev.level,
                    "intervals": [
                        {"lo_bin": int(a), "hi_bin": int(b), "re": float(c.real), "im": float(c.imag)}
                        for a, b, c in zip(lev.lo, lev.hi, lev.coeffs)
                    ],
                }
                for lev in self.levels
            ],
            indent=1,
        )


def _crossings(V: np.ndarray, tau: float) -> np.ndarray:
    """Block starts: index -> largest multiple c with V >= c*tau first reached there."""
    # count of thresholds reached at each index; a block starts where the count increases
    count = np.floor(V / tau).astype(np.int64)
    starts = np.flatnonzero(np.diff(count) > 0) + 1
    return np.concatenate(([0], starts))


def step_decomposition(psi, r: float, Jmax: int, lo: int = 0) -> StepDecomposition:
    """Decompose samples of psi on consecutive bins ``lo, lo+1, ...`` into step levels.

    psi is treated as a compactly supported symbol, i.e. extended by zero on
    both sides, and its norm is the V^r norm of that extension.  Stopping
    times of the cumulative r-variation ``V`` (measured from the left zero)
    at the thresholds ``c * 2**-(j+1) * T`` define nested partitions; each
    block carries the value of psi at its left end, and level j is the
    difference between consecutive partitions.  With ``V(end) < T <= norm**r``
    every level has at most 2**j nonzero intervals, every coefficient obeys
    ``|c| <= 2**(-j/r) * norm`` and the level-J partial sum is within
    ``2**(-(J+1)/r) T**(1/r)`` of psi.
    """
    if not r > 1:
        raise ParameterError(f"step decomposition needs r > 1, got {r}", key="r")
    if Jmax < 0:
        raise ParameterError("Jmax must be >= 0", key="Jmax")
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    K = psi.size
    ext = np.concatenate(([0.0], psi))
    norm = variation_norm(np.concatenate(([0.0], psi, [0.0])), r)
    V = prefix_variation(ext, r)
    total = V[-1]
    if total == 0.0:
        return StepDecomposition(
            [StepLevel(j, *(np.empty(0, dtype=int),) * 2, np.empty(0, complex)) for j in range(Jmax + 1)],
            norm, r, lo, K,
        )
    # any T in (V_total, norm**r] works; the smallest keeps level 0 as sharp as possible
    T = min(norm**r, total * (1.0 + 1e-9))
    levels = []
    prev_starts = np.array([0])
    prev_vals = np.array([0.0 + 0j])
    slack = 0.0
    for j in range(Jmax + 1):
        starts = _crossings(V, 2.0 ** -(j + 1) * T)
        vals = ext[starts]
        # value of the previous partition on each new block (partitions are nested)
        parent = np.searchsorted(prev_starts, starts, side="right") - 1
        diff = vals - prev_vals[parent]
        bound = 2.0 ** (-j / r) * norm
        mag = np.abs(diff)
        over = mag > bound
        if np.any(over):
            slack = max(slack, float((mag[over] - bound).max()))
            diff[over] *= bound / mag[over]
            vals = prev_vals[parent] + diff
        ends = np.concatenate((starts[1:], [K + 1]))
        keep = diff != 0
        # position 0 of ext is the zero extension; shift back to psi's own bins
        a = np.maximum(starts[keep], 1) - 1 + lo
        b = ends[keep] - 1 + lo
        levels.append(StepLevel(j, a, b, diff[keep]))
        prev_starts, prev_vals = starts, vals
    return StepDecomposition(levels, norm, r, lo, K, clamp_slack=slack, threshold=T)
