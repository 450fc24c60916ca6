"""Multiplier operators on the cyclic grid.

Every linear operator here acts by a centered multiplier on the spectrum
(see :mod:`tflab.signal`).  Maximal and variational operators are built on
stacks of per-scale outputs, one row per scale.

Scales follow the frequency side: scale k of the maximal multiplier uses
dyadic intervals of length 2**-k, and scale k of an averaging kernel uses
the dilated symbol ``phihat(2**k xi)`` (spatial kernel ``2**-k phi(2**-k y)``
in the continuous picture).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dyadic import DEFAULT_ORDER, AdaptedBumpFamily, FreqSet, active_intervals, smooth_step, spline_template
from .errors import ConfigurationError, ParameterError
from .signal import as_samples, dft, frequencies, idft, log_size
from .variation import variation_norm_columns


def scale_range(k_range, L: int, lowest: int = 1) -> list[int]:
    """Normalize a scale range (None, (a, b) inclusive, or iterable) and validate it."""
    if k_range is None:
        ks = list(range(lowest, L + 1))
    elif isinstance(k_range, tuple) and len(k_range) == 2:
        ks = list(range(k_range[0], k_range[1] + 1))
    else:
        ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ParameterError("empty scale range", key="k_range")
    if ks[0] < lowest or ks[-1] > L:
        raise ParameterError(f"scales {ks[0]}..{ks[-1]} outside [{lowest}, {L}]", key="k_range")
    return ks


def _stack(f, multipliers) -> np.ndarray:
    F = dft(f)
    return np.array([idft(m * F) for m in multipliers])


# -- interval multipliers ------------------------------------------------


@dataclass(frozen=True, eq=False)
class MultiplierFamily:
    """Disjoint frequency intervals [s, d) (integer bins) with symbols supported on each.

    ``symbols[i]`` holds the values of psi on the bins s_i .. d_i - 1.  In
    constant mode (``coeffs`` given) the symbol is ``c_i * 1_[s_i, d_i)``.
    """

    n: int
    intervals: tuple
    symbols: tuple
    coeffs: tuple | None = None

    def __post_init__(self):
        log_size(self.n)
        ivs = tuple((int(a), int(b)) for a, b in self.intervals)
        half = self.n // 2
        for a, b in ivs:
            if not -half <= a < b <= half:
                raise ConfigurationError(f"interval [{a}, {b}) outside [-{half}, {half})", key="intervals")
        order = sorted(range(len(ivs)), key=lambda i: ivs[i])
        for i, j in zip(order, order[1:]):
            if ivs[j][0] < ivs[i][1]:
                raise ConfigurationError(f"intervals {ivs[i]} and {ivs[j]} overlap", key="intervals")
        syms = tuple(np.asarray(s, dtype=complex).reshape(-1) for s in self.symbols)
        if len(syms) != len(ivs) or any(s.size != b - a for s, (a, b) in zip(syms, ivs)):
            raise ConfigurationError("each symbol must match its interval length", key="symbols")
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def constant(cls, n: int, intervals, coeffs=None) -> "MultiplierFamily":
        intervals = [(int(a), int(b)) for a, b in intervals]
        coeffs = np.ones(len(intervals), dtype=complex) if coeffs is None else np.asarray(coeffs, dtype=complex)
        syms = [np.full(b - a, c) for (a, b), c in zip(intervals, coeffs)]
        return cls(n, tuple(intervals), tuple(syms), tuple(complex(c) for c in coeffs))

    def __len__(self):
        return len(self.intervals)

    @property
    def left_endpoints(self) -> list[int]:
        return [a for a, _ in self.intervals]

    @property
    def sup_coeff(self) -> float:
        if self.coeffs is None:
            return max((float(np.abs(s).max()) for s in self.symbols), default=0.0)
        return max((abs(c) for c in self.coeffs), default=0.0)

    def piece_multiplier(self, i: int) -> np.ndarray:
        a, b = self.intervals[i]
        out = np.zeros(self.n, dtype=complex)
        out[a + self.n // 2 : b + self.n // 2] = self.symbols[i]
        return out

    def multiplier(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=complex)
        for (a, b), s in zip(self.intervals, self.symbols):
            out[a + self.n // 2 : b + self.n // 2] = s
        return out


def psi_op(f, family: MultiplierFamily) -> np.ndarray:
    """``sum_v (psi_v fhat)^vee``."""
    x = as_samples(f)
    if x.size != family.n:
        raise ConfigurationError("signal and family live on different grids", key="n")
    return idft(family.multiplier() * dft(x))


# -- Hilbert transform ---------------------------------------------------


def hilbert_multiplier(n: int) -> np.ndarray:
    """``-i sgn(m)`` with zero at DC and at the unpaired Nyquist bin -n/2."""
    m = frequencies(n)
    out = -1j * np.sign(m).astype(complex)
    out[0] = 0.0  # Nyquist sits at array position 0 in centered order
    return out


def hilbert(f) -> np.ndarray:
    x = as_samples(f)
    return idft(hilbert_multiplier(x.size) * dft(x))


# -- Bourgain-type maximal multiplier ------------------------------------


def delta_multiplier(xi: FreqSet, bumps: AdaptedBumpFamily, k: int) -> np.ndarray:
    """Sum of phi_omega over scale-k dyadic intervals meeting xi."""
    if bumps.n != xi.n:
        raise ConfigurationError("bump family and frequency set live on different grids", key="n")
    return bumps.sum_over(active_intervals(xi, k))


def delta_k(f, xi: FreqSet, bumps: AdaptedBumpFamily, k: int) -> np.ndarray:
    return idft(delta_multiplier(xi, bumps, k) * dft(f))


def delta_stack(f, xi: FreqSet, bumps: AdaptedBumpFamily, k_range=None) -> np.ndarray:
    """Rows ``delta_k(f)`` for k in the scale range."""
    ks = scale_range(k_range, log_size(xi.n))
    return _stack(f, [delta_multiplier(xi, bumps, k) for k in ks])


def delta_star(f, xi: FreqSet, bumps: AdaptedBumpFamily, k_range=None) -> np.ndarray:
    """Pointwise ``sup_k |delta_k f|``."""
    return np.abs(delta_stack(f, xi, bumps, k_range)).max(axis=0)


def delta_variation(f, xi: FreqSet, bumps: AdaptedBumpFamily, s: float, k_range=None,
                    allow_small_exponent: bool = False) -> np.ndarray:
    """Pointwise V^s norm of ``k -> delta_k f (x)``."""
    if not (s > 2 or (allow_small_exponent and s >= 1)):
        raise ParameterError(f"variation exponent s must exceed 2, got {s}", key="s")
    return variation_norm_columns(delta_stack(f, xi, bumps, k_range), s)


# -- single-frequency averaging operators --------------------------------


Template = Callable[[np.ndarray], np.ndarray]


def spline_symbol(order: int = DEFAULT_ORDER) -> Template:
    """Centered spline symbol: supported on (-1/2, 1/2), value 1 at 0."""
    return lambda xi: spline_template(np.asarray(xi) + 0.5, order)


def _check_template(template: Template) -> None:
    probe = np.linspace(0.5, 4.0, 4001)[1:]
    if np.any(template(probe) != 0) or np.any(template(-probe) != 0):
        raise ParameterError("averaging symbol must vanish outside [-1/2, 1/2]", key="template")


def dilated_multiplier(template: Template, k: int, n: int) -> np.ndarray:
    """Samples of ``phihat(2**k xi)`` at xi = m/n."""
    return np.asarray(template(2.0**k * frequencies(n) / n), dtype=float)


def average_stack(f, template: Template | None = None, k_range=None) -> np.ndarray:
    x = as_samples(f)
    L = log_size(x.size)
    template = spline_symbol() if template is None else template
    _check_template(template)
    ks = scale_range((1, L) if k_range is None else k_range, L, lowest=0)
    return _stack(x, [dilated_multiplier(template, k, x.size) for k in ks])


def maximal_average(f, template: Template | None = None, k_range=None) -> np.ndarray:
    """``sup_k |phi_k * f|``."""
    return np.abs(average_stack(f, template, k_range)).max(axis=0)


def variation_average(f, template: Template | None = None, r: float = 3.0, k_range=None,
                      allow_small_exponent: bool = False) -> np.ndarray:
    """Pointwise V^r norm of ``k -> phi_k * f (x)``."""
    if not (r > 2 or (allow_small_exponent and r >= 1)):
        raise ParameterError(f"variation exponent r must exceed 2, got {r}", key="r")
    return variation_norm_columns(average_stack(f, template, k_range), r)


# -- Littlewood-Paley family ---------------------------------------------


@dataclass(frozen=True)
class LittlewoodPaleyFamily:
    """Odd annular symbols whose dyadic dilates telescope to sgn.

    ``base(xi) = sgn(xi) (chi(xi/2) - chi(xi))`` with chi a smooth cutoff equal
    to 1 on |xi| <= 1/2 and 0 on |xi| >= 1, so base is supported on
    1/2 <= |xi| <= 2.  Dilates ``base(2**j xi)`` for j = 0..L cover every
    nonzero frequency of the 2**L grid.
    """

    L: int
    order: int = DEFAULT_ORDER

    def cutoff(self, xi) -> np.ndarray:
        a = np.abs(np.asarray(xi, dtype=float))
        return 1.0 - smooth_step(2.0 * a - 1.0, self.order)

    def base(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.sign(xi) * (self.cutoff(xi / 2.0) - self.cutoff(xi))

    @property
    def scales(self) -> range:
        return range(0, self.L + 1)

    def dilate_multiplier(self, j: int) -> np.ndarray:
        n = 2**self.L
        return self.base(2.0**j * frequencies(n) / n)

    def symbol_sum(self) -> np.ndarray:
        return sum(self.dilate_multiplier(j) for j in self.scales)


def lp_family(L: int, order: int = DEFAULT_ORDER) -> LittlewoodPaleyFamily:
    if L < 3:
        raise ParameterError("Littlewood-Paley family needs L >= 3", key="L")
    return LittlewoodPaleyFamily(L, order)
