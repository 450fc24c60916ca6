"""Independent reference implementations used as test oracles.

Nothing here calls numpy.fft or the package's transform helpers: transforms
are explicit exponential sums and operators are dense matrices.
"""

import numpy as np


def dft_matrix(n):
    """Row i maps samples to the coefficient of frequency i - n/2, with weight 1/n."""
    m = np.arange(n) - n // 2
    x = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, x) / n) / n


def synthesis_matrix(n):
    m = np.arange(n) - n // 2
    x = np.arange(n)
    return np.exp(2j * np.pi * np.outer(x, m) / n)


def multiplier_matrix(symbol):
    """Dense matrix of the multiplier with centered symbol values."""
    n = len(symbol)
    return synthesis_matrix(n) @ np.diag(symbol) @ dft_matrix(n)


def apply_dense(op, n):
    """Dense matrix of a linear map by probing with the standard basis."""
    return np.array([op(e) for e in np.eye(n, dtype=complex)]).T


def weak_l1_bruteforce(f):
    """max over thresholds t in |f| of t * #{|f| >= t} / n."""
    a = np.abs(np.asarray(f))
    return max(t * np.count_nonzero(a >= t) for t in a) / a.size


def lq_direct(f, q):
    return np.mean(np.abs(f) ** q) ** (1 / q)


def variation_recursive(v, r):
    """Sup plus r-variation by recursion over the last chosen index (exponential)."""
    v = list(v)
    best = 0.0

    def extend(last, acc):
        nonlocal best
        best = max(best, acc)
        for j in range(last + 1, len(v)):
            extend(j, acc + abs(v[j] - v[last]) ** r)

    for i in range(len(v)):
        extend(i, 0.0)
    return max(abs(x) for x in v) + best ** (1 / r)
