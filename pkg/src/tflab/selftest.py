"""Fast in-package invariant checks backing ``tflab selftest``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .czd import multifreq_czd, verify_czd
from .dyadic import AdaptedBumpFamily, FreqSet, spline_derivative_bound
from .endpoint import endpoint_decompose
from .errors import TFLabError
from .normlab import l2_power_iteration, multiplier_operator
from .operators import MultiplierFamily, delta_k, delta_multiplier, hilbert, hilbert_multiplier, psi_op
from .signal import Signal, dft, idft
from .variation import step_decomposition, variation_norm, variation_norm_bruteforce


def _roundtrip(rng) -> str | None:
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    if np.abs(idft(dft(x)) - x).max() > 1e-12:
        return "dft round trip"
    s = Signal(x)
    if Signal.from_bytes(s.to_bytes()) != s or Signal.from_csv(s.to_csv()) != s:
        return "signal serialization"
    return None


def _variation(rng) -> str | None:
    for r in (1.0, 1.5, 2.0, 3.0, np.inf):
        for _ in range(20):
            v = rng.standard_normal(int(rng.integers(1, 9)))
            if abs(variation_norm(v, r) - variation_norm_bruteforce(v, r)) > 1e-10:
                return f"variation dp vs brute force at r={r}"
    return None


def _dense(op: Callable, n: int) -> np.ndarray:
    return np.array([op(e) for e in np.eye(n, dtype=complex)]).T


def _operators(rng) -> str | None:
    n = 32
    jj = np.arange(n)
    W = np.exp(-2j * np.pi * np.outer(np.arange(n) - n // 2, jj) / n) / n  # centered forward DFT
    Winv = np.linalg.inv(W)
    fam = MultiplierFamily.constant(n, [(-7, -2), (3, 9)], [1.0, 1j])
    xi = FreqSet((-5, 0, 6), n)
    bumps = AdaptedBumpFamily(n, 4)
    cases = [
        (lambda f: psi_op(f, fam), fam.multiplier()),
        (hilbert, hilbert_multiplier(n)),
        (lambda f: delta_k(f, xi, bumps, 3), delta_multiplier(xi, bumps, 3)),
    ]
    for op, m in cases:
        if np.abs(_dense(op, n) - Winv @ np.diag(m) @ W).max() > 1e-10:
            return "multiplier operator vs dense matrix"
    return None


def _steps(rng) -> str | None:
    psi = np.cumsum(rng.standard_normal(200)) / 10
    d = step_decomposition(psi, 2.0, 8)
    for j, lev in enumerate(d.levels):
        if len(lev) > 2**j:
            return f"level {j} has {len(lev)} intervals"
        if lev.coeffs.size and np.abs(lev.coeffs).max() > 2 ** (-j / 2) * d.norm + 1e-9:
            return f"level {j} coefficient bound"
    if np.abs(d.partial_sum(8) - psi).max() > 2 * 2 ** (-8 / 2) * d.norm:
        return "partial sum error"
    return None


def _czd(rng) -> str | None:
    n = 512
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    f[100:116] += 20
    d = multifreq_czd(f, 4.0, [0, 17, -40])
    c = verify_czd(d)
    if c["modulation_residual"] > 1e-8 * np.abs(f).mean():
        return "modulated mean"
    return None


def _endpoint(rng) -> str | None:
    d = endpoint_decompose(-37, 91, 1024, M=4)
    if np.abs(d.total() - 1).max() > 1e-9:
        return "endpoint partition"
    return None


def _bumps(rng) -> str | None:
    fam = AdaptedBumpFamily(1024, 4)
    if abs(fam.smoothness(2) - spline_derivative_bound(4)) > 1e-6 * spline_derivative_bound(4):
        return "bump smoothness constant"
    return None


def _power(rng) -> str | None:
    m = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    est = l2_power_iteration(multiplier_operator(m), 64)
    if abs(est.value - np.abs(m).max()) > 1e-8:
        return "power iteration vs max multiplier"
    return None


CHECKS = {
    "signal": _roundtrip,
    "variation": _variation,
    "operators": _operators,
    "steps": _steps,
    "czd": _czd,
    "endpoint": _endpoint,
    "bumps": _bumps,
    "power": _power,
}


def run_selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Run every check; each returns None on success or a failure description."""
    results = []
    for name, check in CHECKS.items():
        rng = np.random.default_rng([seed, len(results)])
        try:
            problem = check(rng)
        except TFLabError as exc:
            problem = f"{type(exc).__name__}: {exc}"
        results.append((name, problem is None, problem or ""))
    return results
