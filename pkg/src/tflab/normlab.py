"""Empirical operator norms and norm-growth experiments.

Every estimate here is a lower bound: it is the best ratio
``||T f|| / ||f||`` found over some set of inputs.  Comparisons against
predicted exponents are therefore one-sided.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .dyadic import DEFAULT_ORDER, AdaptedBumpFamily, FreqSet, spline_template
from .errors import ConfigurationError, ConstraintError, ParameterError
from .operators import MultiplierFamily, delta_star, delta_variation, psi_op
from .signal import dft, idft, log_size, lq_norm, weak_l1_quasinorm

MODES = ("composition", "variation", "maximal", "interval", "baseline")
THREADS_ENV = "TFLAB_THREADS"
BOOTSTRAP_SAMPLES = 200


# -- exponents -------------------------------------------------------------


@dataclass(frozen=True)
class ExponentConfig:
    """Exponents q, r, s and slack eps, checked against the hypotheses of ``mode``.

    Modes: ``composition`` (maximal multiplier after an interval multiplier),
    ``variation`` (s-variation in place of the supremum), ``maximal`` and
    ``interval`` (each operator alone) and ``baseline`` (the product of the
    two separate bounds).
    """

    q: float
    r: float
    s: float | None = None
    eps: float = 0.0
    mode: str = "composition"

    def __post_init__(self):
        check_exponents(self, self.mode)


def check_exponents(cfg: ExponentConfig, mode: str) -> None:
    q, r, s = cfg.q, cfg.r, cfg.s
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}; expected one of {MODES}", key="mode")
    if not cfg.eps >= 0:
        raise ConstraintError(f"eps must be nonnegative, got {cfg.eps}", key="eps")
    if mode in ("composition", "baseline"):
        if not 1 < q < 2:
            raise ConstraintError(f"need 1 < q < 2, got q={q}", key="q")
        # r = 2q is admitted as the limit of the open range
        if not 2 < r <= 2 * q:
            raise ConstraintError(f"need 2 < r <= 2q, got r={r}", key="r")
    elif mode == "variation":
        if not 1 < q < 2:
            raise ConstraintError(f"need 1 < q < 2, got q={q}", key="q")
        if not 2 < r:
            raise ConstraintError(f"need r > 2, got r={r}", key="r")
        if s is None or not r < s:
            raise ConstraintError(f"need s > r, got s={s}", key="s")
        # exact rationals so boundary triples are decided without rounding
        Q, R, S = Fraction(q), Fraction(r), Fraction(s)
        lhs = (Fraction(1, 2) - 1 / R) * 2 / (S - 2) + 1 / Q - Fraction(1, 2)
        if not lhs < 1 / R:
            raise ConstraintError(
                f"(1/2 - 1/r) 2/(s-2) + 1/q - 1/2 = {float(lhs):.6g} is not below 1/r = {1 / r:.6g}", key="s"
            )
    elif mode == "maximal":
        if not q >= 1:
            raise ConstraintError(f"need q >= 1, got q={q}", key="q")
        if not r > 2:
            raise ConstraintError(f"need r > 2, got r={r}", key="r")
    elif mode == "interval":
        if not q >= 1:
            raise ConstraintError(f"need q >= 1, got q={q}", key="q")


def predicted_exponent(cfg: ExponentConfig, target: str | None = None) -> float:
    """Growth exponent in the number of frequencies predicted for ``target`` (default cfg.mode)."""
    target = cfg.mode if target is None else target
    check_exponents(cfg, target)
    q, r, s, eps = cfg.q, cfg.r, cfg.s, cfg.eps
    if target == "composition":
        return 1 / q - 1 / r + eps
    if target == "variation":
        return (0.5 - 1 / r) * s / (s - 2) + 1 / q - 0.5 + eps
    if target == "maximal":
        return 1 / q - 1 / r
    if target == "interval":
        return 1 / q - 0.5 + eps
    return (1 / q - 1 / r + eps) + (1 / q - 0.5 + eps)


# -- estimates -------------------------------------------------------------


@dataclass
class NormEstimate:
    value: float
    witness: np.ndarray
    method: str
    trials: int = 1
    seed: int = 0
    converged: bool = True


def ratio(op: Callable, f: np.ndarray, q: float) -> float:
    """``||op f||_q / ||f||_q``."""
    return lq_norm(op(f), q) / lq_norm(f, q)


def weak_ratio(op: Callable, f: np.ndarray) -> float:
    """``||op f||_{L^1,inf} / ||f||_1``."""
    return weak_l1_quasinorm(op(f)) / lq_norm(f, 1)


def multiplier_operator(m) -> LinearOperator:
    """LinearOperator for the multiplier m (centered order) and its adjoint."""
    m = np.asarray(m)
    n = m.size
    return LinearOperator(
        (n, n),
        matvec=lambda x: idft(m * dft(np.ravel(x))),
        rmatvec=lambda x: idft(np.conj(m) * dft(np.ravel(x))),
        dtype=complex,
    )


def _linearity_probe(op: LinearOperator, n: int, rng) -> None:
    for _ in range(3):
        x, y = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
        a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        lhs = op.matvec(a * x + b * y)
        rhs = a * op.matvec(x) + b * op.matvec(y)
        if np.abs(lhs - rhs).max() > 1e-8 * (np.abs(rhs).max() + 1.0):
            raise ParameterError("operator failed a linearity probe", key="op")


def l2_power_iteration(op: LinearOperator, n: int, tol: float = 1e-10, maxiter: int = 1000,
                       seed: int = 0) -> NormEstimate:
    """Largest singular value of a linear operator via Lanczos iteration on T*T."""
    rng = np.random.default_rng(seed)
    _linearity_probe(op, n, rng)
    gram = LinearOperator((n, n), matvec=lambda x: op.rmatvec(op.matvec(np.ravel(x))), dtype=complex)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    converged = True
    if n <= 2:
        dense = np.array([op.matvec(e) for e in np.eye(n, dtype=complex)]).T
        u, sv, vh = np.linalg.svd(dense)
        vec = vh[0].conj()
    else:
        try:
            _, vecs = eigsh(gram, k=1, which="LA", tol=tol, maxiter=maxiter, v0=v0)
            vec = vecs[:, 0]
        except ArpackNoConvergence as exc:
            converged = False
            vec = exc.eigenvectors[:, 0] if exc.eigenvectors.size else v0
    vec = vec / np.linalg.norm(vec)
    value = float(np.linalg.norm(op.matvec(vec)))
    return NormEstimate(value, vec, "power-iteration", 1, seed, converged)


# -- input pools -----------------------------------------------------------


@dataclass(frozen=True)
class PoolSpec:
    """Counts per candidate family plus refinement steps.

    Each family draws from its own generator, so enlarging a count only
    appends candidates.  ``hints`` are frequencies (bins) near which
    modulated bumps are placed.
    """

    gaussian: int = 6
    combs: int = 6
    bumps: int = 6
    modulated: int = 12
    deltas: int = 0
    narrow: int = 0
    refine_steps: int = 50
    hints: tuple = ()

    @classmethod
    def weak(cls, **kw) -> "PoolSpec":
        base = dict(gaussian=0, combs=0, bumps=0, modulated=0, deltas=4, narrow=8, refine_steps=0)
        base.update(kw)
        return cls(**base)

    @property
    def size(self) -> int:
        return self.gaussian + self.combs + self.bumps + self.modulated + self.deltas + self.narrow


FAMILIES = ("gaussian", "combs", "bumps", "modulated", "deltas", "narrow")


def _bump(n: int, pos: int, width: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    vals = spline_template((np.arange(width) + 0.5) / width, 3)
    out[(pos + np.arange(width)) % n] = vals
    return out


def _candidate(family: str, n: int, rng, hints) -> np.ndarray:
    L = log_size(n)
    if family == "gaussian":
        return rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if family == "combs":
        spacing = 2 ** int(rng.integers(1, max(2, L - 1)))
        f = np.zeros(n, dtype=complex)
        teeth = np.arange(int(rng.integers(spacing)), n, spacing)
        f[teeth] = rng.choice([-1.0, 1.0], teeth.size) * n / teeth.size
        return f
    if family == "bumps":
        width = 2 ** int(rng.integers(2, max(3, L - 1)))
        return _bump(n, int(rng.integers(n)), width)
    if family == "modulated":
        # up to full-width bumps so the spectrum can sit inside a narrow interval
        width = 2 ** int(rng.integers(2, L + 1))
        if len(hints):
            freq = int(hints[int(rng.integers(len(hints)))]) + int(rng.integers(-2, 3))
        else:
            freq = int(rng.integers(-n // 2, n // 2))
        return _bump(n, int(rng.integers(n)), width) * np.exp(2j * np.pi * freq * np.arange(n) / n)
    if family == "deltas":
        f = np.zeros(n, dtype=complex)
        f[int(rng.integers(n))] = n
        return f
    if family == "narrow":
        return _bump(n, int(rng.integers(n)), int(rng.integers(2, 9)))
    raise ConfigurationError(f"unknown pool family {family!r}", key="pool")


def pool_candidates(pool: PoolSpec, n: int, seed) -> list[np.ndarray]:
    """All pool inputs, family by family, each family from its own seeded stream."""
    out = []
    for i, fam in enumerate(FAMILIES):
        rng = np.random.default_rng([*_seed_words(seed), i])
        out.extend(_candidate(fam, n, rng, pool.hints) for _ in range(getattr(pool, fam)))
    return out


def _seed_words(seed) -> list[int]:
    return [int(s) for s in np.atleast_1d(seed)]


def _refine(score: Callable, f: np.ndarray, value: float, steps: int, rng) -> tuple[np.ndarray, float]:
    """Coordinate ascent: perturb one sample at a time, keep improvements."""
    n = f.size
    scale = np.sqrt(np.mean(np.abs(f) ** 2))
    for _ in range(steps):
        trial = f.copy()
        trial[int(rng.integers(n))] += scale * (rng.standard_normal() + 1j * rng.standard_normal())
        v = score(trial)
        if v > value:
            f, value = trial, v
    return f, value


def _search(score: Callable, n: int, pool: PoolSpec, trials: int, seed, method: str) -> NormEstimate:
    if pool.size == 0:
        raise ParameterError("input pool is empty", key="pool")
    if trials < 1:
        raise ParameterError("trials must be >= 1", key="trials")
    best_f, best = None, -np.inf
    for t in range(trials):
        for f in pool_candidates(pool, n, [*_seed_words(seed), t]):
            v = score(f)
            if v > best:
                best_f, best = f, v
    if pool.refine_steps:
        rng = np.random.default_rng([*_seed_words(seed), trials, 7])
        best_f, best = _refine(score, best_f, best, pool.refine_steps, rng)
    seed_out = int(_seed_words(seed)[0])
    return NormEstimate(float(best), best_f, method, trials, seed_out)


def lq_norm_search(op: Callable, q: float, n: int, pool: PoolSpec | None = None, trials: int = 1,
                   seed=0) -> NormEstimate:
    """Best ``||op f||_q / ||f||_q`` over the pool, refined by coordinate ascent."""
    if not q >= 1:
        raise ParameterError(f"q must be >= 1, got {q}", key="q")
    pool = PoolSpec() if pool is None else pool
    return _search(lambda f: ratio(op, f, q), n, pool, trials, seed, "random-search")


def weak11_search(op: Callable, n: int, pool: PoolSpec | None = None, trials: int = 1,
                  seed=0) -> NormEstimate:
    """Best ``||op f||_{L^1,inf} / ||f||_1`` over a pool of deltas and narrow bumps."""
    pool = PoolSpec.weak() if pool is None else pool
    return _search(lambda f: weak_ratio(op, f), n, pool, trials, seed, "adversarial-pool")


# -- scaling experiments ---------------------------------------------------


def max_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        k = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}", key=THREADS_ENV)
    if k < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}", key=THREADS_ENV)
    return k


def random_intervals(n: int, count: int, rng, min_gap: int = 2, attempts: int = 1000) -> list[tuple[int, int]]:
    """``count`` disjoint bin intervals: pair up 2*count sorted distinct bins spaced >= min_gap."""
    if 2 * count * min_gap > n:
        raise ParameterError(f"{count} disjoint intervals do not fit on {n} bins", key="N")
    for _ in range(attempts):
        b = np.sort(rng.choice(np.arange(-n // 2, n // 2 + 1), 2 * count, replace=False))
        if np.all(np.diff(b) >= min_gap):
            return [(int(b[2 * i]), int(b[2 * i + 1])) for i in range(count)]
    raise ParameterError(f"could not place {count} disjoint intervals on {n} bins", key="N")


@dataclass
class Configuration:
    """One random instance: frequency set, interval family and bumps."""

    xi: FreqSet
    family: MultiplierFamily
    bumps: AdaptedBumpFamily

    @property
    def hints(self) -> tuple:
        ends = [e for iv in self.family.intervals for e in (iv[0], (iv[0] + iv[1]) // 2, iv[1])]
        return tuple(self.xi.xs) + tuple(ends)


def default_builder(n: int, N: int, rng, M: int = DEFAULT_ORDER) -> Configuration:
    """Half the frequencies go to the set, half to unit-modulus constant intervals."""
    if N < 2:
        raise ParameterError("N must be >= 2 to split between points and intervals", key="N")
    n_xi, n_iv = N - N // 2, N // 2
    xi = FreqSet(tuple(rng.choice(np.arange(-n // 2, n // 2), n_xi, replace=False)), n)
    ivs = random_intervals(n, n_iv, rng)
    coeffs = np.exp(2j * np.pi * rng.random(n_iv))
    return Configuration(xi, MultiplierFamily.constant(n, ivs, coeffs), AdaptedBumpFamily(n, M))


def composition_operator(conf: Configuration, cfg: ExponentConfig, k_range=None) -> Callable:
    if cfg.mode == "variation":
        return lambda f: delta_variation(psi_op(f, conf.family), conf.xi, conf.bumps, cfg.s, k_range)
    return lambda f: delta_star(psi_op(f, conf.family), conf.xi, conf.bumps, k_range)


@dataclass
class ScalingTable:
    Ns: list
    estimates: list  # median over trials
    stderr: list
    maxima: list
    slope: float
    intercept: float
    residual: float
    predicted_thm: float
    predicted_baseline: float
    raw: list = field(default_factory=list, repr=False)

    COLUMNS = ("N", "estimate", "stderr", "slope", "intercept", "predicted_thm", "predicted_baseline")

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(header.rstrip("\n") + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for N, est, se in zip(self.Ns, self.estimates, self.stderr):
            w.writerow([N, repr(est), repr(se), repr(self.slope), repr(self.intercept),
                        repr(self.predicted_thm), repr(self.predicted_baseline)])
        return buf.getvalue()


def fit_slope(Ns, values) -> tuple[float, float, float]:
    """Least squares of log2(values) on log2(Ns): (slope, intercept, rms residual)."""
    x, y = np.log2(np.asarray(Ns, float)), np.log2(np.asarray(values, float))
    slope, intercept = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), res


def bootstrap_stderr(values, rng) -> float:
    v = np.asarray(values, float)
    if v.size < 2:
        return 0.0
    idx = rng.integers(0, v.size, (BOOTSTRAP_SAMPLES, v.size))
    return float(np.std(np.median(v[idx], axis=1)))


def scaling_experiment(cfg: ExponentConfig, Ns, trials: int = 20, seed: int = 0, n: int = 2**14,
                       builder: Callable | None = None, M: int = DEFAULT_ORDER, pool: PoolSpec | None = None,
                       k_range=None) -> ScalingTable:
    """Median empirical norm of the composition for each N, and the log-log slope.

    Trial t uses generator seed ``seed ^ t`` at every N; trials run on up
    to TFLAB_THREADS threads and are reduced in trial order.
    """
    if cfg.mode not in ("composition", "variation"):
        raise ConfigurationError(f"scaling needs mode composition or variation, got {cfg.mode!r}", key="mode")
    Ns = [int(N) for N in Ns]
    if len(Ns) < 3 or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ParameterError("N list needs at least 3 strictly increasing values", key="N")
    if trials < 1:
        raise ParameterError("trials must be >= 1", key="trials")
    log_size(n)
    builder = default_builder if builder is None else builder
    pool = PoolSpec() if pool is None else pool

    def trial(N: int, t: int) -> float:
        rng = np.random.default_rng(seed ^ t)
        conf = builder(n, N, rng, M)
        op = composition_operator(conf, cfg, k_range)
        spec = replace(pool, hints=conf.hints)
        return lq_norm_search(op, cfg.q, n, spec, 1, [seed ^ t, 1]).value

    jobs = [(N, t) for N in Ns for t in range(trials)]
    with ThreadPoolExecutor(max_workers=max_threads()) as ex:
        values = list(ex.map(lambda job: trial(*job), jobs))
    raw = [values[i * trials : (i + 1) * trials] for i in range(len(Ns))]
    est = [float(np.median(v)) for v in raw]
    boot = np.random.default_rng([seed, 2])
    se = [bootstrap_stderr(v, boot) for v in raw]
    slope, intercept, res = fit_slope(Ns, est)
    base_cfg = ExponentConfig(cfg.q, cfg.r, cfg.s, cfg.eps, "baseline") if cfg.mode == "composition" else None
    return ScalingTable(
        Ns, est, se, [float(np.max(v)) for v in raw], slope, intercept, res,
        predicted_exponent(cfg),
        predicted_exponent(base_cfg) if base_cfg else predicted_baseline(cfg),
        raw,
    )


def predicted_baseline(cfg: ExponentConfig) -> float:
    """Product baseline; defined whenever 1 <= q and r > 2."""
    return (1 / cfg.q - 1 / cfg.r + cfg.eps) + (1 / cfg.q - 0.5 + cfg.eps)
