import numpy as np
import pytest

from oracles import multiplier_matrix
from tflab.dyadic import AdaptedBumpFamily, FreqSet
from tflab.errors import ConfigurationError, ConstraintError, ParameterError
from tflab.normlab import (
    Configuration,
    ExponentConfig,
    PoolSpec,
    ScalingTable,
    default_builder,
    fit_slope,
    l2_power_iteration,
    lq_norm_search,
    max_threads,
    multiplier_operator,
    pool_candidates,
    predicted_exponent,
    random_intervals,
    ratio,
    scaling_experiment,
    weak11_search,
    weak_ratio,
)
from tflab.operators import MultiplierFamily, hilbert, hilbert_multiplier, psi_op


def identity(f):
    return np.asarray(f, dtype=complex)


def test_composition_exponent():
    assert predicted_exponent(ExponentConfig(1.5, 3.0)) == pytest.approx(1 / 3)


def test_variation_boundary_triple_is_rejected():
    # (1/2 - 1/3) * 2/2 + 2/3 - 1/2 = 1/3 equals 1/r: the strict constraint fails
    with pytest.raises(ConstraintError) as exc:
        ExponentConfig(1.5, 3.0, 4.0, mode="variation")
    assert exc.value.key == "s"


def test_variation_exponent_valid_triple():
    cfg = ExponentConfig(1.5, 3.0, 6.0, mode="variation")
    assert predicted_exponent(cfg) == pytest.approx((0.5 - 1 / 3) * 6 / 4 + 2 / 3 - 0.5)


def test_maximal_interval_and_baseline_exponents():
    assert predicted_exponent(ExponentConfig(2.0, 4.0, mode="maximal")) == pytest.approx(0.25)
    cfg = ExponentConfig(1.5, 3.0, eps=0.01)
    assert predicted_exponent(cfg, "interval") == pytest.approx(2 / 3 - 0.5 + 0.01)
    assert predicted_exponent(cfg, "baseline") == pytest.approx(1 / 3 + 1 / 6 + 0.02)


@pytest.mark.parametrize(
    "kwargs, key",
    [
        (dict(q=3.0, r=3.0), "q"),
        (dict(q=1.0, r=3.0), "q"),
        (dict(q=1.5, r=2.0), "r"),
        (dict(q=1.5, r=3.5), "r"),
        (dict(q=1.5, r=3.0, eps=-1.0), "eps"),
        (dict(q=1.5, r=3.0, mode="variation"), "s"),
        (dict(q=1.5, r=3.0, mode="nope"), "mode"),
    ],
)
def test_exponent_constraints(kwargs, key):
    with pytest.raises((ConstraintError, ConfigurationError)) as exc:
        ExponentConfig(**kwargs)
    assert exc.value.key == key


def test_power_iteration_identity_and_hilbert():
    n = 64
    assert l2_power_iteration(multiplier_operator(np.ones(n)), n).value == pytest.approx(1.0, abs=1e-10)
    est = l2_power_iteration(multiplier_operator(hilbert_multiplier(n)), n)
    assert est.value == pytest.approx(1.0, abs=1e-10)
    assert est.method == "power-iteration" and est.converged


@pytest.mark.parametrize("seed", range(50))
def test_power_iteration_matches_dense_svd(seed):
    rng = np.random.default_rng(seed)
    n = int(2 ** rng.integers(3, 8))
    m = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    oracle = np.linalg.svd(multiplier_matrix(m), compute_uv=False)[0]
    est = l2_power_iteration(multiplier_operator(m), n, seed=seed)
    assert est.value == pytest.approx(oracle, abs=1e-8)
    assert est.value == pytest.approx(np.abs(m).max(), abs=1e-8)
    # the witness reproduces the value
    assert np.linalg.norm(multiplier_operator(m).matvec(est.witness)) == pytest.approx(est.value, abs=1e-9)


def test_power_iteration_rejects_nonlinear():
    from scipy.sparse.linalg import LinearOperator

    n = 16
    op = LinearOperator((n, n), matvec=lambda x: np.abs(x), rmatvec=lambda x: x, dtype=complex)
    with pytest.raises(ParameterError):
        l2_power_iteration(op, n)


def test_search_trivial_operators():
    n = 64
    assert lq_norm_search(identity, 1.5, n).value == pytest.approx(1.0)
    assert lq_norm_search(lambda f: 2 * f, 3.0, n).value == pytest.approx(2.0)
    assert weak11_search(identity, n, PoolSpec.weak(narrow=0)).value == pytest.approx(1.0)


def test_search_approaches_l2_norm_of_interval_multiplier():
    n = 1024
    fam = MultiplierFamily.constant(n, [(10, 20)])
    exact = l2_power_iteration(multiplier_operator(fam.multiplier()), n).value
    est = lq_norm_search(lambda f: psi_op(f, fam), 2.0, n, PoolSpec(hints=(15,)), seed=3)
    assert est.value <= exact + 1e-9
    assert est.value >= 0.95 * exact


def test_witness_reproduces_value():
    n = 256
    op = lambda f: np.abs(hilbert(f)) ** 1.2  # noqa: E731
    est = lq_norm_search(op, 1.5, n, seed=4)
    assert ratio(op, est.witness, 1.5) == pytest.approx(est.value, rel=1e-9)
    w = weak11_search(hilbert, n, seed=5)
    assert weak_ratio(hilbert, w.witness) == pytest.approx(w.value, rel=1e-9)


def test_pool_is_prefix_consistent_and_monotone():
    n = 128
    small = PoolSpec(gaussian=2, combs=2, bumps=2, modulated=2, refine_steps=0)
    large = PoolSpec(gaussian=5, combs=4, bumps=6, modulated=3, refine_steps=0)
    a = pool_candidates(small, n, 9)
    b = pool_candidates(large, n, 9)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[2], b[5])  # first comb
    op = lambda f: np.abs(hilbert(f))  # noqa: E731
    assert lq_norm_search(op, 1.5, n, large, seed=9).value >= lq_norm_search(op, 1.5, n, small, seed=9).value


def test_empty_pool_and_bad_q():
    empty = PoolSpec(gaussian=0, combs=0, bumps=0, modulated=0)
    with pytest.raises(ParameterError):
        lq_norm_search(identity, 2.0, 16, empty)
    with pytest.raises(ParameterError):
        weak11_search(identity, 16, empty)
    with pytest.raises(ParameterError):
        lq_norm_search(identity, 0.5, 16)


def test_random_intervals_are_disjoint_and_spaced():
    rng = np.random.default_rng(0)
    ivs = random_intervals(256, 10, rng)
    flat = [e for iv in ivs for e in iv]
    assert flat == sorted(flat) and np.all(np.diff(flat) >= 2)
    with pytest.raises(ParameterError):
        random_intervals(16, 10, rng)


def test_default_builder_split():
    conf = default_builder(1024, 8, np.random.default_rng(1))
    assert len(conf.xi) == 4 and len(conf.family) == 4
    np.testing.assert_allclose([abs(c) for c in conf.family.coeffs], 1.0)
    with pytest.raises(ParameterError):
        default_builder(1024, 1, np.random.default_rng(1))


def test_constant_configuration_gives_flat_table():
    n = 256

    def fixed(n, N, rng, M):
        return Configuration(FreqSet((0,), n), MultiplierFamily.constant(n, [(-n // 2, n // 2)]), AdaptedBumpFamily(n, M))

    pool = PoolSpec(gaussian=2, combs=2, bumps=2, modulated=2, refine_steps=5)
    tab = scaling_experiment(ExponentConfig(1.5, 3.0), [2, 4, 8], 3, 11, n, builder=fixed, pool=pool)
    assert tab.estimates[0] == tab.estimates[1] == tab.estimates[2]
    assert abs(tab.slope) < 1e-12


def test_scaling_table_and_determinism(monkeypatch):
    pool = PoolSpec(gaussian=1, combs=1, bumps=1, modulated=2, refine_steps=3)
    cfg = ExponentConfig(1.5, 3.0)
    monkeypatch.setenv("TFLAB_THREADS", "1")
    a = scaling_experiment(cfg, [2, 4, 8], 3, 5, 256, pool=pool).to_csv("# hdr")
    monkeypatch.setenv("TFLAB_THREADS", "3")
    b = scaling_experiment(cfg, [2, 4, 8], 3, 5, 256, pool=pool).to_csv("# hdr")
    assert a == b
    lines = a.splitlines()
    assert lines[0] == "# hdr"
    assert lines[1] == "N,estimate,stderr,slope,intercept,predicted_thm,predicted_baseline"
    assert [int(line.split(",")[0]) for line in lines[2:]] == [2, 4, 8]


def test_scaling_input_validation():
    cfg = ExponentConfig(1.5, 3.0)
    with pytest.raises(ParameterError):
        scaling_experiment(cfg, [4, 8], 2, 0, 256)
    with pytest.raises(ParameterError):
        scaling_experiment(cfg, [4, 8, 8], 2, 0, 256)
    with pytest.raises(ConfigurationError):
        scaling_experiment(ExponentConfig(2.0, 4.0, mode="maximal"), [4, 8, 16], 2, 0, 256)
    with pytest.raises(ParameterError):
        scaling_experiment(cfg, [4, 8, 512], 1, 0, 256)


def test_fit_slope_exact_power_law():
    Ns = [4, 8, 16, 32]
    slope, intercept, res = fit_slope(Ns, [3 * N**0.25 for N in Ns])
    assert slope == pytest.approx(0.25) and intercept == pytest.approx(np.log2(3)) and res < 1e-12
    tab = ScalingTable(Ns, [1.0] * 4, [0.0] * 4, [1.0] * 4, 0.0, 0.0, 0.0, 1 / 3, 0.5)
    assert len(tab.to_csv().splitlines()) == 5


@pytest.mark.parametrize("value", ["0", "-2", "many"])
def test_thread_cap_validation(monkeypatch, value):
    monkeypatch.setenv("TFLAB_THREADS", value)
    with pytest.raises(ConfigurationError) as exc:
        max_threads()
    assert exc.value.key == "TFLAB_THREADS"


def test_thread_cap_default(monkeypatch):
    monkeypatch.delenv("TFLAB_THREADS", raising=False)
    assert max_threads() >= 1
    monkeypatch.setenv("TFLAB_THREADS", "2")
    assert max_threads() == 2
