import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.estimators import (
    EstimationError,
    GainSchedule,
    NoisyOracle,
    NumericalError,
    gain_at,
    kw_gradient,
    perturbation_sampler,
    regularize_hessian,
    sample_rademacher,
    spsa_gradient,
    spsa_hessian,
)

from conftest import all_signs, deterministic, random_quadratic


# --- gain schedule -----------------------------------------------------------

def test_gain_at_first_iteration():
    assert gain_at(GainSchedule(a=1, c=1, A=0, alpha=1, gamma=0.5), 0) == (1.0, 1.0)


def test_gain_at_n3():
    a_n, c_n = gain_at(GainSchedule(a=1, c=1, A=0, alpha=1, gamma=0.5), 3)
    assert a_n == 0.25
    assert c_n == 0.5


def test_gain_at_standard_exponents():
    # 0.5 / 11**0.602 from a 30-digit mpmath evaluation
    a_n, c_n = gain_at(GainSchedule(a=0.5, c=0.1, A=10, alpha=0.602, gamma=0.101), 0)
    assert a_n == pytest.approx(0.118046090327370525, rel=1e-15)
    assert c_n == 0.1


@given(n=st.integers(0, 10_000))
def test_gains_decrease(n):
    s = GainSchedule(a=0.3, c=0.2, A=5)
    a0, c0 = gain_at(s, n)
    a1, c1 = gain_at(s, n + 1)
    assert 0 < a1 < a0
    assert 0 < c1 <= c0


@pytest.mark.parametrize("kwargs", [
    dict(a=math.nan, c=1), dict(a=1, c=math.inf), dict(a=0, c=1), dict(a=1, c=-1),
    dict(a=1, c=1, A=-1), dict(a=1, c=1, alpha=0.5), dict(a=1, c=1, alpha=1.1),
    dict(a=1, c=1, gamma=0), dict(a=1, c=1, gamma=0.9),
])
def test_schedule_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        GainSchedule(**kwargs)


def test_gain_at_rejects_negative_index():
    with pytest.raises(ValueError):
        gain_at(GainSchedule(a=1, c=1), -1)


# --- perturbations -----------------------------------------------------------

def test_rademacher_support():
    d = sample_rademacher(3, np.random.default_rng(5))
    assert np.all(np.abs(d) == 1)


def test_rademacher_deterministic():
    a = sample_rademacher(5, np.random.default_rng(42))
    b = sample_rademacher(5, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_rademacher_mean():
    d = np.array([sample_rademacher(1, rng)[0] for rng in [np.random.default_rng(7)] for _ in range(10_000)])
    assert set(np.unique(d)) == {-1.0, 1.0}
    assert abs(d.mean()) < 0.05


def test_rademacher_rejects_zero_dim():
    with pytest.raises(ValueError):
        sample_rademacher(0, np.random.default_rng(0))


@pytest.mark.parametrize("kind", ["uniform", "normal", "Normal"])
def test_perturbation_sampler_rejects_unbounded_inverse_moments(kind):
    with pytest.raises(ValueError, match="inverse moment"):
        perturbation_sampler(kind)


def test_perturbation_sampler_rademacher():
    assert perturbation_sampler("rademacher") is sample_rademacher
    with pytest.raises(ValueError):
        perturbation_sampler("cauchy")


# --- oracle ------------------------------------------------------------------

def test_oracle_counts_calls():
    oracle = deterministic(lambda t: float(t @ t))
    for k in range(1, 4):
        oracle(np.zeros(2))
        assert oracle.call_count == k


# --- KW ----------------------------------------------------------------------

def test_kw_exact_on_quadratic():
    est = kw_gradient(deterministic(lambda t: t[0] ** 2 + 2 * t[1] ** 2), [1.0, 1.0], 0.1)
    np.testing.assert_allclose(est.g_hat, [2.0, 4.0], atol=1e-12)
    assert est.evals_used == 4


def test_kw_eval_count_n10():
    oracle = deterministic(lambda t: float(np.sum(t)))
    est = kw_gradient(oracle, np.zeros(10), 0.1)
    assert est.evals_used == 20
    assert oracle.call_count == 20


def test_kw_cubic():
    # ((1.1)**3 - (0.9)**3) / 0.2 = 301/100 in exact rationals
    est = kw_gradient(deterministic(lambda t: t[0] ** 3), [1.0], 0.1)
    assert est.g_hat[0] == pytest.approx(3.01, abs=1e-12)


@pytest.mark.parametrize("c_n", [1.0, 0.1, 0.001])
def test_kw_quadratic_exactness(rng, c_n):
    for N in range(1, 7):
        A, b = random_quadratic(rng, N)
        theta = rng.normal(size=N)
        est = kw_gradient(deterministic(lambda t: t @ A @ t + b @ t), theta, c_n)
        np.testing.assert_allclose(est.g_hat, 2 * A @ theta + b, rtol=0, atol=1e-9)


def test_kw_reports_non_finite_probe():
    oracle = deterministic(lambda t: math.inf if t[1] > 0 else 0.0)
    with pytest.raises(EstimationError) as info:
        kw_gradient(oracle, [0.0, 0.0], 0.5)
    np.testing.assert_array_equal(info.value.point, [0.0, 0.5])


def test_kw_rejects_nonpositive_c():
    with pytest.raises(ValueError):
        kw_gradient(deterministic(lambda t: 0.0), [0.0], 0.0)


# --- SPSA --------------------------------------------------------------------

def test_spsa_two_evals_in_100_dims():
    oracle = deterministic(lambda t: float(t @ t))
    est = spsa_gradient(oracle, np.ones(100), 0.1, sample_rademacher(100, np.random.default_rng(1)))
    assert est.evals_used == 2
    assert oracle.call_count == 2


def test_spsa_single_perturbation():
    # (f(1.1, 1.1) - f(0.9, 0.9)) / 0.2 = (2.42 - 1.62) / 0.2
    est = spsa_gradient(deterministic(lambda t: float(t @ t)), [1.0, 1.0], 0.1, [1.0, 1.0])
    np.testing.assert_allclose(est.g_hat, [4.0, 4.0], atol=1e-12)


def test_spsa_divides_by_each_sign():
    est = spsa_gradient(deterministic(lambda t: float(t @ t)), [1.0, 1.0], 0.1, [1.0, -1.0])
    # theta +- c*delta has the same norm either way, so the numerator vanishes
    np.testing.assert_allclose(est.g_hat, [0.0, 0.0], atol=1e-12)
    est = spsa_gradient(deterministic(lambda t: 3 * t[0] - t[1]), [0.0, 0.0], 0.5, [1.0, -1.0])
    np.testing.assert_allclose(est.g_hat, [4.0, -4.0], atol=1e-12)


def test_spsa_enumerated_mean_two_dims():
    f = deterministic(lambda t: float(t @ t))
    g = np.mean([spsa_gradient(f, [1.0, 1.0], 0.1, d).g_hat for d in all_signs(2)], axis=0)
    np.testing.assert_allclose(g, [2.0, 2.0], atol=1e-12)


@pytest.mark.parametrize("N", [1, 3, 6, 9])
def test_spsa_unbiased_on_quadratics(rng, N):
    A, b = random_quadratic(rng, N)
    theta = rng.normal(size=N)
    f = deterministic(lambda t: t @ A @ t + b @ t)
    g = np.mean([spsa_gradient(f, theta, 0.1, d).g_hat for d in all_signs(N)], axis=0)
    np.testing.assert_allclose(g, 2 * A @ theta + b, rtol=0, atol=1e-8)


def test_spsa_rejects_bad_perturbation():
    f = deterministic(lambda t: 0.0)
    with pytest.raises(ValueError):
        spsa_gradient(f, [0.0, 0.0], 0.1, [1.0, 0.5])
    with pytest.raises(ValueError):
        spsa_gradient(f, [0.0, 0.0], 0.1, [1.0])


def test_spsa_non_finite_output():
    with pytest.raises(EstimationError):
        spsa_gradient(deterministic(lambda t: math.nan), [0.0], 0.1, [1.0])


# --- 2SPSA Hessian -----------------------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 7])
def test_hessian_uses_four_evals(N):
    oracle = deterministic(lambda t: float(t @ t))
    r = np.random.default_rng(N)
    est = spsa_hessian(oracle, np.ones(N), 0.1, 0.05, sample_rademacher(N, r), sample_rademacher(N, r))
    assert est.evals_used == 4
    assert oracle.call_count == 4


def test_hessian_gradient_part_matches_spsa():
    f = deterministic(lambda t: np.sin(t).sum() + t[0] * t[1] ** 2)
    theta, d, dt = np.array([0.3, -0.7]), np.array([1.0, -1.0]), np.array([-1.0, -1.0])
    h = spsa_hessian(f, theta, 0.1, 0.05, d, dt)
    g = spsa_gradient(f, theta, 0.1, d)
    np.testing.assert_array_equal(h.g_hat, g.g_hat)
    np.testing.assert_array_equal(h.samples[:2], g.samples)


def test_hessian_enumerated_mean_identity_quadratic():
    f = deterministic(lambda t: float(t @ t))
    H = np.mean([spsa_hessian(f, [0.4, -1.3], 0.1, 0.07, d, dt).h_hat
                 for d in all_signs(2) for dt in all_signs(2)], axis=0)
    np.testing.assert_allclose(H, 2 * np.eye(2), atol=1e-10)


@pytest.mark.parametrize("N", [2, 3, 5])
def test_hessian_unbiased_on_quadratics(rng, N):
    A = rng.normal(size=(N, N))  # not symmetric on purpose
    theta = rng.normal(size=N)
    f = deterministic(lambda t: t @ A @ t)
    signs = all_signs(N)
    H = np.mean([spsa_hessian(f, theta, 0.2, 0.1, d, dt).h_hat for d in signs for dt in signs], axis=0)
    np.testing.assert_allclose(H, A + A.T, rtol=0, atol=1e-8)


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_hessian_exactly_symmetric(N, seed):
    r = np.random.default_rng(seed)
    A = r.normal(size=(N, N))
    oracle = NoisyOracle(lambda t, g: t @ A @ t + np.cos(t).sum() + g.normal(), np.random.default_rng(seed))
    est = spsa_hessian(oracle, r.normal(size=N), 0.1, 0.05, sample_rademacher(N, r), sample_rademacher(N, r))
    assert np.array_equal(est.h_hat, est.h_hat.T)


def test_hessian_non_finite_output():
    oracle = deterministic(lambda t: math.inf if t[0] > 1.05 else 0.0)
    with pytest.raises(EstimationError):
        spsa_hessian(oracle, [1.0], 0.01, 0.1, [1.0], [1.0])


# --- regularization ----------------------------------------------------------

def test_regularize_identity_unchanged():
    np.testing.assert_allclose(regularize_hessian(np.eye(3), 1e-4), np.eye(3), atol=1e-15)


def test_regularize_clips_negative_eigenvalue():
    np.testing.assert_allclose(regularize_hessian(np.diag([2.0, -1.0]), 0.01), np.diag([2.0, 0.01]), atol=1e-15)


def test_regularize_zero_matrix():
    np.testing.assert_allclose(regularize_hessian(np.zeros((2, 2)), 0.5), 0.5 * np.eye(2), atol=1e-15)


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(1e-4, 10))
def test_regularize_is_positive_definite(N, seed, reg):
    M = np.random.default_rng(seed).normal(size=(N, N)) * 5
    out = regularize_hessian(M + M.T, reg)
    assert np.array_equal(out, out.T)
    assert np.linalg.eigvalsh(out).min() >= reg * (1 - 1e-9)


def test_regularize_reports_eig_failure():
    with pytest.raises(NumericalError):
        regularize_hessian(np.array([[np.nan, 0.0], [0.0, 1.0]]), 0.1)


# --- determinism -------------------------------------------------------------

def test_estimates_bit_identical_for_same_seed():
    def run(seed):
        r = np.random.default_rng(seed)
        oracle = NoisyOracle(lambda t, g: float(t @ t) + 0.1 * g.normal(), np.random.default_rng(seed + 1))
        d, dt = sample_rademacher(4, r), sample_rademacher(4, r)
        return (spsa_gradient(oracle, np.ones(4), 0.1, d).g_hat,
                kw_gradient(oracle, np.ones(4), 0.1).g_hat,
                spsa_hessian(oracle, np.ones(4), 0.1, 0.05, d, dt).h_hat)
    for x, y in zip(run(3), run(3)):
        assert np.array_equal(x, y)
