import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockeq.errors import OutOfRange, UnsupportedPair
from blockeq.theory.asymptotics import asymptotic_prediction
from blockeq.theory.series import (
    HAT,
    A_asymptotic,
    A_correction,
    A_series,
    geometric_bessel_sum,
    integral_fraction_asymptotic,
    integral_fraction_correction,
    integral_fraction_series,
    reduced_matrix,
    t1_value,
    t2_asymptotic,
    t2_series,
    theory_w,
    theory_w_3x3,
    theory_w_correction,
    theory_w_table,
    truncation_order,
    w12_series_2x2,
    w_series_reduced,
)
from blockeq.theory.special import bessel_square_weights
from blockeq.theory.stability import n_values


def taylor_oracle(j, r1, r2, t, K=None, pole_at_one=True):
    """``sum_n c_n B_n`` with ``c_n`` the Taylor coefficients of
    ``m^j / ((1-m)(1-r1 m)(1-r2 m))`` (or without the ``1-m`` factor),
    built by convolving geometric sequences."""
    K = K or max(200, int(4 * t) + 100)
    n = np.arange(K)
    base = np.ones(K) if pole_at_one else (n == 0).astype(float)
    conv = np.convolve(np.convolve(base, r1**n)[:K], r2**n)[:K]
    c = np.zeros(K)
    c[j:] = conv[: K - j]
    return float(c @ bessel_square_weights(K - 1, t))


# --- single-pole sums ------------------------------------------------------------


def test_small_r_limit_is_t1():
    for t in (0.4, 3.0, 25.0):
        assert integral_fraction_series(1e-9, t) == pytest.approx(t1_value(t), abs=1e-8)


def test_integral_fraction_far_time():
    assert integral_fraction_series(0.8, 1e6) == pytest.approx(5.0, abs=1e-6)


def test_integral_fraction_against_asymptotic_at_r095():
    r, t = 0.95, 400.0
    corr = integral_fraction_correction(r, t)
    value, valid = integral_fraction_asymptotic(r, t)
    predicted = value - 1 / (1 - r)
    assert valid
    assert abs(corr - predicted) <= 0.15 * abs(predicted)


def test_integral_fraction_asymptotic_arithmetic():
    value, valid = integral_fraction_asymptotic(0.8, 1e3)
    assert value == pytest.approx(5 - 1.9894e-7, abs=1e-11)
    assert valid
    assert integral_fraction_asymptotic(0.8, 5.0)[1] is False
    assert integral_fraction_asymptotic(0.9, 10.0)[1] is False


def test_integral_fraction_agreement_improves_with_t():
    r = 0.9
    gaps = [abs(integral_fraction_series(r, s / (1 - r)) - integral_fraction_asymptotic(r, s / (1 - r))[0]) for s in (5, 20, 100)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_correction_equals_series_minus_limit():
    for r, t in [(0.3, 2.0), (0.8, 40.0), (0.97, 150.0)]:
        assert integral_fraction_correction(r, t) == pytest.approx(integral_fraction_series(r, t) - 1 / (1 - r), abs=1e-12)


def test_t2_vanishes_at_small_time():
    assert t2_series(0.7, 1e-6) < 1e-11
    assert t2_series(0.7, 1e-3) < 1e-5


def test_t2_against_asymptotic():
    r, t = 0.9, 300.0
    assert abs(t2_series(r, t) - t2_asymptotic(r, t)) <= 0.15 * t2_asymptotic(r, t)


@given(st.floats(0.01, 0.99), st.floats(0.01, 60.0))
@settings(max_examples=80, deadline=None)
def test_t1_minus_t2_identity(r, t):
    assert abs((1 - r) * integral_fraction_series(r, t) - (t1_value(t) - t2_series(r, t))) < 1e-10


def test_geometric_sum_at_rho_one():
    for t in (0.5, 9.0):
        assert geometric_bessel_sum(1.0, t) == pytest.approx(1.0, abs=1e-13)
        assert geometric_bessel_sum(1.0, t, 2) == pytest.approx(1 - bessel_square_weights(1, t)[1], abs=1e-13)


def test_truncation_order_floor_and_cap():
    assert truncation_order(0.5, 1.0) >= 2
    assert truncation_order(0.999999, 10.0) <= 80 + 40
    assert truncation_order(1.0, 1000.0) < 8000


def test_series_rejects_bad_arguments():
    with pytest.raises(OutOfRange):
        integral_fraction_series(1.0, 1.0)
    with pytest.raises(OutOfRange):
        integral_fraction_series(0.0, 1.0)
    with pytest.raises(OutOfRange):
        w12_series_2x2(1.5, 1.0)
    with pytest.raises(OutOfRange):
        geometric_bessel_sum(1.2, 1.0)


# --- two-block weight ------------------------------------------------------------


def test_w12_long_time_limit():
    for lam in (0.2, 0.5):
        assert w12_series_2x2(lam, 1e5) == pytest.approx(1 / (1 + lam), abs=1e-9)


def test_w12_matches_asymptotic_for_large_lambda_t():
    lam = 0.2
    for t in (100.0, 200.0):
        pred = asymptotic_prediction("2x2", "w", 1, 2, lam, t)
        corr = w12_series_2x2(lam, t) - pred.equilibrium
        assert abs(corr - pred.correction) <= 0.35 * abs(pred.correction)


@given(st.floats(0.01, 0.99), st.floats(0.01, 80.0))
@settings(max_examples=80, deadline=None)
def test_w12_in_terms_of_integral_fraction(lam, t):
    expected = integral_fraction_series(1 - lam, t) * lam / (1 + lam)
    assert abs(w12_series_2x2(lam, t) - expected) < 1e-10


# --- two-pole sums ---------------------------------------------------------------


@pytest.mark.parametrize("j", [2, 3, HAT])
@pytest.mark.parametrize("r1,r2,t", [(0.6, 0.45, 7.3), (0.93, 0.88, 20.0), (0.2, 0.7, 0.4), (0.5, 0.5, 3.0)])
def test_A_against_taylor_oracle(j, r1, r2, t):
    power = 2 if j == HAT else j
    oracle = taylor_oracle(power, r1, r2, t, K=1200, pole_at_one=j != HAT)
    assert A_series(j, r1, r2, t) == pytest.approx(oracle, rel=1e-11, abs=1e-13)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.1, 50.0))
@settings(max_examples=60, deadline=None)
def test_A2_symmetric(r1, r2, t):
    assert abs(A_series(2, r1, r2, t) - A_series(2, r2, r1, t)) < 1e-10 * max(1.0, abs(A_series(2, r1, r2, t)))


def test_A_long_time_limits():
    r1, r2 = 0.7, 0.4
    assert A_series(2, r1, r2, 5e4) == pytest.approx(1 / ((1 - r1) * (1 - r2)), rel=1e-9)
    assert abs(A_series(HAT, r1, r2, 5e4)) < 1e-9


@pytest.mark.parametrize("j", [2, 3, HAT])
def test_A_degenerate_branch_is_continuous(j):
    r, t = 0.8, 12.0
    near = A_series(j, r + 2e-7, r - 2e-7, t)
    assert A_series(j, r, r, t) == pytest.approx(near, rel=1e-7)
    assert A_series(j, r + 3e-9, r - 3e-9, t) == pytest.approx(A_series(j, r, r, t), rel=1e-12)


@pytest.mark.parametrize("j", [2, 3, HAT])
def test_A_against_asymptotic(j):
    r1, r2, t = 0.93, 0.88, 500.0
    corr = A_correction(j, r1, r2, t)
    predicted = A_asymptotic(j, r1, r2, t) - (0.0 if j == HAT else 1 / ((1 - r1) * (1 - r2)))
    assert abs(corr - predicted) <= 0.2 * abs(predicted)


@given(
    st.complex_numbers(max_magnitude=0.99, allow_nan=False, allow_infinity=False),
    st.floats(0.05, 0.95),
    st.floats(0.05, 0.95),
)
@settings(max_examples=100, deadline=None)
def test_partial_fractions_resum(m, r1, r2):
    if abs(r1 - r2) < 1e-3:
        return
    # the splittings behind the pole sums, back to the original rational functions
    hat = m**2 / ((1 - r1 * m) * (1 - r2 * m))
    assert abs(m**2 / (r1 - r2) * (r1 / (1 - r1 * m) - r2 / (1 - r2 * m)) - hat) < 1e-12 * max(1, abs(hat))
    full = 1 / ((1 - m) * (1 - r1 * m) * (1 - r2 * m))
    h = lambda r: r**2 / ((1 - r) * (1 - r * m))
    split = 1 / ((1 - r1) * (1 - r2) * (1 - m)) - (h(r1) - h(r2)) / (r1 - r2)
    assert abs(split - full) < 1e-12 * max(1, abs(full))


# --- assembled weights ------------------------------------------------------------


@pytest.mark.parametrize("model,lam", [("2x2", 0.2), ("2x2", 0.6), ("3x3", 0.2), ("3x3", 0.5)])
@pytest.mark.parametrize("t", [0.3, 2.0, 11.0, 40.0])
def test_weights_against_matrix_power_oracle(model, lam, t):
    S_hat = reduced_matrix(model, lam)
    table = theory_w_table(model, lam, t)
    n = S_hat.shape[0]
    for mu in range(1, n + 1):
        for nu in range(1, n + 1):
            assert table[mu - 1, nu - 1] == pytest.approx(w_series_reduced(S_hat, mu, nu, t), abs=1e-12)


def test_reduced_matrix_is_stochastic():
    for model in ("2x2", "3x3"):
        for lam in (0.05, 0.2, 0.55):
            assert np.allclose(reduced_matrix(model, lam).sum(axis=1), 1.0, atol=1e-14)


@given(st.floats(0.02, 0.6), st.floats(0.0, 200.0))
@settings(max_examples=60, deadline=None)
def test_three_block_sum_rule(lam, t):
    table = theory_w_table("3x3", lam, t)
    direct = [theory_w_3x3(1, 2, lam, t), theory_w_3x3(1, 3, lam, t)]
    assert abs(table[0, 0] + sum(direct) - 1) < 1e-9
    assert np.allclose(table.sum(axis=1), 1.0, atol=1e-12)


def test_three_block_symmetry():
    lam = 0.2
    for t in (0.7, 5.0, 30.0):
        assert theory_w_3x3(2, 1, lam, t) == pytest.approx(lam * theory_w_3x3(1, 2, lam, t), rel=1e-12)
        assert theory_w_3x3(3, 2, lam, t) == pytest.approx(lam * theory_w_3x3(2, 3, lam, t), rel=1e-12)


def test_w13_near_asymptotic_at_large_lambda_t():
    lam, t = 0.1, 1e3
    pred = asymptotic_prediction("3x3", "w", 1, 3, lam, t)
    corr = theory_w_correction("3x3", 1, 3, lam, t)
    assert abs(corr - pred.correction) <= 0.2 * abs(pred.correction)


def test_zero_time_is_identity():
    assert np.array_equal(theory_w_table("3x3", 0.2, 0.0), np.eye(3))
    assert theory_w("2x2", 2, 2, 0.3, 0.0) == 1.0


def test_diagonal_needs_sum_rule():
    with pytest.raises(UnsupportedPair):
        theory_w_3x3(2, 2, 0.2, 1.0)
    with pytest.raises(UnsupportedPair):
        theory_w("2x2", 1, 3, 0.2, 1.0)


@pytest.mark.parametrize("model,lam", [("2x2", 0.2), ("3x3", 0.2), ("3x3", 0.05)])
def test_correction_matches_difference(model, lam):
    eq = np.array([lam, 1.0] if model == "2x2" else [lam**2, lam, 1.0])
    eq = eq / eq.sum()
    n = eq.size
    for t in (3.0, 25.0):
        table = theory_w_table(model, lam, t)
        for mu in range(1, n + 1):
            for nu in range(1, n + 1):
                got = theory_w_correction(model, mu, nu, lam, t)
                assert got == pytest.approx(table[mu - 1, nu - 1] - eq[nu - 1], abs=1e-12)


def test_three_block_poles_feed_the_series():
    n2, n3 = n_values(0.2)
    # r = 1/n inside (0, 1) keeps every geometric series convergent
    assert 0 < 1 / n3 < 1 / n2 < 1


# --- convergence toward the asymptotic forms ----------------------------------------


SCHEDULE = (10, 30, 100, 300)


@pytest.mark.parametrize("r", [0.8, 0.9, 0.95])
def test_monotone_convergence_single_pole(r):
    gaps = []
    for s in SCHEDULE:
        t = s / (1 - r)
        series = integral_fraction_series(r, t)
        gaps.append(abs(series - integral_fraction_asymptotic(r, t)[0]) / abs(series))
    assert all(a > b for a, b in zip(gaps, gaps[1:])), gaps


@pytest.mark.parametrize("model,pair", [("2x2", (1, 2)), ("2x2", (2, 1)), ("3x3", (1, 2)), ("3x3", (1, 3)), ("3x3", (2, 3)), ("3x3", (3, 1))])
def test_monotone_convergence_weights(model, pair):
    lam = 0.1
    gaps = []
    for s in SCHEDULE:
        t = s / lam
        value = theory_w(model, *pair, lam, t)
        gaps.append(abs(value - asymptotic_prediction(model, "w", *pair, lam, t).value) / abs(value))
    assert all(a > b for a, b in zip(gaps, gaps[1:])), gaps


def test_correction_ratio_tends_to_half_sum():
    # averaging J_k(2t)^2 over its oscillation gives (1+r)/2 times the leading correction
    r = 0.95
    t = 2000 / (1 - r)
    predicted = -1 / (math.pi * t**3 * (1 - r) ** 4)
    assert integral_fraction_correction(r, t) / predicted == pytest.approx((1 + r) / 2, abs=2e-3)
