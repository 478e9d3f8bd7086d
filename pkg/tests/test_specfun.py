"""Special-function kernels against independent series/integral oracles."""

import numpy as np
import pytest
from mpmath import mp
from scipy import integrate
from scipy import special as sp

from famakit.specfun import (QuadratureRule, bessel_i_scaled, bessel_j0,
                             gauss_laguerre_rule, ive_orders, laguerre_poly,
                             log_gamma, marcum_q, pochhammer, reg_inc_beta)

mp.dps = 40


# ---------------------------------------------------------------------------
# oracles: ascending series in 40-digit arithmetic, defining integrals
# ---------------------------------------------------------------------------

def j0_series(x):
    x = mp.mpf(x)
    total = mp.mpf(0)
    term = mp.mpf(1)
    k = 0
    while abs(term) > mp.mpf(10) ** (-38) * (abs(total) + 1):
        total += term
        k += 1
        term = term * (-(x / 2) ** 2) / k ** 2
    return float(total)


def ive_series(nu, x):
    nu = mp.mpf(nu)
    x = mp.mpf(x)
    total = mp.mpf(0)
    k = 0
    while True:
        term = (x / 2) ** (nu + 2 * k) / (mp.factorial(k) * mp.gamma(nu + k + 1))
        total += term
        if k > 4 and term < mp.mpf(10) ** (-38) * total:
            break
        k += 1
    return float(mp.e ** (-x) * total)


def marcum_integral(nu, a, b):
    # defining integral with the Bessel factor kept in scaled form
    if a == 0:
        return float(sp.gammaincc(nu, b * b / 2.0))
    def f(x):
        return x * (x / a) ** (nu - 1) * np.exp(-((x - a) ** 2) / 2) * sp.ive(nu - 1, a * x)
    val, _ = integrate.quad(f, b, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def reg_lower_gamma_series(s, x):
    # P(s, x) = x^s e^{-x} sum_k x^k / (s (s+1) ... (s+k))
    term = 1.0 / s
    total = term
    k = 1
    while term > 1e-18 * total:
        term *= x / (s + k)
        total += term
        k += 1
    return float(np.exp(s * np.log(x) - x) * total)


# ---------------------------------------------------------------------------
# Bessel J0
# ---------------------------------------------------------------------------

def test_j0_at_zero():
    assert bessel_j0(0.0) == 1.0


def test_j0_at_pi_vs_series():
    assert bessel_j0(np.pi) == pytest.approx(j0_series(np.pi), abs=1e-14)


def test_j0_first_zero():
    # root bracketed by the series oracle
    assert j0_series(2.40482) > 0 > j0_series(2.40484)
    assert abs(bessel_j0(2.404825557695773)) < 1e-12


def test_j0_accuracy_grid():
    xs = np.linspace(-50, 50, 211)
    for x in xs:
        assert bessel_j0(float(x)) == pytest.approx(j0_series(x), abs=1e-12)


def test_j0_rejects_nonfinite():
    with pytest.raises(ValueError):
        bessel_j0(np.nan)
    with pytest.raises(ValueError):
        bessel_j0(np.inf)


# ---------------------------------------------------------------------------
# scaled modified Bessel
# ---------------------------------------------------------------------------

def test_ive_at_zero():
    assert bessel_i_scaled(0, 0.0) == 1.0


def test_ive_negative_integer_symmetry():
    for x in (0.0, 0.3, 2.0, 17.5, 120.0):
        assert bessel_i_scaled(-3, x) == bessel_i_scaled(3, x)


def test_ive_value_vs_series():
    assert bessel_i_scaled(1, 2.0) == pytest.approx(ive_series(1, 2.0), rel=1e-13)
    # frozen from the series oracle
    assert bessel_i_scaled(1, 2.0) == pytest.approx(0.21526928924893765, rel=1e-12)


def test_ive_series_grid():
    for nu in (0, 1, 2, 7, 26):
        for x in (1e-6, 0.1, 1.0, 8.0, 40.0, 300.0):
            assert bessel_i_scaled(nu, x) == pytest.approx(ive_series(nu, x), rel=1e-10)


def test_ive_domain_errors():
    with pytest.raises(ValueError):
        bessel_i_scaled(0, -1.0)
    with pytest.raises(ValueError):
        bessel_i_scaled(-2.5, 1.0)


def test_ive_orders_ladder_matches_per_order():
    rng = np.random.default_rng(5)
    z = np.concatenate([
        [0.0, 1e-9, 1e-6, 1e-3],
        10 ** rng.uniform(-2, 4, 400),
        rng.uniform(0.0, 16000.0, 400),
    ])
    for D in (1, 5, 29, 90):
        ladder = ive_orders(D, z)
        ref = np.vstack([sp.ive(n, z) for n in range(D + 1)])
        mask = ref > 1e-250
        rel = np.abs(ladder[mask] - ref[mask]) / ref[mask]
        assert rel.max() < 5e-9


# ---------------------------------------------------------------------------
# Marcum Q
# ---------------------------------------------------------------------------

def test_marcum_b_zero_is_one():
    for nu in (0.5, 1.0, 2.5, 9.0):
        for a in (0.0, 0.7, 4.0):
            assert marcum_q(nu, a, 0.0) == 1.0


def test_marcum_a_zero_closed_form():
    for b in (0.1, 1.0, 2.5):
        assert marcum_q(1, 0.0, b) == pytest.approx(np.exp(-b * b / 2), rel=1e-12)


def test_marcum_value_vs_integral_oracle():
    val = marcum_integral(1, 1.0, 1.0)
    assert val == pytest.approx(0.7328798037968203, rel=1e-10)  # frozen from oracle
    assert marcum_q(1, 1.0, 1.0) == pytest.approx(val, rel=1e-10)
    assert marcum_q(2.5, 1.3, 0.8) == pytest.approx(marcum_integral(2.5, 1.3, 0.8), rel=1e-9)


def test_marcum_incomplete_gamma_complement():
    for nu in (0.5, 1.0, 3.0, 8.5):
        for b in (0.2, 1.0, 3.0):
            p = reg_lower_gamma_series(nu, b * b / 2.0)
            assert marcum_q(nu, 0.0, b) + p == pytest.approx(1.0, abs=1e-10)


def test_marcum_monotonicity():
    bs = np.linspace(0, 6, 25)
    qs = marcum_q(2.0, 1.5, bs)
    assert np.all(np.diff(qs) <= 1e-14)
    aa = np.linspace(0, 6, 25)
    qa = marcum_q(2.0, aa, 1.5)
    assert np.all(np.diff(qa) >= -1e-14)


def test_marcum_domain_errors():
    with pytest.raises(ValueError):
        marcum_q(0.3, 1.0, 1.0)
    with pytest.raises(ValueError):
        marcum_q(1.0, -0.1, 1.0)
    with pytest.raises(ValueError):
        marcum_q(1.0, 1.0, np.nan)


def test_probability_outputs_bounded():
    rng = np.random.default_rng(11)
    nu = rng.uniform(0.5, 20, 10_000)
    a = rng.uniform(0, 30, 10_000)
    b = rng.uniform(0, 30, 10_000)
    for i in range(0, 10_000, 2500):
        q = marcum_q(float(nu[i]), a[i:i + 2500], b[i:i + 2500])
        assert np.all((q >= 0) & (q <= 1))
    x = rng.uniform(0, 1, 10_000)
    p = reg_inc_beta(x, rng.uniform(0.1, 9, 10_000), rng.uniform(0.1, 9, 10_000))
    assert np.all((p >= 0) & (p <= 1))


# ---------------------------------------------------------------------------
# Gauss-Laguerre
# ---------------------------------------------------------------------------

def test_rule_order_one_closed_form():
    for alpha in (0.0, 0.5, 2.0):
        rule = gauss_laguerre_rule(alpha, 1)
        assert rule.nodes[0] == pytest.approx(alpha + 1.0, rel=1e-13)
        assert rule.weights[0] == pytest.approx(float(sp.gamma(alpha + 1)), rel=1e-13)


def test_rule_order_two_nodes():
    rule = gauss_laguerre_rule(0.0, 2)
    assert rule.nodes == pytest.approx([2 - np.sqrt(2), 2 + np.sqrt(2)], rel=1e-13)
    assert rule.weights.sum() == pytest.approx(1.0, rel=1e-13)


def test_rule_cubic_moment():
    rule = gauss_laguerre_rule(1.0, 50)
    # integral of x^3 against x e^{-x} is Gamma(5) = 24
    assert float(rule.weights @ rule.nodes ** 3) == pytest.approx(24.0, abs=1e-9)


def test_rule_moment_property():
    for alpha in (0.0, 1.0, 2.0, 7.0):
        for order in (5, 20, 50):
            rule = gauss_laguerre_rule(alpha, order)
            for k in range(0, 2 * order, max(1, order // 5)):
                moment = float(rule.weights @ rule.nodes ** k)
                expected = float(np.exp(sp.gammaln(alpha + k + 1)))
                assert moment == pytest.approx(expected, rel=1e-8)


def test_rule_weight_sum_is_gamma():
    for alpha in (0.0, 1.0, 7.0, 26.0):
        rule = gauss_laguerre_rule(alpha, 50)
        assert rule.weights.sum() == pytest.approx(float(sp.gamma(alpha + 1)), rel=1e-10)


def test_rule_matches_laguerre_weight_formula():
    # w_i = Gamma(n+alpha+1) x_i / (n! (n+1)^2 [L^alpha_{n+1}(x_i)]^2)
    for alpha in (0.0, 1.0, 2.0):
        n = 50
        rule = gauss_laguerre_rule(alpha, n)
        lag = laguerre_poly(alpha, n + 1, rule.nodes)
        log_w = (log_gamma(n + alpha + 1.0) + np.log(rule.nodes)
                 - log_gamma(n + 1.0) - 2.0 * np.log(n + 1.0)
                 - 2.0 * np.log(np.abs(lag)))
        assert np.exp(log_w) == pytest.approx(rule.weights, rel=1e-9)


def test_rule_domain_errors():
    with pytest.raises(ValueError):
        gauss_laguerre_rule(-1.0, 5)
    with pytest.raises(ValueError):
        gauss_laguerre_rule(0.0, 0)


def test_rule_invariants_enforced():
    with pytest.raises(ValueError):
        QuadratureRule(alpha=0.0, order=2, nodes=[2.0, 1.0], weights=[0.5, 0.5])
    with pytest.raises(ValueError):
        QuadratureRule(alpha=0.0, order=2, nodes=[1.0, 2.0], weights=[0.5, 0.0])


# ---------------------------------------------------------------------------
# Laguerre polynomials, pochhammer, log-gamma, incomplete beta
# ---------------------------------------------------------------------------

def test_laguerre_degree_zero():
    assert laguerre_poly(3.7, 0, 12.0) == 1.0


def test_laguerre_known_values():
    assert laguerre_poly(0.0, 2, 0.0) == pytest.approx(1.0, abs=1e-15)
    # L^1_2(x) = (x^2 - 6x + 6)/2
    assert laguerre_poly(1.0, 2, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_pochhammer():
    for x in (0.5, 1.0, 8.0, 8.0 / 7.0):
        assert pochhammer(x, 0) == 1.0
    assert pochhammer(3.0, 4) == pytest.approx(360.0, rel=1e-13)
    with pytest.raises(ValueError):
        pochhammer(1.0, -1)


def test_log_gamma():
    assert log_gamma(5.0) == pytest.approx(np.log(24.0), rel=1e-14)
    with pytest.raises(ValueError):
        log_gamma(0.0)


def test_reg_inc_beta():
    # I_x(2, 1) = x^2
    assert reg_inc_beta(0.5, 2.0, 1.0) == pytest.approx(0.25, rel=1e-13)
    assert reg_inc_beta(0.0, 3.0, 4.0) == 0.0
    assert reg_inc_beta(1.0, 3.0, 4.0) == 1.0
    xs = np.linspace(0, 1, 40)
    vals = reg_inc_beta(xs, 2.5, 1.5)
    assert np.all(np.diff(vals) >= 0)
    with pytest.raises(ValueError):
        reg_inc_beta(1.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        reg_inc_beta(0.5, -1.0, 1.0)
