import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from nlglass import theory as th

SQRT_2PI_E = math.sqrt(2 * math.pi * math.e)


def test_level_amplitude_values():
    assert th.level_amplitude(5, 2.0) == 1.0
    assert th.level_amplitude(3, 1.0) == 8.0
    assert th.level_amplitude(2, 1.25) == pytest.approx(2.828427, abs=1e-6)


def test_level_variance_values():
    assert th.level_variance(3, 0.0, 1.25) == 0.0
    assert th.level_variance(1, 1.0, 1.25) == pytest.approx(0.420448, abs=1e-6)
    assert th.level_variance(4, 2.0, 1.3) == 4.0 * th.level_variance(4, 1.0, 1.3)


def test_concentration_values_and_limit():
    assert th.concentration_R(1, 2.0) == pytest.approx(0.5)
    assert th.concentration_R(None, 2.0) == pytest.approx(1.0)
    assert th.concentration_R(None, 1.5) == pytest.approx(2.414214, abs=1e-6)
    rs = [th.concentration_R(n, 1.25) for n in range(1, 40)]
    assert all(a < b for a, b in zip(rs, rs[1:]))
    assert rs[-1] < th.concentration_R(None, 1.25)
    with pytest.raises(ValueError):
        th.concentration_R(3, 1.0)


def test_interval_counts():
    assert th.num_intervals(1, 1.0, 2.0) == 2  # sqrt(x) = 1 exactly forces r = 2
    assert th.num_intervals(2, 1.0, 1.25) == 2
    assert th.num_intervals(2, 10.0, 1.25) == 17
    with pytest.raises(ValueError):
        th.num_intervals(2, 0.0, 1.25)


def test_interval_count_satisfies_defining_inequality():
    for n, beta, alpha in [(1, 0.3, 1.1), (2, 1.0, 1.25), (3, 7.7, 1.4), (5, 2.0, 1.01)]:
        r = th.num_intervals(n, beta, alpha)
        s = beta * math.sqrt(th.level_amplitude(n, alpha))
        assert s < r <= 1 + s


def test_lemma8_correction_value():
    assert th.lemma8_correction(2, 4.0, 1.25) == pytest.approx(1.706, abs=2e-3)


def test_lemma8_correction_decays_in_beta():
    vals = [th.lemma8_correction(2, b, 1.25) for b in (10.0, 100.0, 1e4, 1e6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-4


def test_lemma8_internal_consistency():
    for n, beta, alpha in [(2, 4.0, 1.25), (3, 1.0, 1.4), (5, 2.5, 1.1)]:
        delta = th.lemma8_correction(n, beta, alpha)
        c = th.lipschitz_prefactor(n, beta, alpha)
        r = th.num_intervals(n, beta, alpha)
        b = th.level_amplitude(n, alpha)
        resid = delta * beta ** 2 * b / 2 - 1 - (1 + c) * math.log(r) \
            - c * math.log(1 + SQRT_2PI_E)
        assert abs(resid) < 1e-12


def test_correction_series_converges_below_three_halves_only():
    partial = lambda a, n: sum(th.lemma8_correction(p, 4.0, a) for p in range(2, n))
    assert partial(1.4, 400) - partial(1.4, 300) < 0.01 * partial(1.4, 300)
    terms_16 = [th.lemma8_correction(p, 4.0, 1.6) for p in (40, 50, 60)]
    assert terms_16[0] < terms_16[1] < terms_16[2]  # terms grow: series diverges


def test_lemma7_rhs_value_and_growth():
    c = 1.0 * 2.0 * math.sqrt(th.concentration_R(2, 1.25))
    expected = c * math.log(2 * (1 + SQRT_2PI_E))
    assert th.lemma7_rhs(2, 1.0, 1.25) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(5.795, abs=1e-3)
    assert th.lemma7_rhs(2, 2.0, 1.25) > 2 * th.lemma7_rhs(2, 1.0, 1.25)


def test_lemma7_rhs_single_interval_case():
    # beta^2 b_1 < 1 forces r = 1 and the bound collapses to C log(1 + sqrt(2 pi e))
    assert th.num_intervals(1, 0.5, 1.25) == 1
    c = th.lipschitz_prefactor(1, 0.5, 1.25)
    assert th.lemma7_rhs(1, 0.5, 1.25) == pytest.approx(c * 1.63576, abs=1e-4)


def test_pair_expectation_limits():
    assert th.f1_pair_expectation(0.0, 1.25) == 0.0
    assert th.f1_pair_expectation(50.0, 1.25) == pytest.approx(1.0, abs=1e-9)


def test_pair_expectation_against_quadrature_oracle():
    for beta, alpha in [(1.0, 1.25), (0.5, 1.4), (2.0, 1.1), (3.0, 1.25), (4.0, 1.45)]:
        m = beta ** 2 * 2.0 ** (1.0 - alpha)
        pdf = lambda g: math.exp(-(g - m) ** 2 / (2 * m)) / math.sqrt(2 * math.pi * m)
        ref, err = scipy.integrate.quad(lambda g: math.tanh(g) * pdf(g),
                                        m - 40 * math.sqrt(m), m + 40 * math.sqrt(m),
                                        epsabs=1e-13, limit=200)
        assert th.f1_pair_expectation(beta, alpha) == pytest.approx(ref, abs=1e-10)


def test_pair_expectation_against_monte_carlo():
    beta, alpha = 1.0, 1.25
    m = beta ** 2 * 2.0 ** (1.0 - alpha)
    rng = np.random.default_rng(2024)
    draws = np.tanh(rng.normal(m, math.sqrt(m), size=10_000_000))
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(th.f1_pair_expectation(beta, alpha) - draws.mean()) < 4 * se


def _thm1_series_terms(alpha, beta, n_terms=6000):
    """Loss terms as explicit partial sums of the underlying geometric series."""
    R = th.concentration_R(None, alpha)
    t2 = t3 = t4 = t5 = 0.0
    for p in range(2, n_terms):
        pref = (2.0 / beta ** 2) * 2.0 ** (-(2.0 - alpha) * p)      # 2 / (b^2 b_p)
        pref_conc = (2.0 * math.sqrt(R) / beta) * 2.0 ** ((alpha - 1.5) * p)
        log_2root_bp = math.log(2.0) * (1.0 + 0.5 * (2.0 - alpha) * p)
        t2 += pref * (1.0 + math.log(beta))
        t3 += pref * log_2root_bp
        t4 += pref_conc * log_2root_bp
        t5 += pref_conc * math.log(beta + beta * SQRT_2PI_E)
    return t2, t3, t4, t5


@pytest.mark.parametrize("alpha,beta", [(1.25, 1.0), (1.25, 100.0), (1.1, 2.0), (1.45, 5.0)])
def test_thm1_terms_match_series_oracle(alpha, beta):
    rep = th.thm1_lower_bound(beta, alpha)
    t2, t3, t4, t5 = _thm1_series_terms(alpha, beta)
    assert rep.loss_entropy == pytest.approx(t2, rel=1e-9)
    assert rep.loss_geometry == pytest.approx(t3, rel=1e-9)
    assert rep.loss_fluct_geometry == pytest.approx(t4, rel=1e-8)
    assert rep.loss_fluct_scale == pytest.approx(t5, rel=1e-8)
    assert rep.total == pytest.approx(rep.base - t2 - t3 - t4 - t5, abs=1e-8)


def test_thm1_zero_temperature_limit():
    assert th.thm1_lower_bound(1e6, 1.25).total == pytest.approx(1.0, abs=1e-2)
    assert th.thm1_lower_bound(1e8, 1.4).total == pytest.approx(1.0, abs=1e-2)


def test_thm1_rejects_alpha_out_of_range():
    with pytest.raises(ValueError):
        th.thm1_lower_bound(10.0, 1.6)
    with pytest.raises(ValueError):
        th.thm1_lower_bound(10.0, 1.0)


def test_thm1_validity_flags():
    rep = th.thm1_lower_bound(0.5, 1.25)  # below 2^((alpha-2)/2) ~ 0.771
    assert rep.valid_alpha and not rep.valid_beta and not rep.valid
    assert th.thm1_lower_bound(1.0, 1.25).valid


def test_thm1_regression_value():
    # pinned from the first verified evaluation; the bound is still negative here
    assert th.thm1_lower_bound(100.0, 1.25).total == pytest.approx(-0.805142, abs=1e-5)
    assert th.thm1_lower_bound(1000.0, 1.25).total > 0.0


def test_thm1_monotone_in_beta():
    betas = np.geomspace(1.0, 1e6, 40)
    totals = [th.thm1_lower_bound(float(b), 1.25).total for b in betas]
    assert all(a <= b + 1e-12 for a, b in zip(totals, totals[1:]))


def test_zeta_values_and_bracket():
    zb = th.zeta_partial(2.0, 1e-10)
    assert zb.value == pytest.approx(math.pi ** 2 / 6, abs=1e-9)
    assert zb.width <= 1e-10
    assert zb.lo <= math.pi ** 2 / 6 <= zb.hi
    zb = th.zeta_partial(1.5, 1e-8)
    assert zb.value == pytest.approx(2.612375, abs=1e-5)
    assert zb.width <= 1e-8
    for alpha in (1.2, 1.8, 3.0):
        zb = th.zeta_partial(alpha, 1e-9)
        ref = float(scipy.special.zeta(alpha, 1))
        assert zb.lo - 1e-12 <= ref <= zb.hi + 1e-12
    with pytest.raises(ValueError):
        th.zeta_partial(1.0)


def test_thm3_threshold_and_bound():
    assert th.thm3_threshold(2.0) == pytest.approx(0.13783, abs=1e-5)
    assert th.thm3_threshold(1.5) == pytest.approx(0.10937, abs=1e-5)
    assert th.thm3_correlation_sum_bound(0.06, 2.0) == pytest.approx(0.1169, abs=1e-4)
    with pytest.raises(ValueError):
        th.thm3_correlation_sum_bound(0.2, 2.0)


def test_merge_level_examples():
    assert th.merge_level(1, 2, 3) == 1
    assert th.merge_level(2, 3, 3) == 2
    assert th.merge_level(4, 5, 3) == 3
    with pytest.raises(ValueError):
        th.merge_level(0, 2, 3)
    with pytest.raises(ValueError):
        th.merge_level(3, 9, 3)


def test_merge_level_against_block_containment_oracle():
    N = 4
    for i in range(1, 2 ** N + 1):
        for j in range(i + 1, 2 ** N + 1):
            p = th.merge_level(i, j, N)
            same_at_p = (i - 1) // 2 ** p == (j - 1) // 2 ** p
            same_below = (i - 1) // 2 ** (p - 1) == (j - 1) // 2 ** (p - 1)
            assert same_at_p and not same_below
            assert abs(i - j) < 2 ** p


def test_effective_pair_variance_values():
    assert th.effective_pair_variance(3, 1, 1.25) == pytest.approx(1.343101, abs=1e-6)
    for n, alpha in [(4, 1.25), (6, 1.9)]:
        single = 2.0 * th.level_amplitude(n, alpha) / 4.0 ** n
        assert th.effective_pair_variance(n, n, alpha) == pytest.approx(single, rel=1e-12)


def test_effective_pair_variance_intermediate_bound():
    for alpha in (1.05, 1.25, 1.49):
        for p in range(1, 31):
            assert th.effective_pair_variance(40, p, alpha) <= 2.0 ** (2 - alpha * p) + 1e-12


def test_pair_variance_dominated_by_long_range_law():
    beta = 1.7
    for N in (3, 6, 10):
        for p in range(1, N + 1):
            for d in (1, 2 ** (p - 1), 2 ** p - 1):
                if d < 1:
                    continue
                assert th.effective_pair_variance(N, p, 1.25, beta) < 4 * beta ** 2 / d ** 1.25


def test_evaluators_are_deterministic():
    a = th.thm1_lower_bound(3.7, 1.23)
    b = th.thm1_lower_bound(3.7, 1.23)
    assert a == b
    assert th.zeta_partial(1.31, 1e-9) == th.zeta_partial(1.31, 1e-9)
