"""Statistical kernel tests against frozen high-precision oracle values.

The oracle constants were computed independently (mpmath / closed forms)
before the implementation and are asserted to 1e-6 or tighter.
"""

import numpy as np
import pytest

from prunelab import stats


def test_t_cdf_frozen_oracles():
    cases = [
        ((2.0, 10), 0.96330598261462982),
        ((0.5, 1), 0.64758361765043327),
        ((1.5, 3), 0.88470806737758847),
        ((-2.5, 7), 0.020496109292876448),
        ((3.0, 30), 0.99730501796717403),
        ((1.0, 100), 0.84013792210793832),
        ((-0.75, 2.5), 0.25874813159107929),
    ]
    for (x, df), expected in cases:
        assert stats.t_cdf(x, df) == pytest.approx(expected, abs=1e-9)
    assert stats.t_cdf(0.0, 5) == 0.5
    with pytest.raises(ValueError):
        stats.t_cdf(1.0, 0)


def test_t_cdf_symmetry():
    for x in (0.3, 1.7, 4.2):
        for df in (1, 2.5, 9, 40):
            assert stats.t_cdf(x, df) + stats.t_cdf(-x, df) == pytest.approx(
                1.0, abs=1e-14
            )


def test_chi2_cdf_frozen_oracles():
    cases = [
        ((1.0, 1), 0.6826894921370859),
        ((2.0, 2), 0.63212055882855768),
        ((5.0, 3), 0.82820285570326686),
        ((10.0, 4), 0.9595723180054872),
        ((3.5, 7.5), 0.12966963452358389),
        ((20.0, 10), 0.97074731192303893),
    ]
    for (x, df), expected in cases:
        assert stats.chi2_cdf(x, df) == pytest.approx(expected, abs=1e-9)
    assert stats.chi2_cdf(0.0, 3) == 0.0
    assert stats.chi2_cdf(-1.0, 3) == 0.0
    with pytest.raises(ValueError):
        stats.chi2_cdf(1.0, -2)


def test_median_conventions():
    assert stats.median([3.0, 1.0, 2.0]) == 2.0
    assert stats.median([1.0, 2.0, 3.0, 4.0]) == 2.5  # even-count mean of middles
    with pytest.raises(ValueError):
        stats.median([])


def test_welch_frozen_oracles():
    res = stats.welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert res.statistic == pytest.approx(-1.0, abs=1e-12)
    assert res.degrees_of_freedom == pytest.approx(8.0, abs=1e-12)
    assert res.p_value == pytest.approx(0.34659350708733425, abs=1e-9)

    res = stats.welch_t_test([1.1, 2.3, 3.5, 0.2, 4.4], [5.5, 6.1, 7.8, 8.2])
    assert res.statistic == pytest.approx(-4.57717107496595, abs=1e-9)
    assert res.degrees_of_freedom == pytest.approx(6.998270613289123, abs=1e-9)
    assert res.p_value == pytest.approx(0.0025539298707203976, abs=1e-9)


def test_welch_errors():
    with pytest.raises(ValueError):
        stats.welch_t_test([1.0], [1.0, 2.0])
    with pytest.raises(stats.DegenerateTestError):
        stats.welch_t_test([2.0, 2.0], [3.0, 3.0])


def test_kruskal_frozen_oracles():
    res = stats.kruskal_wallis([[1, 2, 3], [10, 11, 12]])
    assert res.statistic == pytest.approx(3.857142857142854, abs=1e-9)
    assert res.p_value == pytest.approx(0.049534613435626752, abs=1e-9)
    assert res.degrees_of_freedom == 1.0

    res = stats.kruskal_wallis(
        [[2.9, 3.0, 2.5, 2.6, 3.2], [3.8, 2.7, 4.0, 2.4], [2.8, 3.4, 3.7, 2.2, 2.0]]
    )
    assert res.statistic == pytest.approx(0.7714285714285722, abs=1e-9)
    assert res.p_value == pytest.approx(0.6799647735788936, abs=1e-9)

    # tie-corrected case
    res = stats.kruskal_wallis([[1, 2, 2, 5], [2, 3, 3], [5, 5, 6, 6]])
    assert res.statistic == pytest.approx(6.460317460317458, abs=1e-9)
    assert res.p_value == pytest.approx(0.039551220318641556, abs=1e-9)


def test_kruskal_errors():
    with pytest.raises(ValueError):
        stats.kruskal_wallis([[1, 2, 3]])
    with pytest.raises(stats.DegenerateTestError):
        stats.kruskal_wallis([[4.0, 4.0], [4.0, 4.0]])


def test_kruskal_null_calibration():
    """Under the null, p < 0.05 should fire at roughly a 5% rate."""
    rng = np.random.default_rng(99)
    trials = 2000
    hits = 0
    for _ in range(trials):
        groups = [rng.standard_normal(8) for _ in range(3)]
        if stats.kruskal_wallis(groups).p_value < 0.05:
            hits += 1
    rate = hits / trials
    assert 0.03 <= rate <= 0.07, f"null rejection rate {rate}"


def test_ols_recovers_noiseless_coefficients():
    rng = np.random.default_rng(7)
    n = 120
    x1 = rng.uniform(0, 5, n)
    x2 = rng.uniform(0, 1, n)
    design = np.column_stack([np.ones(n), x1, x2, x1 * x2])
    truth = np.array([0.27, 0.21, -0.05, -0.31])
    y = design @ truth
    fit = stats.ols_fit(design, y)
    np.testing.assert_allclose(fit.coefficients, truth, atol=1e-6)
    resid = y - design @ fit.coefficients
    assert np.abs(design.T @ resid).max() <= 1e-8


def test_ols_inference_on_noisy_data():
    rng = np.random.default_rng(8)
    n = 500
    x = rng.standard_normal(n)
    design = np.column_stack([np.ones(n), x])
    y = 1.0 + 2.0 * x + 0.1 * rng.standard_normal(n)
    fit = stats.ols_fit(design, y)
    assert fit.coefficients[1] == pytest.approx(2.0, abs=0.05)
    assert fit.p_values[1] < 1e-10
    assert fit.n == n and fit.p == 2
    assert fit.standard_errors[1] > 0


def test_ols_rank_deficient():
    x = np.random.default_rng(9).standard_normal(20)
    design = np.column_stack([np.ones(20), x, 2 * x])
    with pytest.raises(stats.RankDeficientError) as exc:
        stats.ols_fit(design, np.ones(20))
    assert "column" in str(exc.value)


def test_ols_shape_errors():
    with pytest.raises(ValueError):
        stats.ols_fit(np.ones((3, 3)), np.ones(3))  # n <= p
    with pytest.raises(ValueError):
        stats.ols_fit(np.ones((5, 2)), np.ones(4))
