import math

import numpy as np
import pytest
from scipy import special

from mixed_renewal import constant as const
from mixed_renewal.errors import HorizonError, InfiniteRenewalError, SeriesConvergenceError, UnsupportedModelError
from mixed_renewal.exchangeable import DirichletProcess, ErlangGamma, ExpGamma, ExpUniform, Gamma2Pareto, Sequence
from mixed_renewal.renewal_core import (
    RenewalCurve,
    count_events,
    empirical_renewal_curve,
    erlang_conditional_renewal,
    erlang_gamma_mixed_renewal,
    first_renewal_equation_rhs,
    mc_counts,
    mc_covariance,
    mc_renewal_function,
    mixed_correlation,
    mixed_covariance,
    mixed_renewal_laplace,
    mixed_renewal_quadrature,
    nhpp_correlation,
    nhpp_equivalent,
    numerical_laplace_stieltjes,
    renewal_curve_closed,
    renewal_curve_series,
    renewal_lower_bound,
    series_mixed_renewal,
)


def test_count_events():
    seq = Sequence(np.array([1.0, 2.0, 3.0]))
    assert count_events(seq, 0.0) == 0
    assert count_events(seq, 1.0) == 1
    assert count_events(seq, 2.9) == 1
    assert count_events(seq, 3.0) == 2
    assert count_events(seq, 10.0) == 3
    np.testing.assert_array_equal(count_events([0.5, 0.5], [0.0, 0.5, 1.0]), [0, 1, 2])
    with pytest.raises(ValueError):
        count_events(seq, -1.0)


def test_erlang_two_renewal_function():
    lam = 1.7
    t = np.array([0.0, 0.3, 1.0, 4.0])
    expected = np.array([sum(special.gammainc(2 * n, lam * x) for n in range(1, 200)) for x in t])
    np.testing.assert_allclose(erlang_conditional_renewal(t, 2, lam), expected, atol=1e-12)
    closed = lam * t / 2 - 0.25 + np.exp(-2 * lam * t) / 4
    np.testing.assert_allclose(erlang_conditional_renewal(t, 2, lam), closed, atol=1e-12)


@pytest.mark.parametrize("m", [3, 4, 7])
def test_erlang_renewal_function_matches_sum_of_cdfs(m):
    lam, t = 2.0, 3.5
    expected = sum(special.gammainc(m * n, lam * t) for n in range(1, 300))
    assert erlang_conditional_renewal(t, m, lam) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("m", [2, 5, 6, 40])
def test_naive_and_folded_roots_sums_agree(m):
    t = np.linspace(0.0, 20.0, 9)
    np.testing.assert_allclose(
        erlang_gamma_mixed_renewal(t, m, 2.5, naive=True), erlang_gamma_mixed_renewal(t, m, 2.5), atol=1e-9
    )
    np.testing.assert_allclose(
        erlang_conditional_renewal(t, m, 0.8, naive=True), erlang_conditional_renewal(t, m, 0.8), atol=1e-9
    )


@pytest.mark.parametrize("m", [2, 3, 8, 17, 32, 63, 64])
def test_roots_sum_is_real_up_to_large_shapes(m):
    t = np.linspace(0.0, 100.0, 51)
    assert const.IMAG_TOL <= 1e-10
    # the naive sum raises when its imaginary part exceeds IMAG_TOL
    np.testing.assert_allclose(
        erlang_gamma_mixed_renewal(t, m, 2.1, naive=True), erlang_gamma_mixed_renewal(t, m, 2.1), atol=1e-8
    )
    np.testing.assert_allclose(
        erlang_conditional_renewal(t, m, 1.3, naive=True), erlang_conditional_renewal(t, m, 1.3), atol=1e-8
    )


def test_exponential_mixed_renewal_is_linear():
    t = np.array([0.0, 1.0, 2.5])
    np.testing.assert_allclose(erlang_gamma_mixed_renewal(t, 1, 2.0), 2.0 * t)
    assert erlang_gamma_mixed_renewal(0.0, 4, 3.0) == 0.0


@pytest.mark.parametrize("m,alpha", [(2, 3.0), (5, 2.5), (40, 2.1)])
def test_closed_form_matches_beta_series(m, alpha):
    for t in (0.5, 3.0, 25.0):
        result = series_mixed_renewal(t, m, alpha, tol=1e-12)
        assert erlang_gamma_mixed_renewal(t, m, alpha) == pytest.approx(result.value, abs=1e-5)
        assert result.error_estimate >= 0


def test_series_for_exponential_latent_gamma():
    for t in (1.0, 3.0):
        result = series_mixed_renewal(t, 1, 2.0, tol=1e-12)
        assert result.value == pytest.approx(2.0 * t, abs=1e-8)
        assert result.terms > 1
    assert series_mixed_renewal(0.0, 3, 2.0) == (0.0, 0.0, 0)


def test_series_term_is_mixed_erlang_cdf():
    m, alpha, t = 2, 3.0, 1.5
    one_term = series_mixed_renewal(t, m, alpha, tol=1.0, max_terms=1)
    quad = mixed_renewal_quadrature(t, ErlangGamma(m, alpha))
    assert one_term.terms == 1
    assert one_term.value == pytest.approx(special.betainc(m, alpha, t / (1 + t)))
    assert one_term.value < quad[0]


def test_series_reports_non_convergence():
    with pytest.raises(SeriesConvergenceError):
        series_mixed_renewal(500.0, 1, 0.5, tol=1e-14, max_terms=10)
    with pytest.raises(ValueError):
        series_mixed_renewal(1.0, 1, 2.0, tol=0.0)


@pytest.mark.parametrize("model", [ErlangGamma(3, 4.0), ErlangGamma(1, 2.5), ExpGamma(3.0, 2.0), ExpUniform(1.2)])
def test_quadrature_matches_closed_form(model):
    t = np.array([0.5, 2.0, 5.0])
    np.testing.assert_allclose(mixed_renewal_quadrature(t, model), renewal_curve_closed(model, t).values, rtol=1e-5)


def test_first_renewal_equation_holds():
    m, alpha = 2, 3.0
    for t in (0.5, 2.0):
        expected = erlang_gamma_mixed_renewal(t, m, alpha)
        assert first_renewal_equation_rhs(t, m, alpha) == pytest.approx(expected, abs=1e-5)
    assert first_renewal_equation_rhs(0.0, m, alpha) == 0.0


def test_monte_carlo_renewal_function():
    model = ErlangGamma(2, 3.0)
    grid = np.array([0.5, 1.0, 2.0])
    curve = mc_renewal_function(model, grid, replicates=2000, seed=5)
    exact = erlang_gamma_mixed_renewal(grid, 2, 3.0)
    assert np.all(np.abs(curve.values - exact) < 5 * curve.stderr + 1e-9)


def test_monte_carlo_needs_enough_replicates():
    with pytest.raises(ValueError):
        mc_renewal_function(ErlangGamma(1, 2.0), [1.0], replicates=10, seed=1)


@pytest.mark.slow
@pytest.mark.parametrize("model", [ErlangGamma(2, 3.0), ErlangGamma(40, 2.1), ExpUniform(1.0), ExpGamma(3.0, 2.0)])
def test_monte_carlo_agrees_with_closed_form(model):
    grid = np.linspace(0.5, 5.0, 10)
    curve = mc_renewal_function(model, grid, replicates=100_000, seed=11, workers=2)
    exact = renewal_curve_closed(model, grid).values
    assert np.all(np.abs(curve.values - exact) < 4 * curve.stderr + 1e-9)


def test_monte_carlo_is_independent_of_workers():
    model = ErlangGamma(2, 3.0)
    grid = [0.5, 2.0]
    serial = mc_counts(model, grid, 1500, seed=9)
    parallel = mc_counts(model, grid, 1500, seed=9, workers=2)
    np.testing.assert_array_equal(serial, parallel)


def test_monte_carlo_horizon_error():
    with pytest.raises(HorizonError):
        mc_counts(ErlangGamma(1, 0.5), [0.0, 1000.0], 100, seed=3, max_events=10)


def test_monte_carlo_rejects_gamma2_pareto():
    with pytest.raises(InfiniteRenewalError):
        mc_counts(Gamma2Pareto(1.0, 1.0), [1.0], 100, seed=1)
    with pytest.raises(UnsupportedModelError):
        mc_counts(Gamma2Pareto(1.0, 3.0), [1.0], 100, seed=1)


def test_dirichlet_monte_carlo_counts():
    counts = mc_counts(DirichletProcess(2.0), [0.0, 0.5], 200, seed=2)
    assert counts.shape == (200, 2)
    assert np.all(counts[:, 0] == 0)
    assert np.all(counts[:, 1] >= 0)


def test_lower_bound():
    model = ErlangGamma(2, 5.0)
    assert renewal_lower_bound(3.0, model) == pytest.approx(6.5)
    assert erlang_gamma_mixed_renewal(3.0, 2, 5.0) >= 6.5
    assert renewal_lower_bound(2.0, ExpUniform(1.0)) == pytest.approx(1.0)
    with pytest.raises(UnsupportedModelError):
        renewal_lower_bound(1.0, DirichletProcess(1.0))


@pytest.mark.parametrize(
    "model,stop",
    [
        (ErlangGamma(1, 2.0), 10.0),
        (ErlangGamma(2, 5.0), 10.0),
        (ErlangGamma(40, 2.1), 400.0),
        (ErlangGamma(5, 0.8), 50.0),
        (ExpGamma(3.0, 2.0), 10.0),
        (ExpUniform(1.2), 10.0),
    ],
)
def test_lower_bound_holds_on_a_grid(model, stop):
    t = np.linspace(0.0, stop, 41)
    values = renewal_curve_closed(model, t).values
    assert np.all(renewal_lower_bound(t, model) <= values + 1e-9)


def test_laplace_transform_of_exponential_model():
    alpha = 2.5
    for s in (0.5, 2.0):
        assert mixed_renewal_laplace(s, ErlangGamma(1, alpha), kind="ordinary") == pytest.approx(alpha / s**2, rel=1e-6)
        assert mixed_renewal_laplace(s, ErlangGamma(1, alpha)) == pytest.approx(alpha / s, rel=1e-6)


def test_laplace_transform_matches_numerical_transform():
    m, alpha, s = 2, 3.0, 1.0
    numerical = numerical_laplace_stieltjes(lambda x: erlang_gamma_mixed_renewal(x, m, alpha), s)
    assert mixed_renewal_laplace(s, ErlangGamma(m, alpha)) == pytest.approx(numerical, abs=1e-4)


def test_laplace_transform_arguments():
    with pytest.raises(ValueError):
        mixed_renewal_laplace(0.0, ErlangGamma(1, 2.0))
    with pytest.raises(ValueError):
        mixed_renewal_laplace(1.0, ErlangGamma(1, 2.0), kind="two-sided")
    with pytest.raises(UnsupportedModelError):
        mixed_renewal_laplace(1.0, DirichletProcess(1.0))


def test_covariance_and_correlation():
    model = ErlangGamma(1, 2.0)
    assert mixed_covariance(1.0, 1.0, model) == pytest.approx(6.0)
    assert mixed_correlation(1.0, 1.0, model) == pytest.approx(6.0 / math.sqrt(4.0 * 12.0))
    with pytest.raises(UnsupportedModelError):
        mixed_covariance(1.0, 1.0, ErlangGamma(2, 2.0))
    with pytest.raises(ValueError):
        mixed_covariance(0.0, 1.0, model)


def test_monte_carlo_covariance():
    cov, stderr = mc_covariance(ErlangGamma(1, 2.0), 1.0, 1.0, replicates=4000, seed=13)
    assert abs(cov - 6.0) < 5 * stderr


def test_poisson_process_with_equal_correlation():
    cumulative, rate = nhpp_equivalent(1.0, 1.0, 1.0)
    assert cumulative == pytest.approx(0.5)
    assert rate == pytest.approx(0.25)
    model = ExpUniform(1.5)
    phi, sigma2 = 1.5, 0.75
    for t, s in ((0.5, 0.5), (2.0, 3.0)):
        poisson = nhpp_correlation(t, s, lambda x: nhpp_equivalent(x, phi, sigma2)[0])
        assert poisson == pytest.approx(mixed_correlation(t, s, model), rel=1e-12)
    t = np.linspace(0.0, 5.0, 501)
    cumulative, rate = nhpp_equivalent(t, phi, sigma2)
    np.testing.assert_allclose(np.gradient(cumulative, t, edge_order=2), rate, rtol=1e-3)


def test_empirical_curve():
    data = [Sequence(np.array([1.0, 1.0])), Sequence(np.array([0.5, 1.0, 3.0]))]
    curve = empirical_renewal_curve(data, [0.0, 1.0, 2.0])
    np.testing.assert_allclose(curve.values, [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        empirical_renewal_curve([], [1.0])


def test_curve_helpers():
    curve = renewal_curve_closed(ExpUniform(2.0), [0.0, 1.0])
    np.testing.assert_allclose(curve.values, [0.0, 2.0])
    series = renewal_curve_series(ErlangGamma(1, 2.0), [0.0, 1.0])
    np.testing.assert_allclose(series.values, [0.0, 2.0], atol=1e-8)
    assert series.stderr is not None
    with pytest.raises(UnsupportedModelError):
        renewal_curve_closed(DirichletProcess(1.0), [1.0])
    with pytest.raises(UnsupportedModelError):
        renewal_curve_series(ExpUniform(1.0), [1.0])


def test_renewal_curve_validation():
    with pytest.raises(ValueError):
        RenewalCurve(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        RenewalCurve(np.array([0.0, 1.0]), np.array([1.0]))
    assert len(RenewalCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]))) == 2
