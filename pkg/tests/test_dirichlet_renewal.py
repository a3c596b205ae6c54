import math

import numpy as np
import pytest
from scipy import integrate

from mixed_renewal import constant as const
from mixed_renewal.dirichlet_renewal import (
    PartitionVector,
    dp_renewal_curve,
    dp_renewal_function,
    enumerate_partitions,
    ewens_probability,
    partial_fraction_mixture,
    pochhammer,
    power_law_tail,
    sn_cdf,
    sn_cdf_monte_carlo,
    urn_path_probabilities,
)
from mixed_renewal.distributions import ErlangParams, GammaParams, LomaxParams, erlang_cdf
from mixed_renewal.errors import IllConditionedError, PartitionLimitError, SeriesConvergenceError
from mixed_renewal.exchangeable import DirichletProcess
from mixed_renewal.renewal_core import mc_renewal_function


def _hypoexponential(t, lam):
    """CDF of Exp(lam) + Exp(lam / 2)."""
    return 1 + np.exp(-lam * t) - 2 * np.exp(-lam * t / 2)


@pytest.mark.parametrize("n,count", [(1, 1), (4, 5), (10, 42), (20, 627)])
def test_partition_counts(n, count):
    partitions = enumerate_partitions(n)
    assert len(partitions) == count
    assert all(p.n == n for p in partitions)
    assert [p.v for p in partitions] == sorted(p.v for p in partitions)


def test_partitions_of_three():
    assert [p.v for p in enumerate_partitions(3)] == [(0, 0, 1), (1, 1, 0), (3, 0, 0)]
    assert [p.blocks for p in enumerate_partitions(3)] == [1, 2, 3]


def test_partition_cap():
    with pytest.raises(PartitionLimitError):
        enumerate_partitions(const.N_MAX + 1)
    with pytest.raises(PartitionLimitError):
        enumerate_partitions(6, n_max=5)
    with pytest.raises(ValueError):
        enumerate_partitions(0)


def test_partition_vector_validation():
    assert PartitionVector((1, 1, 0)).multiplicities == [(1, 1), (2, 1)]
    with pytest.raises(ValueError):
        PartitionVector((1, 1))


def test_pochhammer():
    assert pochhammer(3.0, 0) == 1.0
    for n in range(1, 8):
        assert pochhammer(1.0, n) == pytest.approx(math.factorial(n))
    assert pochhammer(2.5, 3) == pytest.approx(39.375)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0, 2.0, 10.0, 50.0])
def test_ewens_probabilities_sum_to_one(alpha):
    for n in range(1, 13):
        total = math.fsum(ewens_probability(v, alpha) for v in enumerate_partitions(n))
        assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_ewens_probabilities_match_urn_paths(alpha):
    for n in range(1, 9):
        paths = urn_path_probabilities(n, alpha)
        for v in enumerate_partitions(n):
            assert paths[v] == pytest.approx(ewens_probability(v, alpha), rel=1e-12)
    with pytest.raises(PartitionLimitError):
        urn_path_probabilities(13, alpha)


def test_all_distinct_values_give_an_erlang():
    lam, n = 1.5, 6
    v = PartitionVector((n, 0, 0, 0, 0, 0))
    t = np.array([0.5, 2.0, 6.0])
    np.testing.assert_allclose(partial_fraction_mixture(v, lam).raw_cdf(t), erlang_cdf(t, ErlangParams(n, lam)))


def test_two_distinct_poles_give_the_hypoexponential():
    lam = 0.7
    t = np.linspace(0.0, 10.0, 11)
    mix = partial_fraction_mixture(PartitionVector((1, 1, 0)), lam)
    np.testing.assert_allclose(mix.raw_cdf(t), _hypoexponential(t, lam), atol=1e-14)
    assert sorted(c for c, _, _ in mix.components) == [-1.0, 2.0]


def test_single_repeated_value_is_a_scaled_erlang():
    lam = 1.2
    t = np.array([1.0, 4.0])
    mix = partial_fraction_mixture(PartitionVector((0, 2, 0, 0)), lam)
    np.testing.assert_allclose(mix.raw_cdf(t), erlang_cdf(t, ErlangParams(2, lam / 2)), atol=1e-14)


def test_mixture_matches_convolution():
    lam = 1.0
    for t in (0.5, 2.0, 5.0):
        # v = (2, 1, 0, 0): Gamma(2, lam) + Exp(lam / 2)
        expected, _ = integrate.quad(
            lambda x, t=t: erlang_cdf(t - x, ErlangParams(2, lam)) * lam / 2 * math.exp(-lam * x / 2), 0.0, t
        )
        value = partial_fraction_mixture(PartitionVector((2, 1, 0, 0)), lam).raw_cdf(t)
        assert value == pytest.approx(expected, abs=1e-10)
        # v = (1, 1, 1, 0, 0, 0): Exp(lam) + Exp(lam / 2) + Exp(lam / 3)
        expected, _ = integrate.quad(
            lambda x, t=t: _hypoexponential(t - x, lam) * lam / 3 * math.exp(-lam * x / 3), 0.0, t
        )
        value = partial_fraction_mixture(PartitionVector((1, 1, 1, 0, 0, 0)), lam).raw_cdf(t)
        assert value == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize(
    "v",
    [
        (0, 0, 0, 0, 0, 0, 0, 1),
        (2, 1, 0, 1, 0, 0, 0, 0),
        (1, 2, 1, 0, 0, 0, 0, 0),
        (0, 4, 0, 0, 0, 0, 0, 0),
        (1, 1, 1, 1, 1, 1, *([0] * 15)),
        (3, 2, 1, 0, 1, 0, 1, *([0] * 15)),
    ],
)
def test_mixtures_are_distributions(v):
    mix = partial_fraction_mixture(PartitionVector(v), 1.0)
    assert mix.raw_cdf(0.0) == pytest.approx(0.0, abs=1e-12)
    assert mix.raw_cdf(5e3) == pytest.approx(1.0, abs=1e-9)
    values = mix.raw_cdf(np.linspace(0.0, 30.0, 61))
    assert np.all(np.diff(values) >= -1e-12)


def test_ill_conditioned_coefficients_raise(monkeypatch):
    monkeypatch.setattr(const, "COEFFICIENT_LIMIT", 0.5)
    with pytest.raises(IllConditionedError):
        partial_fraction_mixture(PartitionVector((1, 1, 0)), 1.0)


def test_sn_cdf():
    t = np.linspace(0.0, 8.0, 17)
    np.testing.assert_allclose(sn_cdf(t, 1, 2.0), 1 - np.exp(-t), atol=1e-14)
    values = sn_cdf(t, 5, 2.0)
    assert values[0] == 0.0
    assert np.all(np.diff(values) >= 0)
    assert sn_cdf(200.0, 5, 2.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sn_cdf(-1.0, 2, 1.0)


def test_sn_cdf_rate_scaling():
    assert sn_cdf(2.0, 4, 1.5, ErlangParams(1, 2.0)) == pytest.approx(sn_cdf(4.0, 4, 1.5))
    assert sn_cdf(2.0, 4, 1.5, GammaParams(1.0, 2.0)) == pytest.approx(sn_cdf(4.0, 4, 1.5))


def test_sn_cdf_against_urn_simulation():
    t = np.array([1.0, 3.0, 6.0])
    p, stderr = sn_cdf_monte_carlo(t, 5, 2.0, ErlangParams(1, 1.0), replicates=40_000, seed=4)
    exact = sn_cdf(t, 5, 2.0)
    assert np.all(np.abs(p - exact) < 5 * stderr + 1e-3)


def test_sn_cdf_falls_back_to_simulation():
    value = sn_cdf(1.0, 3, 1.0, LomaxParams(1.0, 3.0), replicates=5000, seed=2)
    assert 0.0 < value < 1.0


def test_dp_renewal_at_zero():
    assert dp_renewal_function(0.0, 2.0) == (0.0, 0.0, 0, "series")


def test_dp_renewal_with_large_alpha_is_poisson():
    result = dp_renewal_function(0.5, 1e6)
    assert result.value == pytest.approx(0.5, abs=1e-3)
    assert result.method == "series"


def test_dp_renewal_curve_with_large_alpha_is_linear():
    grid = np.array([0.5, 1.0, 2.0, 3.0])
    results = dp_renewal_curve(grid, 1e6)
    np.testing.assert_allclose([r.value for r in results], grid, atol=1e-2)


def test_power_law_tail():
    k = np.arange(1, 21)
    cubic = list(k**-3.0)
    exact = sum(j**-3.0 for j in range(21, 200_000))
    assert power_law_tail(cubic) == pytest.approx(exact, rel=0.1)

    geometric = list(0.5**k)
    assert 0 < power_law_tail(geometric) < 3 * geometric[-1]

    assert power_law_tail(list(k**-0.5)) == math.inf
    assert power_law_tail([]) == 0.0
    assert power_law_tail([0.3, 0.0]) == 0.0
    assert power_law_tail([0.3]) == 0.3


def test_dp_renewal_at_one_against_simulation():
    result = dp_renewal_function(1.0, 2.0, tol=1e-3, n_max=20)
    curve = mc_renewal_function(DirichletProcess(2.0), [1.0], replicates=20_000, seed=8)
    assert abs(result.value - curve.values[0]) < 5 * curve.stderr[0] + result.error_estimate + 1e-3
    assert result.error_estimate > 0


@pytest.mark.slow
@pytest.mark.parametrize("t", [1.0, 2.0])
def test_dp_renewal_with_defaults_against_simulation(t):
    result = dp_renewal_function(t, 2.0)
    assert result.method == "series"
    assert result.n_used <= const.N_MAX
    curve = mc_renewal_function(DirichletProcess(2.0), [t], replicates=200_000, seed=9, workers=2)
    assert abs(result.value - curve.values[0]) < 5 * curve.stderr[0] + result.error_estimate + 1e-3


def test_dp_renewal_extrapolates_at_n_max(caplog):
    with caplog.at_level("WARNING"):
        result = dp_renewal_function(1.0, 2.0, tol=1e-12, n_max=20)
    assert result.n_used == 20
    assert result.error_estimate > 0
    assert "extrapolated tail" in caplog.text


def test_dp_renewal_against_simulation():
    t, alpha = 0.5, 2.0
    result = dp_renewal_function(t, alpha, tol=1e-3)
    curve = mc_renewal_function(DirichletProcess(alpha), [t], replicates=20_000, seed=6)
    assert abs(result.value - curve.values[0]) < 5 * curve.stderr[0] + result.error_estimate + 1e-3
    assert result.n_used >= 2


@pytest.mark.slow
def test_dp_renewal_curve_against_simulation():
    grid = np.array([0.25, 0.5, 0.75])
    results = dp_renewal_curve(grid, 2.0, tol=1e-3)
    curve = mc_renewal_function(DirichletProcess(2.0), grid, replicates=200_000, seed=7, workers=2)
    for result, mc, stderr in zip(results, curve.values, curve.stderr, strict=True):
        assert abs(result.value - mc) < 5 * stderr + result.error_estimate + 1e-3


def test_dp_renewal_with_other_base_uses_simulation():
    result = dp_renewal_function(0.5, 2.0, LomaxParams(1.0, 3.0), tol=1e-3, replicates=20_000, seed=3)
    assert result.method == "monte-carlo"
    assert result.value > 0


def test_dp_renewal_reports_non_convergence():
    with pytest.raises(SeriesConvergenceError):
        dp_renewal_function(2.0, 2.0, n_max=3)
