"""Renewal function of the Dirichlet-process mixed renewal process.

Given the occupancy vector v of the Polya urn (v_j distinct values seen j
times), S_n is a sum of independent Gamma(v_j, lam / j) variables when the
base is Exp(lam). Its CDF is a signed mixture of Erlang CDFs, obtained by
partial fractions of the Laplace transform prod_j ((1/j) / (1/j + s))^{v_j}.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, NamedTuple

import mpmath
import numpy as np
import numpy.typing as npt
from scipy import special

from mixed_renewal import constant as const
from mixed_renewal.distributions import (
    ErlangParams,
    Params,
    SignedErlangMixture,
    make_rng,
    sample,
)
from mixed_renewal.errors import IllConditionedError, PartitionLimitError, SeriesConvergenceError
from mixed_renewal.exchangeable import DirichletProcess

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionVector:
    """Occupancy encoding (v_1, ..., v_n) of an integer partition, sum_j j v_j = n."""

    v: tuple[int, ...]

    def __post_init__(self) -> None:
        """Check the occupancy identity."""
        if not self.v or any(c < 0 for c in self.v):
            raise ValueError("occupancy counts must be nonnegative and nonempty")
        if sum(j * c for j, c in enumerate(self.v, start=1)) != len(self.v):
            raise ValueError(f"{self.v} is not an occupancy vector of {len(self.v)}")

    @property
    def n(self) -> int:
        """Number of draws."""
        return len(self.v)

    @property
    def blocks(self) -> int:
        """Number of distinct values."""
        return sum(self.v)

    @property
    def multiplicities(self) -> list[tuple[int, int]]:
        """Pairs (j, v_j) with v_j > 0, in ascending j."""
        return [(j, c) for j, c in enumerate(self.v, start=1) if c]


class SeriesValue(NamedTuple):
    """Truncated Dirichlet-process renewal function."""

    value: float
    error_estimate: float
    n_used: int
    method: str


def _integer_partitions(n: int, largest: int) -> list[list[int]]:
    if n == 0:
        return [[]]
    out = []
    for part in range(min(n, largest), 0, -1):
        out.extend([part, *rest] for rest in _integer_partitions(n - part, part))
    return out


@lru_cache(maxsize=None)
def _partitions(n: int) -> tuple[PartitionVector, ...]:
    vectors = []
    for parts in _integer_partitions(n, n):
        counts = [0] * n
        for part in parts:
            counts[part - 1] += 1
        vectors.append(tuple(counts))
    return tuple(PartitionVector(v) for v in sorted(vectors))


def enumerate_partitions(n: int, n_max: int = const.N_MAX) -> list[PartitionVector]:
    """Return every partition of ``n`` in occupancy encoding, sorted lexicographically on v."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > n_max:
        raise PartitionLimitError(f"n={n} is above the partition cap {n_max}")
    return list(_partitions(n))


def log_pochhammer(alpha: float, n: int) -> float:
    """Return log (alpha)_n."""
    if not alpha > 0 or n < 0:
        raise ValueError("need alpha > 0 and n >= 0")
    return float(special.gammaln(alpha + n) - special.gammaln(alpha))


def pochhammer(alpha: float, n: int) -> float:
    """Return the rising factorial alpha (alpha + 1) ... (alpha + n - 1)."""
    return math.exp(log_pochhammer(alpha, n))


def ewens_probability(v: PartitionVector, alpha: float) -> float:
    """Return P(V = v) = n! / (alpha)_n prod_j alpha^{v_j} / (j^{v_j} v_j!)."""
    log_p = special.gammaln(v.n + 1) - log_pochhammer(alpha, v.n)
    for j, c in v.multiplicities:
        log_p += c * math.log(alpha) - c * math.log(j) - special.gammaln(c + 1)
    return float(math.exp(log_p))


def urn_path_probabilities(n: int, alpha: float, limit: int = 12) -> dict[PartitionVector, float]:
    """Probability of each occupancy vector by walking every Polya-urn path."""
    if n < 1 or n > limit:
        raise PartitionLimitError(f"urn path enumeration supports 1 <= n <= {limit}")
    result: dict[tuple[int, ...], float] = {}

    def walk(tables: list[int], p: float) -> None:
        drawn = sum(tables)
        if drawn == n:
            counts = [0] * n
            for size in tables:
                counts[size - 1] += 1
            result[tuple(counts)] = result.get(tuple(counts), 0.0) + p
            return
        denominator = alpha + drawn
        for index, size in enumerate(tables):
            tables[index] += 1
            walk(tables, p * size / denominator)
            tables[index] -= 1
        walk([*tables, 1], p * alpha / denominator)

    walk([], 1.0)
    return {PartitionVector(v): p for v, p in sorted(result.items())}


def _residues(poles: list[tuple[int, int]], reciprocal: Callable[[int], Any]) -> list[tuple[Any, int, int]]:
    """Partial-fraction coefficients c_{i,k} of prod_l (r_l / (r_l + s))^{v_l}, r_l = 1/l.

    Around the pole s = -r_i the other factors are expanded in x = s + r_i
    up to degree v_i - 1; then c_{i,k} = r_i^{v_i - k} g_{v_i - k}.
    """
    out = []
    for i, vi in poles:
        ri = reciprocal(i)
        g = [ri**0] + [ri * 0] * (vi - 1)
        for l, vl in poles:
            if l == i:
                continue
            rl = reciprocal(l)
            d = rl - ri
            factor = [rl**vl * (-1) ** q * math.comb(vl + q - 1, q) * d ** (-vl - q) for q in range(vi)]
            g = [sum(g[p] * factor[q - p] for p in range(q + 1)) for q in range(vi)]
        for k in range(1, vi + 1):
            q = vi - k
            out.append((ri**q * g[q], k, i))
    return out


@lru_cache(maxsize=None)
def _pole_coefficients(v: tuple[int, ...]) -> tuple[tuple[float, int, int], ...]:
    """Coefficients (c, shape k, pole index i) for one partition; independent of lam."""
    poles = [(j, c) for j, c in enumerate(v, start=1) if c]
    if len(v) <= const.EXACT_PARTITION_LIMIT:
        terms = _residues(poles, lambda j: Fraction(1, j))
    else:
        with mpmath.workdps(const.EXTENDED_PRECISION_DPS):
            terms = _residues(poles, lambda j: mpmath.mpf(1) / j)
    return tuple((float(c), k, i) for c, k, i in terms)


def partial_fraction_mixture(v: PartitionVector, lam: float) -> SignedErlangMixture:
    """Return the signed Erlang mixture equal to P(S_n <= t | V = v) for an Exp(lam) base.

    Components are ordered by ascending pole index.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    coefficients = _pole_coefficients(v.v)
    largest = max(abs(c) for c, _, _ in coefficients)
    if largest > const.COEFFICIENT_LIMIT:
        logger.warning(f"partition {v.v} has partial-fraction coefficient {largest:.3e}")
        raise IllConditionedError(f"partial-fraction coefficient {largest:.3e} for partition {v.v}")
    return SignedErlangMixture(tuple((c, k, lam / i) for c, k, i in coefficients))


def _cdf_bound(v: PartitionVector, t: float, lam: float) -> float:
    """Upper bound on P(S_n <= t | v) without partial fractions.

    S_n dominates an Erlang(blocks, lam) variable, and S_n <= t needs every
    summand j X below t.
    """
    erlang = float(special.gammainc(v.blocks, lam * t))
    product = math.prod(float(-np.expm1(-lam * t / j)) ** c for j, c in v.multiplicities)
    return min(erlang, product)


def _sn_cdf_series(
    t: np.ndarray, n: int, alpha: float, lam: float, weight_floor: float, n_max: int
) -> tuple[np.ndarray, float]:
    """Ewens-weighted sum over partitions; also returns the mass skipped below the floor."""
    horizon = float(np.max(t)) if t.size else 0.0
    total = np.zeros_like(t)
    skipped = 0.0
    for v in enumerate_partitions(n, n_max):
        weight = ewens_probability(v, alpha)
        bound = weight * _cdf_bound(v, horizon, lam)
        if bound < weight_floor:
            skipped += bound
            continue
        total = total + weight * np.asarray(partial_fraction_mixture(v, lam).raw_cdf(t))
    return total, skipped


def sn_cdf(
    t: npt.ArrayLike,
    n: int,
    alpha: float,
    base: Params | None = None,
    weight_floor: float = const.DP_WEIGHT_FLOOR,
    n_max: int = const.N_MAX,
    replicates: int = 100_000,
    seed: int = const.DEFAULT_SEED,
) -> Any:
    """Return P(S_n <= t) for the Dirichlet-process sequence with the given base.

    Exponential bases use the exact partition series; any other base falls
    back to Monte Carlo over urn configurations.
    """
    base = base or ErlangParams(1, 1.0)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")
    lam = DirichletProcess(alpha, base).exponential_rate
    if lam is None:
        logger.warning(f"base {base} is not exponential; using Monte Carlo for P(S_{n} <= t)")
        value, _ = sn_cdf_monte_carlo(t_arr, n, alpha, base, replicates, seed)
    else:
        value, _ = _sn_cdf_series(np.atleast_1d(t_arr), n, alpha, lam, weight_floor, n_max)
        value = np.clip(value, 0.0, 1.0).reshape(t_arr.shape)
    return value if np.ndim(value) else float(value)


def _urn_arrivals(alpha: float, base: Params, n: int, replicates: int, seed: int) -> np.ndarray:
    """Arrival times S_1..S_n for ``replicates`` independent urn sequences (rows)."""
    rng = make_rng(seed)
    values = np.empty((replicates, n))
    rows = np.arange(replicates)
    for i in range(n):
        fresh = np.asarray(sample(base, rng, size=replicates), dtype=float)
        if i == 0:
            values[:, 0] = fresh
            continue
        is_new = rng.random(replicates) < alpha / (alpha + i)
        pick = np.floor(rng.random(replicates) * i).astype(np.int64)
        values[:, i] = np.where(is_new, fresh, values[rows, pick])
    return np.cumsum(values, axis=1)


def sn_cdf_monte_carlo(
    t: npt.ArrayLike, n: int, alpha: float, base: Params, replicates: int, seed: int
) -> tuple[Any, Any]:
    """Monte Carlo P(S_n <= t) and its standard error from simulated urn sequences."""
    t_arr = np.asarray(t, dtype=float)
    arrivals = _urn_arrivals(alpha, base, n, replicates, seed)[:, -1]
    p = np.mean(arrivals[:, None] <= np.atleast_1d(t_arr)[None, :], axis=0)
    stderr = np.sqrt(p * (1.0 - p) / replicates)
    if t_arr.ndim:
        return p, stderr
    return float(p[0]), float(stderr[0])


def power_law_tail(terms: list[float], fit_points: int = const.DP_TAIL_FIT_POINTS) -> float:
    """Estimate the sum of the terms after the last one, assuming term_k ~ c k^-p.

    The exponent p is the negative log-log slope of the last ``fit_points``
    terms, so the tail is about term_n * n / (p - 1). Geometric decay shows up
    as a large local p and a small tail. Returns inf when p <= 1.
    """
    n = len(terms)
    last = terms[-1] if terms else 0.0
    if last <= 0:
        return 0.0
    if n < 2:
        return last
    k = np.arange(max(1, n - fit_points + 1), n + 1)
    recent = np.asarray(terms[-len(k) :], dtype=float)
    if np.any(recent <= 0):
        return 0.0
    p = -np.polyfit(np.log(k), np.log(recent), 1)[0]
    if p <= 1:
        return math.inf
    return last * n / (p - 1)


def _check_tail(t: float, tail: float, total: float, n_max: int) -> None:
    if not tail <= const.DP_TAIL_LIMIT * total:
        raise SeriesConvergenceError(
            f"DP series at t={t} has estimated tail {tail:.3g} beyond n_max={n_max} for partial sum {total:.6g}"
        )
    logger.warning(f"DP series at t={t} truncated at n_max={n_max}; extrapolated tail {tail:.3g}")


def _dp_series(
    t: np.ndarray, alpha: float, lam: float, tol: float, n_max: int, weight_floor: float
) -> list[SeriesValue]:
    """Series for every positive t at once; each point stops at its first term below ``tol``."""
    totals = np.zeros(len(t))
    skipped = np.zeros(len(t))
    history: list[list[float]] = [[] for _ in t]
    results: list[SeriesValue | None] = [None] * len(t)
    pending = np.arange(len(t))
    for n in range(1, n_max + 1):
        terms, lost = _sn_cdf_series(t[pending], n, alpha, lam, weight_floor, n_max)
        for i, term in zip(pending, terms):
            totals[i] += term
            skipped[i] += lost
            history[i].append(float(term))
            if term < tol:
                tail = power_law_tail(history[i])
                if math.isfinite(tail):
                    logger.debug(f"DP series at t={t[i]} stopped after {n} terms")
                    results[i] = SeriesValue(float(totals[i] + tail), float(tail + skipped[i]), n, "series")
        pending = np.array([i for i in pending if results[i] is None], dtype=np.int64)
        if not pending.size:
            break
    for i in pending:
        tail = power_law_tail(history[i])
        _check_tail(float(t[i]), tail, float(totals[i]), n_max)
        results[i] = SeriesValue(float(totals[i] + tail), float(tail + skipped[i]), n_max, "series")
    return [r for r in results if r is not None]


def dp_renewal_function(
    t: float,
    alpha: float,
    base: Params | None = None,
    tol: float = const.DP_TOL,
    n_max: int = const.N_MAX,
    weight_floor: float = const.DP_WEIGHT_FLOOR,
    replicates: int = 100_000,
    seed: int = const.DEFAULT_SEED,
) -> SeriesValue:
    """Return U(t) = sum_n P(S_n <= t) truncated at the first term below ``tol``.

    The terms decay polynomially in n, so the reported value adds a power-law
    estimate of the remaining tail (see ``power_law_tail``). The error estimate
    is that tail plus the Ewens mass of partitions skipped below
    ``weight_floor``. When ``n_max`` is reached first the tail is still
    extrapolated, and ``SeriesConvergenceError`` is raised only if it is
    unbounded or above ``DP_TAIL_LIMIT`` of the partial sum.
    """
    return dp_renewal_curve([t], alpha, base, tol, n_max, weight_floor, replicates, seed)[0]


def _dp_renewal_monte_carlo(
    t: float, alpha: float, base: Params, tol: float, n_max: int, replicates: int, seed: int
) -> SeriesValue:
    logger.warning(f"base {base} is not exponential; estimating U({t}) by Monte Carlo")
    arrivals = _urn_arrivals(alpha, base, n_max, replicates, seed)
    terms = np.mean(arrivals <= t, axis=0)
    below = np.nonzero(terms < tol)[0]
    n_used = int(below[0]) + 1 if below.size else n_max
    counts = np.sum(arrivals[:, :n_used] <= t, axis=1)
    stderr = float(counts.std(ddof=1) / np.sqrt(replicates))
    tail = 0.0
    if not below.size:
        tail = power_law_tail(terms.tolist())
        _check_tail(t, tail, float(counts.mean()), n_max)
    return SeriesValue(float(counts.mean()) + tail, stderr + tail, n_used, "monte-carlo")


def dp_renewal_curve(
    grid: npt.ArrayLike,
    alpha: float,
    base: Params | None = None,
    tol: float = const.DP_TOL,
    n_max: int = const.N_MAX,
    weight_floor: float = const.DP_WEIGHT_FLOOR,
    replicates: int = 100_000,
    seed: int = const.DEFAULT_SEED,
) -> list[SeriesValue]:
    """Evaluate ``dp_renewal_function`` at every grid point, sharing the partition sums."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any(grid < 0):
        raise ValueError("t must be nonnegative")
    base = base or ErlangParams(1, 1.0)
    lam = DirichletProcess(alpha, base).exponential_rate
    results = [SeriesValue(0.0, 0.0, 0, "series")] * len(grid)
    positive = np.nonzero(grid > 0)[0]
    if lam is None:
        for i in positive:
            results[i] = _dp_renewal_monte_carlo(float(grid[i]), alpha, base, tol, n_max, replicates, seed)
    elif positive.size:
        for i, value in zip(positive, _dp_series(grid[positive], alpha, lam, tol, n_max, weight_floor)):
            results[i] = value
    return results
