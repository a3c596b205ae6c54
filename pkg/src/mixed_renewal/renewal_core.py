"""Counting process, mixed renewal functions and the covariance structure of mixed renewal processes."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, NamedTuple

import numpy as np
import numpy.typing as npt
from scipy import integrate, special

from mixed_renewal import constant as const
from mixed_renewal.distributions import ErlangParams, erlang_cdf, erlang_pdf, make_rng
from mixed_renewal.errors import (
    DivergentIntegrandError,
    HorizonError,
    InfiniteRenewalError,
    SeriesConvergenceError,
    UnsupportedModelError,
)
from mixed_renewal.exchangeable import (
    DirichletProcess,
    ErlangGamma,
    ExpGamma,
    ExpMixture,
    ExpUniform,
    Gamma2Pareto,
    ModelSpec,
    Sequence,
    SequenceSampler,
    is_conditionally_exponential,
    latent_mean_variance,
    latent_quadrature,
    renewal_finiteness,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RenewalCurve:
    """Values of U(t), A(t) or an empirical mean counting path on a time grid."""

    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None

    def __post_init__(self) -> None:
        """Validate shapes and grid ordering."""
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be one-dimensional arrays of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(grid < 0):
            raise ValueError("grid must be nonnegative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))

    def __len__(self) -> int:
        """Return the number of grid points."""
        return len(self.grid)


class SeriesResult(NamedTuple):
    """Truncated series value with its tail estimate and number of terms."""

    value: float
    error_estimate: float
    terms: int


def _times(seq: Sequence | npt.ArrayLike) -> np.ndarray:
    return seq.times if isinstance(seq, Sequence) else np.asarray(seq, dtype=float)


def count_events(seq: Sequence | npt.ArrayLike, t: npt.ArrayLike) -> Any:
    """Return N(t) = sup{n : S_n <= t} for one sequence."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")
    counts = np.searchsorted(np.cumsum(_times(seq)), t_arr, side="right")
    return counts if counts.ndim else int(counts)


def _check_grid(grid: npt.ArrayLike) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty one-dimensional array")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be nonnegative and strictly increasing")
    return grid


def _simulate_counts(
    model: ModelSpec, grid: np.ndarray, seed: int, indices: range, max_events: int
) -> np.ndarray:
    """Counts on ``grid`` for replicates ``indices``, replicate r drawn from stream (seed, r)."""
    horizon = grid[-1]
    counts = np.empty((len(indices), len(grid)), dtype=np.int64)
    for row, r in enumerate(indices):
        sampler = SequenceSampler(model, make_rng(seed, r))
        total, chunk = 0.0, 32
        while total <= horizon:
            if len(sampler.values) >= max_events:
                raise HorizonError(
                    f"replicate {r} needed more than {max_events} events to pass t={horizon}"
                )
            total += float(np.sum(sampler.draw(min(chunk, max_events - len(sampler.values)))))
            chunk *= 2
        counts[row] = np.searchsorted(np.cumsum(sampler.values), grid, side="right")
    return counts


def mc_counts(
    model: ModelSpec,
    grid: npt.ArrayLike,
    replicates: int,
    seed: int,
    max_events: int = const.MAX_EVENTS_PER_REPLICATE,
    workers: int = 1,
) -> np.ndarray:
    """Simulate N(t) on ``grid`` for ``replicates`` independent sequences.

    Replicates are split into fixed contiguous blocks, so the result does not
    depend on ``workers``.
    """
    grid = _check_grid(grid)
    if not renewal_finiteness(model):
        raise InfiniteRenewalError(f"U(t) is infinite for {model}")
    if isinstance(model, Gamma2Pareto):
        raise UnsupportedModelError("Gamma2Pareto is simulate-only; no renewal-function evaluation")
    blocks = [range(start, min(start + 1000, replicates)) for start in range(0, replicates, 1000)]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(_simulate_counts, *zip(*[(model, grid, seed, b, max_events) for b in blocks], strict=True))
            )
    else:
        parts = [_simulate_counts(model, grid, seed, b, max_events) for b in blocks]
    return np.concatenate(parts, axis=0)


def mc_renewal_function(
    model: ModelSpec,
    grid: npt.ArrayLike,
    replicates: int,
    seed: int,
    max_events: int = const.MAX_EVENTS_PER_REPLICATE,
    workers: int = 1,
) -> RenewalCurve:
    """Estimate U(t) = E[N(t)] by Monte Carlo, with pointwise standard errors."""
    if replicates < const.MIN_MC_REPLICATES:
        raise ValueError(f"Monte Carlo renewal function needs at least {const.MIN_MC_REPLICATES} replicates")
    grid = _check_grid(grid)
    logger.info(f"Simulating {replicates} replicates of {type(model).__name__} up to t={grid[-1]}")
    counts = mc_counts(model, grid, replicates, seed, max_events, workers).astype(float)
    mean = counts.mean(axis=0)
    stderr = counts.std(axis=0, ddof=1) / np.sqrt(replicates)
    return RenewalCurve(grid, mean, stderr)


def mc_covariance(
    model: ModelSpec, t: float, s: float, replicates: int, seed: int, workers: int = 1
) -> tuple[float, float]:
    """Monte Carlo Cov(N(t), N(t+s)) and its standard error."""
    if not t > 0 or s < 0:
        raise ValueError("need t > 0 and s >= 0")
    grid = np.array([t, t + s]) if s > 0 else np.array([t])
    counts = mc_counts(model, grid, replicates, seed, workers=workers).astype(float)
    x, y = counts[:, 0], counts[:, -1]
    products = (x - x.mean()) * (y - y.mean())
    cov = float(products.sum() / (replicates - 1))
    return cov, float(products.std(ddof=1) / np.sqrt(replicates))


def _folded_roots_sum(m: int, g: Callable[[np.ndarray], np.ndarray], naive: bool = False) -> np.ndarray:
    """Return (1/m) sum_{k=1}^{m-1} z^k/(1-z^k) g(1 - z^k), z = exp(2 pi i/m), as a real array.

    Conjugate pairs k, m-k are folded into 2 Re(term_k); for even m the
    self-conjugate root z^{m/2} = -1 is added separately.
    """
    if naive:
        k = np.arange(1, m)
        z = np.exp(2j * np.pi * k / m)
        total = np.sum((z / (1.0 - z))[:, None] * g(1.0 - z), axis=0)
        residue = float(np.max(np.abs(total.imag))) if total.size else 0.0
        if residue > const.IMAG_TOL:
            raise ArithmeticError(f"imaginary residue {residue:.3e} in roots-of-unity sum")
        return total.real / m
    k = np.arange(1, (m - 1) // 2 + 1)
    z = np.exp(2j * np.pi * k / m)
    if k.size:
        total = 2.0 * np.sum(((z / (1.0 - z))[:, None] * g(1.0 - z)).real, axis=0)
    else:
        total = 0.0
    if m % 2 == 0:
        total = total + (-0.5) * g(np.array([2.0 + 0j]))[0].real
    return np.asarray(total, dtype=float) / m


def erlang_conditional_renewal(t: npt.ArrayLike, m: int, lam: float, naive: bool = False) -> Any:
    """Return the i.i.d. Erlang(m, lam) renewal function U(t | lam)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if m < 1 or not lam > 0:
        raise ValueError("need m >= 1 and lam > 0")
    flat = np.atleast_1d(t)

    def g(w: np.ndarray) -> np.ndarray:
        return -np.expm1(-lam * np.multiply.outer(w, flat))

    value = lam * flat / m
    if m > 1:
        value = value + _folded_roots_sum(m, g, naive)
    return value.reshape(t.shape) if t.ndim else float(value[0])


def erlang_gamma_mixed_renewal(t: npt.ArrayLike, m: int, alpha: float, naive: bool = False) -> Any:
    """Return the mixed renewal function U(t) of the Erlang-Gamma model in closed form."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    flat = np.atleast_1d(t)

    def g(w: np.ndarray) -> np.ndarray:
        return -np.expm1(-alpha * np.log1p(np.multiply.outer(w, flat)))

    value = alpha * flat / m
    if m > 1:
        value = value + _folded_roots_sum(m, g, naive)
    return value.reshape(t.shape) if t.ndim else float(value[0])


def series_mixed_renewal(
    t: float, m: int, alpha: float, tol: float = const.SERIES_TOL, max_terms: int = const.SERIES_MAX_TERMS
) -> SeriesResult:
    """Sum U(t) = sum_n P(S_n <= t) for the Erlang-Gamma model.

    S_n / (1 + S_n) ~ Beta(n m, alpha), so each term is a regularized
    incomplete beta function. Summation stops at the first n whose term is
    below ``tol`` while the term ratio is below 0.9; the tail is estimated as
    term * ratio / (1 - ratio).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if t == 0:
        return SeriesResult(0.0, 0.0, 0)
    x = t / (1.0 + t)
    total, previous, start, batch = 0.0, None, 1, 256
    while start <= max_terms:
        n = np.arange(start, start + batch)
        terms = special.betainc(n * m, alpha, x)
        prev = np.concatenate([[previous if previous is not None else np.inf], terms[:-1]])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(prev > 0, terms / prev, 0.0)
        done = np.nonzero((terms < tol) & (ratios < const.SERIES_RATIO))[0]
        if done.size:
            i = int(done[0])
            total += float(np.sum(terms[: i + 1]))
            r = float(ratios[i])
            tail = float(terms[i]) * r / (1.0 - r)
            logger.debug(f"series U({t}) stopped after {start + i} terms, tail {tail:.2e}")
            return SeriesResult(total, tail, start + i)
        total += float(np.sum(terms))
        previous = float(terms[-1])
        start += batch
    raise SeriesConvergenceError(f"series for U({t}) did not reach tol={tol} in {max_terms} terms")


def conditional_renewal(model: ModelSpec, theta: npt.ArrayLike, t: npt.ArrayLike) -> np.ndarray:
    """Return U(t | theta) for each latent value (rows) and time (columns)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if is_conditionally_exponential(model):
        return np.multiply.outer(theta, t)
    if isinstance(model, ErlangGamma):
        return np.stack([erlang_conditional_renewal(t, model.m, th) for th in theta])
    raise UnsupportedModelError(f"no conditional renewal function for {type(model).__name__}")


def mixed_renewal_quadrature(t: npt.ArrayLike, model: ModelSpec, quad_nodes: int = const.QUAD_NODES) -> np.ndarray:
    """U(t) as the latent-parameter average of U(t | theta)."""
    theta, weights = latent_quadrature(model, quad_nodes)
    return weights @ conditional_renewal(model, theta, t)


def first_renewal_equation_rhs(t: float, m: int, alpha: float, quad_nodes: int = const.QUAD_NODES) -> float:
    """Return E[F(t)] + E[(F * U(.|F))(t)] for the Erlang-Gamma model.

    Conditioning on the first renewal, this equals U(t).
    """
    if t == 0:
        return 0.0
    model = ErlangGamma(m, alpha)
    thetas, weights = latent_quadrature(model, quad_nodes)
    total = 0.0
    for lam, w in zip(thetas, weights, strict=True):
        p = ErlangParams(m, lam)

        def integrand(x: float, p: ErlangParams = p) -> float:
            return erlang_conditional_renewal(t - x, m, p.rate) * erlang_pdf(x, p)

        convolution, _ = integrate.quad(integrand, 0.0, t, epsabs=1e-12, epsrel=1e-10, limit=200)
        total += w * (erlang_cdf(t, p) + convolution)
    return float(total)


def renewal_lower_bound(t: npt.ArrayLike, model: ModelSpec) -> Any:
    """Return the bound U(t) >= E_mu[t / E[T_1 | F]] - 1."""
    t = np.asarray(t, dtype=float)
    if isinstance(model, ErlangGamma):
        rate = model.alpha / model.m
    elif isinstance(model, (ExpUniform, ExpGamma, ExpMixture)):
        rate, _ = latent_mean_variance(model)
    elif isinstance(model, Gamma2Pareto) and model.alpha > 1:
        rate = model.alpha * model.k / (2.0 * (model.alpha - 1.0))
    else:
        raise UnsupportedModelError(f"no lower bound for {type(model).__name__}")
    bound = t * rate - 1.0
    return bound if bound.ndim else float(bound)


def _laplace_integrand(model: ModelSpec, theta: np.ndarray, s: float) -> np.ndarray:
    """L_F(s) / (1 - L_F(s)) at each latent value."""
    if is_conditionally_exponential(model):
        return theta / s
    if isinstance(model, ErlangGamma):
        log_l = -model.m * np.log1p(s / theta)
        one_minus = -np.expm1(log_l)
        if np.any(one_minus <= 0):
            raise DivergentIntegrandError(f"L_F({s}) reaches 1 on the latent range")
        return np.exp(log_l) / one_minus
    raise UnsupportedModelError(f"no Laplace transform for {type(model).__name__}")


def mixed_renewal_laplace(
    s: float, model: ModelSpec, quad_nodes: int = const.QUAD_NODES, kind: str = "stieltjes"
) -> float:
    """Laplace transform of the mixed renewal function by latent quadrature.

    ``kind="stieltjes"`` returns int e^{-st} dU(t) = E_mu[L_F / (1 - L_F)];
    ``kind="ordinary"`` returns int e^{-st} U(t) dt, the former divided by s.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    if kind not in ("stieltjes", "ordinary"):
        raise ValueError(f"unknown transform kind '{kind}'")
    theta, weights = latent_quadrature(model, quad_nodes)
    values = _laplace_integrand(model, theta, s)
    if not np.all(np.isfinite(values)):
        raise DivergentIntegrandError(f"integrand is not finite at s={s}")
    result = float(weights @ values)
    return result / s if kind == "ordinary" else result


def numerical_laplace_stieltjes(u: Callable[[float], float], s: float) -> float:
    """Return int_0^inf e^{-st} dU(t) = s int_0^inf e^{-st} U(t) dt for U(0) = 0."""
    value, _ = integrate.quad(lambda x: np.exp(-s * x) * u(x), 0.0, np.inf, epsabs=1e-12, epsrel=1e-10, limit=400)
    return s * value


def mixed_covariance(t: float, s: float, model: ModelSpec) -> float:
    """Cov(N(t), N(t+s)) = t phi + t (t+s) sigma^2 for conditionally exponential renewals."""
    if not t > 0 or s < 0:
        raise ValueError("need t > 0 and s >= 0")
    if not is_conditionally_exponential(model):
        raise UnsupportedModelError(f"no closed covariance for {model}")
    phi, sigma2 = latent_mean_variance(model)
    return t * phi + t * (t + s) * sigma2


def mixed_correlation(t: float, s: float, model: ModelSpec) -> float:
    """Corr(N(t), N(t+s)) for conditionally exponential renewals."""
    if not t > 0 or s < 0:
        raise ValueError("need t > 0 and s >= 0")
    if not is_conditionally_exponential(model):
        raise UnsupportedModelError(f"no closed correlation for {model}")
    phi, sigma2 = latent_mean_variance(model)
    u = t + s
    return t * (phi + u * sigma2) / (np.sqrt(t * u) * np.sqrt((phi + t * sigma2) * (phi + u * sigma2)))


def nhpp_equivalent(t: npt.ArrayLike, phi: float, sigma2: float) -> tuple[Any, Any]:
    """Return (Lambda(t), lambda(t)) of the Poisson process with the same correlation.

    Lambda(t) = t / (phi + t sigma^2), lambda(t) = phi / (sigma^2 t + phi)^2.
    """
    if not phi > 0 or sigma2 < 0:
        raise ValueError("need phi > 0 and sigma2 >= 0")
    t = np.asarray(t, dtype=float)
    cumulative = t / (phi + t * sigma2)
    rate = phi / (sigma2 * t + phi) ** 2
    if t.ndim:
        return cumulative, rate
    return float(cumulative), float(rate)


def nhpp_correlation(t: float, s: float, cumulative: Callable[[float], float]) -> float:
    """Return (Lambda(t) / Lambda(t+s))^(1/2), the Poisson-process correlation."""
    return float(np.sqrt(cumulative(t) / cumulative(t + s)))


def empirical_renewal_curve(data: Iterable[Sequence | npt.ArrayLike] | Any, grid: npt.ArrayLike) -> RenewalCurve:
    """Pointwise mean of N(t) across observed sequences."""
    grid = _check_grid(grid)
    sequences = list(getattr(data, "sequences", data))
    if not sequences:
        raise ValueError("need at least one sequence")
    counts = np.stack([np.asarray(count_events(seq, grid)) for seq in sequences]).astype(float)
    return RenewalCurve(grid, counts.mean(axis=0))


def renewal_curve_closed(model: ModelSpec, grid: npt.ArrayLike) -> RenewalCurve:
    """Closed-form U(t) on a grid for the variants that have one."""
    grid = _check_grid(grid)
    if isinstance(model, ErlangGamma):
        return RenewalCurve(grid, erlang_gamma_mixed_renewal(grid, model.m, model.alpha))
    if is_conditionally_exponential(model):
        phi, _ = latent_mean_variance(model)
        return RenewalCurve(grid, phi * grid)
    if isinstance(model, DirichletProcess):
        raise UnsupportedModelError("the Dirichlet-process renewal function has no closed form; use the series")
    raise UnsupportedModelError(f"no closed-form renewal function for {type(model).__name__}")


def renewal_curve_series(model: ModelSpec, grid: npt.ArrayLike, tol: float = const.SERIES_TOL) -> RenewalCurve:
    """Series U(t) on a grid for the Erlang-Gamma model; stderr holds the tail estimates."""
    grid = _check_grid(grid)
    if not isinstance(model, ErlangGamma):
        raise UnsupportedModelError(f"beta series is specific to the Erlang-Gamma model, got {type(model).__name__}")
    results = [series_mixed_renewal(float(t), model.m, model.alpha, tol) for t in grid]
    return RenewalCurve(grid, np.array([r.value for r in results]), np.array([r.error_estimate for r in results]))
