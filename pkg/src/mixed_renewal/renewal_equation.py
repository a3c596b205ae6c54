"""Mixed renewal equation A = a + E[F * A(., {F})]: closed forms, numerical solver and i.i.d. comparator."""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
import numpy.typing as npt
from scipy import special

from mixed_renewal import constant as const
from mixed_renewal.distributions import ErlangParams, LomaxParams, erlang_cdf, exp_mixture_cdf, lomax_cdf
from mixed_renewal.errors import UnsupportedModelError
from mixed_renewal.exchangeable import (
    ErlangGamma,
    ExpGamma,
    ExpMixture,
    ModelSpec,
    is_conditionally_exponential,
    latent_quadrature,
)
from mixed_renewal.renewal_core import RenewalCurve, conditional_renewal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DriftFunction:
    """Bounded nonnegative drift a(t): either 1 - exp(-beta t) or a tabulated function."""

    beta: float | None = None
    table_grid: tuple[float, ...] | None = None
    table_values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        """Check that exactly one representation is given."""
        tabulated = self.table_grid is not None
        if (self.beta is None) == (not tabulated):
            raise ValueError("give either beta or a tabulated drift")
        if self.beta is not None and not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if tabulated:
            grid = np.asarray(self.table_grid, dtype=float)
            values = np.asarray(self.table_values, dtype=float)
            if grid.shape != values.shape or grid.ndim != 1 or grid.size < 2:
                raise ValueError("tabulated drift needs matching grid and values")
            if np.any(np.diff(grid) <= 0):
                raise ValueError("tabulated drift grid must be strictly increasing")
            if np.any(values < 0) or not np.all(np.isfinite(values)):
                raise ValueError("drift must be finite and nonnegative")

    @classmethod
    def exp_saturating(cls, beta: float) -> "DriftFunction":
        """Return a(t) = 1 - exp(-beta t)."""
        return cls(beta=beta)

    @classmethod
    def tabulated(cls, grid: npt.ArrayLike, values: npt.ArrayLike) -> "DriftFunction":
        """Return a piecewise-linear drift through the given points."""
        return cls(table_grid=tuple(np.asarray(grid, dtype=float)), table_values=tuple(np.asarray(values, dtype=float)))

    @classmethod
    def zero(cls) -> "DriftFunction":
        """Return a = 0."""
        return cls.tabulated([0.0, 1.0], [0.0, 0.0])

    def __call__(self, t: npt.ArrayLike) -> np.ndarray:
        """Evaluate a(t)."""
        t = np.asarray(t, dtype=float)
        if self.beta is not None:
            return -np.expm1(-self.beta * t)
        return np.interp(t, self.table_grid, self.table_values)

    def integral(self, t: npt.ArrayLike) -> Any:
        """Return int_0^t a(x) dx, exact for the saturating drift."""
        t = np.asarray(t, dtype=float)
        if self.beta is not None:
            return t + np.expm1(-self.beta * t) / self.beta
        raise UnsupportedModelError("no closed integral for a tabulated drift")


def solve_closed_discrete(t: npt.ArrayLike, beta: float, weights: npt.ArrayLike, rates: npt.ArrayLike) -> Any:
    """Return A(t) for a(t) = 1 - exp(-beta t) under a discrete mixture of exponentials.

    A(t) = 1 - e^{-beta t} + (t + (e^{-beta t} - 1) / beta) sum_i p_i a_i
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not beta > 0:
        raise ValueError("need t >= 0 and beta > 0")
    mean_rate = math.fsum(p * a for p, a in zip(np.asarray(weights), np.asarray(rates), strict=True))
    value = -np.expm1(-beta * t) + (t + np.expm1(-beta * t) / beta) * mean_rate
    return value if value.ndim else float(value)


def solve_closed_continuous(t: npt.ArrayLike, alpha: float, beta: float, lam: float) -> Any:
    """Return A(t) for a(t) = 1 - exp(-beta t) with theta ~ Ga(alpha, rate lam).

    A(t) = 1 - e^{-beta t} + (alpha / lam) (t + (e^{-beta t} - 1) / beta)
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if not (alpha > 0 and beta > 0 and lam > 0):
        raise ValueError("alpha, beta and lam must be positive")
    value = -np.expm1(-beta * t) + alpha / lam * (t + np.expm1(-beta * t) / beta)
    return value if value.ndim else float(value)


def _uniform_step(grid: npt.ArrayLike) -> tuple[np.ndarray, float]:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or grid[0] != 0:
        raise ValueError("grid must start at 0 and have at least two points")
    steps = np.diff(grid)
    h = float(grid[-1] / (grid.size - 1))
    if not np.allclose(steps, h, rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform")
    return grid, h


def _stieltjes_convolution(values: np.ndarray, measure: np.ndarray) -> np.ndarray:
    """Trapezoidal int_0^{t_k} g(t_k - x) dM(x) on a uniform grid.

    ``values`` holds g on the grid and ``measure`` holds M on the grid.
    """
    midpoint = 0.5 * (values[:-1] + values[1:])
    increments = np.diff(measure)
    out = np.zeros_like(values)
    out[1:] = np.convolve(midpoint, increments)[: len(values) - 1]
    return out


def _conditional_cdf(model: ModelSpec, theta: float, x: np.ndarray) -> np.ndarray:
    if is_conditionally_exponential(model):
        return -np.expm1(-theta * x)
    if isinstance(model, ErlangGamma):
        return np.asarray(erlang_cdf(x, ErlangParams(model.m, theta)))
    raise UnsupportedModelError(f"no conditional distribution for {type(model).__name__}")


def conditional_solution(a: DriftFunction, model: ModelSpec, theta: float, grid: npt.ArrayLike) -> RenewalCurve:
    """Return A(t, {theta}) = a(t) + (a * U(. | theta))(t)."""
    grid, _ = _uniform_step(grid)
    drift = a(grid)
    renewal = conditional_renewal(model, theta, grid)[0]
    return RenewalCurve(grid, drift + _stieltjes_convolution(drift, renewal))


def solve_numeric(
    a: DriftFunction, model: ModelSpec, grid: npt.ArrayLike, quad_nodes: int = const.QUAD_NODES
) -> RenewalCurve:
    """Solve the mixed renewal equation on a uniform grid.

    A(t) = a(t) + int (a * U(. | theta))(t) eta(d theta), with the latent
    integral done by quadrature and the convolution by the trapezoidal rule.
    The convolution is linear in U, so the latent average is taken first.
    """
    grid, h = _uniform_step(grid)
    theta, weights = latent_quadrature(model, quad_nodes)
    renewal = weights @ conditional_renewal(model, theta, grid)
    drift = a(grid)
    logger.debug(f"Solving mixed renewal equation with h={h:.3g} on {len(theta)} latent nodes")
    return RenewalCurve(grid, drift + _stieltjes_convolution(drift, renewal))


def solve_iid_comparator(
    a: DriftFunction, marginal_cdf: Callable[[np.ndarray], Any], grid: npt.ArrayLike
) -> RenewalCurve:
    """Solve A = a + F * A for an ordinary renewal process with CDF F.

    Forward substitution of the trapezoidal discretization; the j = 1 term
    carries the unknown A_k and is moved to the left side.
    """
    grid, _ = _uniform_step(grid)
    drift = a(grid)
    increments = np.diff(np.asarray(marginal_cdf(grid), dtype=float))
    solution = np.zeros_like(grid)
    solution[0] = drift[0]
    d1 = increments[0]
    for k in range(1, len(grid)):
        rest = 0.0
        if k >= 2:
            pairs = 0.5 * (solution[: k - 1] + solution[1:k])
            rest = float(pairs @ increments[k - 1 : 0 : -1])
        solution[k] = (drift[k] + 0.5 * solution[k - 1] * d1 + rest) / (1.0 - 0.5 * d1)
    return RenewalCurve(grid, solution)


def marginal_cdf_for(model: ModelSpec) -> Callable[[np.ndarray], Any]:
    """Marginal CDF of T_1, the F of the i.i.d. comparator.

    Discrete mixtures and Gamma mixing have closed forms; uniform mixing
    falls back to latent quadrature.
    """
    if isinstance(model, ExpMixture):
        return lambda x: exp_mixture_cdf(x, model.weights, model.rates)
    if isinstance(model, ExpGamma):
        return lambda x: lomax_cdf(x, LomaxParams(model.lam, model.alpha))
    if isinstance(model, ErlangGamma):
        # T / (1 + T) ~ Beta(m, alpha)
        return lambda x: special.betainc(model.m, model.alpha, np.asarray(x, dtype=float) / (1.0 + np.asarray(x)))
    theta, weights = latent_quadrature(model)
    return lambda x: np.stack([_conditional_cdf(model, th, np.asarray(x, dtype=float)) for th in theta]).T @ weights


def richardson_order(solver: Callable[[float], RenewalCurve], h: float) -> float:
    """Observed convergence order from solutions at steps h, h/2 and h/4.

    The three curves are compared on the coarse grid.
    """
    coarse, half, quarter = solver(h), solver(h / 2.0), solver(h / 4.0)
    n = len(coarse)
    e1 = np.max(np.abs(coarse.values - half.values[: 2 * n - 1 : 2]))
    e2 = np.max(np.abs(half.values[: 2 * n - 1 : 2] - quarter.values[: 4 * n - 3 : 4]))
    if e2 == 0:
        return math.inf
    return float(np.log2(e1 / e2))


def fixed_point_residual(
    curve: RenewalCurve, a: DriftFunction, model: ModelSpec, quad_nodes: int = const.QUAD_NODES
) -> float:
    """Return max |A - (a + E[F_theta * A(., {theta})])| over the grid."""
    grid = curve.grid
    theta, weights = latent_quadrature(model, quad_nodes)
    total = np.zeros_like(grid)
    for th, w in zip(theta, weights, strict=True):
        conditional = conditional_solution(a, model, th, grid).values
        total += w * _stieltjes_convolution(conditional, _conditional_cdf(model, th, grid))
    return float(np.max(np.abs(curve.values - (a(grid) + total))))
