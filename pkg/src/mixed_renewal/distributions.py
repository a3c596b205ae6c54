"""Elementary distributions, their transforms and samplers, and signed Erlang mixtures."""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy import special

logger = logging.getLogger(__name__)

Seed = int | np.random.Generator | None


@dataclass(frozen=True)
class ErlangParams:
    """Erlang distribution with integer shape ``m`` and rate ``lam``."""

    shape: int
    rate: float

    def __post_init__(self) -> None:
        """Validate parameters."""
        if int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"Erlang shape must be a positive integer, got {self.shape}")
        if not self.rate > 0:
            raise ValueError(f"Erlang rate must be positive, got {self.rate}")

    @property
    def mean(self) -> float:
        """Return m / lam."""
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        """Return m / lam^2."""
        return self.shape / self.rate**2


@dataclass(frozen=True)
class GammaParams:
    """Gamma distribution with shape and rate."""

    shape: float
    rate: float = 1.0

    def __post_init__(self) -> None:
        """Validate parameters."""
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError(f"Gamma parameters must be positive, got shape={self.shape}, rate={self.rate}")

    @property
    def mean(self) -> float:
        """Return shape / rate."""
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        """Return shape / rate^2."""
        return self.shape / self.rate**2


@dataclass(frozen=True)
class LomaxParams:
    """Pareto distribution shifted to [0, inf), density a*s^a / (t+s)^(a+1)."""

    scale: float
    shape: float

    def __post_init__(self) -> None:
        """Validate parameters."""
        if not (self.scale > 0 and self.shape > 0):
            raise ValueError(f"Lomax parameters must be positive, got scale={self.scale}, shape={self.shape}")

    @property
    def mean(self) -> float:
        """Return scale / (shape - 1), infinite for shape <= 1."""
        return self.scale / (self.shape - 1) if self.shape > 1 else np.inf

    @property
    def variance(self) -> float:
        """Return the variance, infinite for shape <= 2."""
        if self.shape <= 2:
            return np.inf
        return self.scale**2 * self.shape / ((self.shape - 1) ** 2 * (self.shape - 2))


Params = ErlangParams | GammaParams | LomaxParams


@dataclass(frozen=True)
class SignedErlangMixture:
    """CDF written as sum of coefficient * ErlangCDF(t; shape, rate).

    Coefficients may be negative. ``raw_cdf`` never clamps; callers summing
    mixtures inside a series must use it.
    """

    components: tuple[tuple[float, int, float], ...]

    @classmethod
    def single(cls, shape: int, rate: float) -> "SignedErlangMixture":
        """Return a one-component mixture (a plain Erlang CDF)."""
        return cls(((1.0, int(shape), float(rate)),))

    @property
    def max_abs_coefficient(self) -> float:
        """Largest absolute coefficient."""
        return max(abs(c) for c, _, _ in self.components)

    def raw_cdf(self, t: npt.ArrayLike) -> Any:
        """Evaluate the signed sum without clamping."""
        t = _check_nonnegative(t)
        total = np.zeros_like(t, dtype=float)
        for coefficient, shape, rate in self.components:
            total = total + coefficient * special.gammainc(shape, rate * t)
        return total if total.ndim else float(total)


def _check_nonnegative(t: npt.ArrayLike) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("time arguments must be nonnegative")
    return arr


def _out(value: np.ndarray) -> Any:
    return value if np.ndim(value) else float(value)


def make_rng(seed: Seed = None, *stream: int) -> np.random.Generator:
    """Return a generator for ``seed`` and the stream path ``stream``.

    Distinct stream paths under one master seed give statistically independent
    generators, so (seed, replicate index) identifies a work unit.
    """
    if isinstance(seed, np.random.Generator):
        if stream:
            raise ValueError("stream ids need an integer master seed, not a Generator")
        return seed
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream)))


def erlang_cdf(t: npt.ArrayLike, p: ErlangParams) -> Any:
    """Return P(X <= t) for X ~ Erlang(m, lam).

    Uses the regularized lower incomplete gamma function, which switches
    between series and continued fraction internally.
    """
    t = _check_nonnegative(t)
    return _out(special.gammainc(p.shape, p.rate * t))


def erlang_pdf(t: npt.ArrayLike, p: ErlangParams) -> Any:
    """Return the Erlang density."""
    t = _check_nonnegative(t)
    log_pdf = p.shape * np.log(p.rate) + special.xlogy(p.shape - 1, t) - p.rate * t - special.gammaln(p.shape)
    return _out(np.exp(log_pdf))


def erlang_laplace(s: npt.ArrayLike, p: ErlangParams) -> Any:
    """Return E[exp(-sX)] = (lam / (lam + s))^m."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("Laplace argument must be nonnegative")
    return _out((p.rate / (p.rate + s)) ** p.shape)


def erlang_gamma_marginal_pdf(t: npt.ArrayLike, m: int, alpha: float) -> Any:
    """Return the marginal density of T when T | lam ~ Er(m, lam) and lam ~ Ga(alpha, 1).

    This is GB2 with a = b = 1, p = m, q = alpha; evaluated in log space.
    """
    t = _check_nonnegative(t)
    log_pdf = (
        special.gammaln(alpha + m)
        - special.gammaln(alpha)
        - special.gammaln(m)
        + special.xlogy(m - 1, t)
        - (m + alpha) * np.log1p(t)
    )
    return _out(np.exp(log_pdf))


def exp_uniform_marginal_pdf(t: npt.ArrayLike, lam: float) -> Any:
    """Return the marginal density of T when T | theta ~ Exp(theta), theta ~ U(0, 2 lam).

    f(t) = [1 - exp(-2 lam t)(1 + 2 lam t)] / (2 lam t^2), with f(0) = lam.
    """
    t = _check_nonnegative(t)
    x = 2.0 * lam * t
    small = x < 1e-3
    safe_x = np.where(small, 1.0, x)
    # 1 - e^{-x}(1 + x) = x^2/2 - x^3/3 + x^4/8 - ...
    series = x**2 / 2.0 - x**3 / 3.0 + x**4 / 8.0
    direct = -np.expm1(-safe_x) - safe_x * np.exp(-safe_x)
    numerator = np.where(small, series, direct)
    safe_t = np.where(t > 0, t, 1.0)
    value = np.where(t > 0, numerator / (2.0 * lam * safe_t**2), lam)
    return _out(value)


def lomax_pdf(t: npt.ArrayLike, p: LomaxParams) -> Any:
    """Return the Lomax density a s^a / (t + s)^(a+1)."""
    t = _check_nonnegative(t)
    return _out(p.shape / p.scale * (1.0 + t / p.scale) ** (-(p.shape + 1.0)))


def lomax_cdf(t: npt.ArrayLike, p: LomaxParams) -> Any:
    """Return 1 - (s / (t + s))^a."""
    t = _check_nonnegative(t)
    return _out(-np.expm1(-p.shape * np.log1p(t / p.scale)))


def exp_mixture_cdf(t: npt.ArrayLike, weights: npt.ArrayLike, rates: npt.ArrayLike) -> Any:
    """Return sum_i p_i (1 - exp(-a_i t)) for a discrete mixture of exponentials."""
    t = _check_nonnegative(t)
    w = np.asarray(weights, dtype=float)
    r = np.asarray(rates, dtype=float)
    value = -np.expm1(-np.multiply.outer(t, r)) @ w
    return _out(value)


def signed_mixture_cdf(t: npt.ArrayLike, mix: SignedErlangMixture, clip: bool = True) -> Any:
    """Evaluate a signed Erlang mixture CDF.

    Clipping to [0, 1] is a reporting convenience; series code calls
    ``mix.raw_cdf`` instead.
    """
    value = np.asarray(mix.raw_cdf(t))
    if clip:
        value = np.clip(value, 0.0, 1.0)
    return _out(value)


def sample(p: Params, rng_seed: Seed = None, size: int | None = None) -> Any:
    """Draw from an Erlang, Gamma or Lomax distribution.

    Draws are reproducible for a fixed integer seed.
    """
    rng = make_rng(rng_seed)
    if isinstance(p, ErlangParams):
        return rng.gamma(p.shape, 1.0 / p.rate, size=size)
    if isinstance(p, GammaParams):
        return rng.gamma(p.shape, 1.0 / p.rate, size=size)
    if isinstance(p, LomaxParams):
        # numpy's pareto draws Lomax with unit scale
        return p.scale * rng.pareto(p.shape, size=size)
    raise TypeError(f"cannot sample from {type(p).__name__}")


def base_cdf(t: npt.ArrayLike, p: Params) -> Any:
    """CDF of any supported base distribution."""
    if isinstance(p, ErlangParams):
        return erlang_cdf(t, p)
    if isinstance(p, GammaParams):
        t = _check_nonnegative(t)
        return _out(special.gammainc(p.shape, p.rate * t))
    if isinstance(p, LomaxParams):
        return lomax_cdf(t, p)
    raise TypeError(f"no CDF for {type(p).__name__}")
