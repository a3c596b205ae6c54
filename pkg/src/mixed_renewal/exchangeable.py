"""Exchangeable inter-arrival hierarchies: model variants, samplers, moments and correlations.

Every parametric variant is a conditionally i.i.d. hierarchy: a latent
parameter is drawn once, then the inter-arrival times are i.i.d. given it.
The Dirichlet-process variant is sampled sequentially through the Polya urn.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special, stats

from mixed_renewal.distributions import (
    ErlangParams,
    GammaParams,
    LomaxParams,
    Params,
    Seed,
    make_rng,
    sample,
)
from mixed_renewal.errors import MomentUndefinedError, UnsupportedModelError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ErlangGamma:
    """T | lam ~ Er(m, lam), lam ~ Ga(alpha, 1)."""

    m: int
    alpha: float

    def __post_init__(self) -> None:
        """Validate hyperparameters."""
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class ExpUniform:
    """T | theta ~ Exp(theta), theta ~ U(0, 2 lam)."""

    lam: float

    def __post_init__(self) -> None:
        """Validate hyperparameters."""
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")


@dataclass(frozen=True)
class Gamma2Pareto:
    """T | delta ~ Ga(2, delta), delta ~ Pareto(scale k, shape alpha) on [k, inf)."""

    k: float
    alpha: float

    def __post_init__(self) -> None:
        """Validate hyperparameters."""
        if not (self.k > 0 and self.alpha > 0):
            raise ValueError(f"k and alpha must be positive, got k={self.k}, alpha={self.alpha}")


@dataclass(frozen=True)
class ExpMixture:
    """T | theta ~ Exp(theta), theta ~ sum_i p_i delta_{a_i} (discrete mixing)."""

    weights: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validate weights and rates."""
        if len(self.weights) != len(self.rates) or not self.weights:
            raise ValueError("weights and rates must be nonempty and of equal length")
        if any(not 0 < p < 1 for p in self.weights) and len(self.weights) > 1:
            raise ValueError("mixture weights must lie in (0, 1)")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {math.fsum(self.weights)}")
        if any(not r > 0 for r in self.rates):
            raise ValueError("mixture rates must be positive")


@dataclass(frozen=True)
class ExpGamma:
    """T | theta ~ Exp(theta), theta ~ Ga(alpha, rate lam); the marginal of T is Lomax(lam, alpha)."""

    alpha: float
    lam: float = 1.0

    def __post_init__(self) -> None:
        """Validate hyperparameters."""
        if not (self.alpha > 0 and self.lam > 0):
            raise ValueError(f"alpha and lam must be positive, got alpha={self.alpha}, lam={self.lam}")


@dataclass(frozen=True)
class DirichletProcess:
    """T | F ~ F, F ~ DP(alpha, base)."""

    alpha: float
    base: Params = field(default_factory=lambda: ErlangParams(1, 1.0))

    def __post_init__(self) -> None:
        """Validate the precision parameter."""
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def exponential_rate(self) -> float | None:
        """Rate of an exponential base, None for other bases."""
        if isinstance(self.base, ErlangParams) and self.base.shape == 1:
            return self.base.rate
        if isinstance(self.base, GammaParams) and self.base.shape == 1:
            return self.base.rate
        return None


ModelSpec = ErlangGamma | ExpUniform | Gamma2Pareto | ExpMixture | ExpGamma | DirichletProcess

CONDITIONALLY_EXPONENTIAL = (ExpUniform, ExpMixture, ExpGamma)


@dataclass(frozen=True)
class Sequence:
    """Inter-arrival times of one sequence, with the latent draw when simulated."""

    times: np.ndarray
    latent: Any = None

    def __post_init__(self) -> None:
        """Check that all times are positive and finite."""
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1:
            raise ValueError("inter-arrival times must be one-dimensional")
        if not np.all(np.isfinite(times)) or np.any(times <= 0):
            raise ValueError("inter-arrival times must be positive and finite")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        """Return the number of inter-arrival times."""
        return len(self.times)

    @property
    def arrivals(self) -> np.ndarray:
        """Cumulative sums S_1, ..., S_n."""
        return np.cumsum(self.times)


def is_conditionally_exponential(model: ModelSpec) -> bool:
    """Return True when T | theta ~ Exp(theta)."""
    if isinstance(model, ErlangGamma):
        return model.m == 1
    return isinstance(model, CONDITIONALLY_EXPONENTIAL)


class SequenceSampler:
    """Draws one exchangeable sequence in chunks.

    Parametric variants fix their latent parameter at construction. The
    Dirichlet-process variant keeps the urn (all previous values with
    multiplicity) so that a sequence can be extended past its first chunk.
    """

    def __init__(self, model: ModelSpec, rng: np.random.Generator) -> None:
        """Draw the latent parameter for parametric variants."""
        self.model = model
        self.rng = rng
        self.values = np.empty(0)
        self.latent: Any = None
        if isinstance(model, ErlangGamma):
            self.latent = rng.gamma(model.alpha, 1.0)
        elif isinstance(model, ExpUniform):
            self.latent = 2.0 * model.lam * (1.0 - rng.random())
        elif isinstance(model, Gamma2Pareto):
            self.latent = model.k * (1.0 + rng.pareto(model.alpha))
        elif isinstance(model, ExpMixture):
            self.latent = float(rng.choice(np.asarray(model.rates), p=np.asarray(model.weights)))
        elif isinstance(model, ExpGamma):
            self.latent = rng.gamma(model.alpha, 1.0 / model.lam)
        elif not isinstance(model, DirichletProcess):
            raise UnsupportedModelError(f"cannot sample from {type(model).__name__}")

    def draw(self, count: int) -> np.ndarray:
        """Append ``count`` values to the sequence and return them."""
        if count < 1:
            return np.empty(0)
        if isinstance(self.model, DirichletProcess):
            chunk = self._urn_chunk(count)
        else:
            chunk = self._conditional_chunk(count)
        self.values = np.concatenate([self.values, chunk])
        return chunk

    def _conditional_chunk(self, count: int) -> np.ndarray:
        model = self.model
        if isinstance(model, ErlangGamma):
            return self.rng.gamma(model.m, 1.0 / self.latent, size=count)
        if isinstance(model, Gamma2Pareto):
            return self.rng.gamma(2.0, 1.0 / self.latent, size=count)
        return self.rng.exponential(1.0 / self.latent, size=count)

    def _urn_chunk(self, count: int) -> np.ndarray:
        model = self.model
        assert isinstance(model, DirichletProcess)
        start = len(self.values)
        index = np.arange(start, start + count)
        is_new = self.rng.random(count) < model.alpha / (model.alpha + index)
        pick = np.floor(self.rng.random(count) * index).astype(np.int64)
        fresh = np.asarray(sample(model.base, self.rng, size=count), dtype=float)
        # A fresh draw points at itself, a re-draw at an earlier position.
        pointer = np.where(is_new, index, pick)
        while True:
            inside = (pointer >= start) & ~is_new[np.clip(pointer - start, 0, count - 1)]
            if not inside.any():
                break
            pointer[inside] = pointer[pointer[inside] - start]
        chunk = np.empty(count)
        own = pointer >= start
        chunk[own] = fresh[pointer[own] - start]
        chunk[~own] = self.values[pointer[~own]]
        self.latent = np.unique(np.concatenate([self.values, chunk]))
        return chunk


def sample_sequence(model: ModelSpec, n: int, seed: Seed = None) -> Sequence:
    """Draw one exchangeable sequence of length ``n``."""
    if n < 1:
        raise ValueError(f"sequence length must be at least 1, got {n}")
    sampler = SequenceSampler(model, make_rng(seed))
    times = sampler.draw(n)
    return Sequence(times, latent=sampler.latent)


def sample_sequences(model: ModelSpec, lengths: list[int], seed: int, stream: tuple[int, ...] = ()) -> list[Sequence]:
    """Draw independent sequences, sequence ``i`` from stream (seed, *stream, i)."""
    return [sample_sequence(model, n, make_rng(seed, *stream, i)) for i, n in enumerate(lengths)]


def _inverse_moment(model: ModelSpec, r: int) -> float:
    """E[theta^{-r}] for the latent rate of conditionally exponential / Gamma(2) models."""
    if isinstance(model, ExpGamma):
        if model.alpha <= r:
            raise MomentUndefinedError(f"E[theta^-{r}] needs alpha > {r}, got {model.alpha}")
        return model.lam**r * math.exp(special.gammaln(model.alpha - r) - special.gammaln(model.alpha))
    if isinstance(model, ExpMixture):
        return math.fsum(p * a ** (-r) for p, a in zip(model.weights, model.rates, strict=True))
    if isinstance(model, Gamma2Pareto):
        return model.alpha * model.k ** (-r) / (model.alpha + r)
    if isinstance(model, ExpUniform):
        raise MomentUndefinedError("E[1/theta] diverges for theta ~ U(0, 2 lam)")
    raise UnsupportedModelError(f"no inverse latent moments for {type(model).__name__}")


def theoretical_correlation(model: ModelSpec) -> float:
    """Return Corr(T_i, T_j), i != j."""
    if isinstance(model, ErlangGamma):
        if model.alpha <= 2:
            raise MomentUndefinedError(f"correlation needs alpha > 2, got {model.alpha}")
        return correlation_from_params(model.m, model.alpha)
    if isinstance(model, DirichletProcess):
        if not np.isfinite(base_variance(model.base)):
            raise MomentUndefinedError("Dirichlet-process base has infinite variance")
        return 1.0 / (model.alpha + 1.0)
    if isinstance(model, Gamma2Pareto):
        e1, e2 = _inverse_moment(model, 1), _inverse_moment(model, 2)
        return 4.0 * (e2 - e1**2) / (6.0 * e2 - 4.0 * e1**2)
    # T | theta ~ Exp(theta): Cov = Var(1/theta), Var(T) = 2 E[theta^-2] - E[theta^-1]^2
    e1, e2 = _inverse_moment(model, 1), _inverse_moment(model, 2)
    return (e2 - e1**2) / (2.0 * e2 - e1**2)


def correlation_from_params(m: int, alpha: float) -> float:
    """Return m / (alpha + m - 1), the Erlang-Gamma correlation."""
    return m / (alpha + m - 1.0)


def base_mean(p: Params) -> float:
    """Mean of a base distribution."""
    return float(p.mean)


def base_variance(p: Params) -> float:
    """Variance of a base distribution."""
    return float(p.variance)


def marginal_moments(model: ModelSpec) -> tuple[float, float]:
    """Return (E[T_1], Var(T_1)).

    A mean that exists with an infinite variance is returned as (mean, inf).
    """
    if isinstance(model, ErlangGamma):
        m, a = model.m, model.alpha
        if a <= 1:
            raise MomentUndefinedError(f"E[T] needs alpha > 1, got {a}")
        mean = m / (a - 1.0)
        if a <= 2:
            return mean, math.inf
        return mean, m * (a + m - 1.0) / ((a - 2.0) * (a - 1.0) ** 2)
    if isinstance(model, DirichletProcess):
        mean = base_mean(model.base)
        if not np.isfinite(mean):
            raise MomentUndefinedError("Dirichlet-process base has infinite mean")
        return mean, base_variance(model.base)
    if isinstance(model, Gamma2Pareto):
        e1, e2 = _inverse_moment(model, 1), _inverse_moment(model, 2)
        return 2.0 * e1, 6.0 * e2 - 4.0 * e1**2
    e1 = _inverse_moment(model, 1)
    try:
        e2 = _inverse_moment(model, 2)
    except MomentUndefinedError:
        return e1, math.inf
    return e1, 2.0 * e2 - e1**2


def renewal_finiteness(model: ModelSpec) -> bool:
    """Return False exactly when U(t) is infinite (Gamma2Pareto with alpha <= 1)."""
    if isinstance(model, Gamma2Pareto):
        return model.alpha > 1
    return True


def latent_mean_variance(model: ModelSpec) -> tuple[float, float]:
    """Mean and variance of the latent rate of a conditionally exponential model."""
    if isinstance(model, ErlangGamma) and model.m == 1:
        return model.alpha, model.alpha
    if isinstance(model, ExpGamma):
        return model.alpha / model.lam, model.alpha / model.lam**2
    if isinstance(model, ExpUniform):
        return model.lam, (2.0 * model.lam) ** 2 / 12.0
    if isinstance(model, ExpMixture):
        w, r = np.asarray(model.weights), np.asarray(model.rates)
        mean = float(w @ r)
        return mean, float(w @ (r - mean) ** 2)
    raise UnsupportedModelError(f"{type(model).__name__} is not conditionally exponential")


def expected_distinct_values(alpha: float, n: int) -> float:
    """Expected number of distinct values among n Polya-urn draws."""
    i = np.arange(1, n + 1)
    return float(np.sum(alpha / (alpha + i - 1.0)))


def latent_quadrature(model: ModelSpec, nodes: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Return latent nodes and weights for integrals over the mixing law.

    Gamma mixing uses Gauss-Legendre on (0, 1) mapped by theta = c u / (1 - u)
    with c the latent mean; uniform mixing uses Gauss-Legendre on (0, 2 lam);
    discrete mixing returns its atoms.
    """
    if isinstance(model, ExpMixture):
        return np.asarray(model.rates, dtype=float), np.asarray(model.weights, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    if isinstance(model, ExpUniform):
        upper = 2.0 * model.lam
        return upper * (x + 1.0) / 2.0, w / 2.0
    if isinstance(model, ErlangGamma):
        shape, rate = model.alpha, 1.0
    elif isinstance(model, ExpGamma):
        shape, rate = model.alpha, model.lam
    else:
        raise UnsupportedModelError(f"no latent quadrature for {type(model).__name__}")
    c = shape / rate
    u = (x + 1.0) / 2.0
    theta = c * u / (1.0 - u)
    jacobian = c / (1.0 - u) ** 2
    density = np.exp(stats.gamma.logpdf(theta, shape, scale=1.0 / rate))
    return theta, w / 2.0 * jacobian * density


def model_from_dict(data: dict) -> ModelSpec:
    """Build a model from a configuration mapping with a ``kind`` key."""
    kind = str(data.get("kind", "")).lower()
    if kind == "erlang-gamma":
        return ErlangGamma(int(data["m"]), float(data["alpha"]))
    if kind == "exp-uniform":
        return ExpUniform(float(data["lam"]))
    if kind == "gamma2-pareto":
        return Gamma2Pareto(float(data["k"]), float(data["alpha"]))
    if kind == "exp-mixture":
        return ExpMixture(tuple(float(p) for p in data["weights"]), tuple(float(r) for r in data["rates"]))
    if kind == "exp-gamma":
        return ExpGamma(float(data["alpha"]), float(data.get("lam", 1.0)))
    if kind == "dirichlet":
        return DirichletProcess(float(data["alpha"]), base_from_dict(data.get("base", {"kind": "exponential"})))
    raise ValueError(f"unknown model kind '{kind}'")


def base_from_dict(data: dict) -> Params:
    """Build a base distribution from a configuration mapping."""
    kind = str(data.get("kind", "exponential")).lower()
    if kind == "exponential":
        return ErlangParams(1, float(data.get("rate", 1.0)))
    if kind == "erlang":
        return ErlangParams(int(data["shape"]), float(data.get("rate", 1.0)))
    if kind == "gamma":
        return GammaParams(float(data["shape"]), float(data.get("rate", 1.0)))
    if kind == "lomax":
        return LomaxParams(float(data["scale"]), float(data["shape"]))
    raise ValueError(f"unknown base kind '{kind}'")


def model_to_dict(model: ModelSpec) -> dict:
    """Inverse of ``model_from_dict``."""
    if isinstance(model, ErlangGamma):
        return {"kind": "erlang-gamma", "m": model.m, "alpha": model.alpha}
    if isinstance(model, ExpUniform):
        return {"kind": "exp-uniform", "lam": model.lam}
    if isinstance(model, Gamma2Pareto):
        return {"kind": "gamma2-pareto", "k": model.k, "alpha": model.alpha}
    if isinstance(model, ExpMixture):
        return {"kind": "exp-mixture", "weights": list(model.weights), "rates": list(model.rates)}
    if isinstance(model, ExpGamma):
        return {"kind": "exp-gamma", "alpha": model.alpha, "lam": model.lam}
    base = model.base
    if isinstance(base, ErlangParams):
        base_dict = {"kind": "erlang", "shape": base.shape, "rate": base.rate}
    elif isinstance(base, GammaParams):
        base_dict = {"kind": "gamma", "shape": base.shape, "rate": base.rate}
    else:
        base_dict = {"kind": "lomax", "scale": base.scale, "shape": base.shape}
    return {"kind": "dirichlet", "alpha": model.alpha, "base": base_dict}
