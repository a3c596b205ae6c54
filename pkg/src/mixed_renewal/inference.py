"""Likelihood, maximum likelihood fit and fitted renewal curves for the Erlang-Gamma model."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np
import numpy.typing as npt
from scipy import optimize, special

from mixed_renewal import constant as const
from mixed_renewal.errors import FitFailureError
from mixed_renewal.exchangeable import ErlangGamma, Sequence, correlation_from_params, sample_sequences
from mixed_renewal.renewal_core import erlang_conditional_renewal, erlang_gamma_mixed_renewal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SequenceSet:
    """Independent exchangeable sequences, one per unit (machine, subject, ...)."""

    sequences: tuple[Sequence, ...]
    ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Check that the set is nonempty and labelled consistently."""
        if not self.sequences:
            raise ValueError("a sequence set needs at least one sequence")
        if any(len(seq) == 0 for seq in self.sequences):
            raise ValueError("every sequence must hold at least one time")
        if not self.ids:
            object.__setattr__(self, "ids", tuple(str(i + 1) for i in range(len(self.sequences))))
        if len(self.ids) != len(self.sequences):
            raise ValueError("ids and sequences differ in length")
        object.__setattr__(self, "sequences", tuple(self.sequences))

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, float]]) -> "SequenceSet":
        """Group (seq_id, time) rows, keeping the order in which ids first appear."""
        grouped: dict[str, list[float]] = {}
        for seq_id, time in rows:
            grouped.setdefault(str(seq_id), []).append(float(time))
        return cls(tuple(Sequence(np.array(times)) for times in grouped.values()), tuple(grouped))

    @property
    def k(self) -> int:
        """Number of sequences."""
        return len(self.sequences)

    @property
    def lengths(self) -> np.ndarray:
        """Sequence lengths n_i."""
        return np.array([len(seq) for seq in self.sequences])

    @property
    def sums(self) -> np.ndarray:
        """Total time of each sequence."""
        return np.array([np.sum(seq.times) for seq in self.sequences])

    @property
    def log_time_sum(self) -> float:
        """Sum of log t_ij over all observations."""
        return float(np.sum([np.sum(np.log(seq.times)) for seq in self.sequences]))


@dataclass(frozen=True)
class FitResult:
    """Maximum likelihood estimate with its profile over m."""

    m_hat: int
    alpha_hat: float
    loglik: float
    profile: tuple[tuple[int, float, float], ...] = ()

    @property
    def corr_hat(self) -> float:
        """Estimated correlation between inter-arrival times."""
        return correlation_from_params(self.m_hat, self.alpha_hat)

    def to_dict(self) -> dict[str, Any]:
        """Serializable form used by the fit command."""
        return {
            "m_hat": self.m_hat,
            "alpha_hat": self.alpha_hat,
            "corr_hat": self.corr_hat,
            "loglik": self.loglik,
            "profile": [{"m": m, "alpha": a, "loglik": ll} for m, a, ll in self.profile],
        }


def _check_hyper(m: int, alpha: float) -> None:
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def joint_log_density(data: SequenceSet, m: int, alpha: float) -> float:
    """Log joint density of all sequences under the Erlang-Gamma model.

    Each sequence integrates its own rate out of prod_j Er(t_ij; m, lam).
    """
    _check_hyper(m, alpha)
    n = data.lengths
    shape = alpha + n * m
    return float(
        np.sum(special.gammaln(shape))
        - data.k * special.gammaln(alpha)
        - n.sum() * special.gammaln(m)
        + (m - 1) * data.log_time_sum
        - np.sum(shape * np.log1p(data.sums))
    )


def score_alpha(data: SequenceSet, m: int, alpha: float) -> float:
    """Derivative of ``joint_log_density`` in alpha."""
    _check_hyper(m, alpha)
    shape = alpha + data.lengths * m
    return float(np.sum(special.digamma(shape)) - data.k * special.digamma(alpha) - np.sum(np.log1p(data.sums)))


def _bracket_log_alpha(data: SequenceSet, m: int) -> tuple[float, float]:
    """Interval in log alpha whose ends have a positive and a negative score."""
    lower, upper = -1.0, 1.0
    while score_alpha(data, m, math.exp(lower)) <= 0:
        lower -= 2.0
        if lower < -40:
            raise FitFailureError(f"score stays nonpositive for small alpha at m={m}")
    while score_alpha(data, m, math.exp(upper)) >= 0:
        upper += 2.0
        if upper > 40:
            raise FitFailureError(f"score stays nonnegative for large alpha at m={m}")
    return lower, upper


def profile_loglik(data: SequenceSet, m: int) -> tuple[float, float]:
    """Maximize the log-likelihood over alpha for fixed m; return (alpha*, loglik)."""
    lower, upper = _bracket_log_alpha(data, m)
    result = optimize.minimize_scalar(
        lambda x: -joint_log_density(data, m, math.exp(x)),
        bounds=(lower, upper),
        method="bounded",
        options={"xatol": const.ALPHA_XTOL},
    )
    if not result.success or not np.isfinite(result.fun):
        raise FitFailureError(f"alpha search did not converge at m={m}: {result.message}")
    return float(math.exp(result.x)), float(-result.fun)


def fit_mle(data: SequenceSet, m_range: tuple[int, int] = const.M_RANGE) -> FitResult:
    """Profile the likelihood over integer m and maximize in alpha for each m.

    Ties in the profile go to the smaller m.
    """
    m_min, m_max = m_range
    if not 1 <= m_min <= m_max <= const.M_RANGE_LIMIT:
        raise ValueError(f"m range must lie within [1, {const.M_RANGE_LIMIT}], got {m_range}")
    profile = []
    best: tuple[int, float, float] | None = None
    for m in range(m_min, m_max + 1):
        try:
            alpha, loglik = profile_loglik(data, m)
        except FitFailureError as e:
            logger.debug(f"m={m}: {e}")
            continue
        logger.debug(f"m={m}: alpha*={alpha:.6g}, loglik={loglik:.6f}")
        profile.append((m, alpha, loglik))
        if best is None or loglik > best[2]:
            best = (m, alpha, loglik)
    if best is None:
        raise FitFailureError(f"no m in {m_range} could be fitted")
    return FitResult(best[0], best[1], best[2], tuple(profile))


def fitted_renewal_exchangeable(t: npt.ArrayLike, fit: FitResult) -> Any:
    """U(t) of the Erlang-Gamma model at the fitted (m, alpha)."""
    return erlang_gamma_mixed_renewal(t, fit.m_hat, fit.alpha_hat)


def pooled_erlang_rate(data: SequenceSet, m: int) -> float:
    """MLE of lam for i.i.d. Erlang(m, lam) on all pooled times, m N / sum t."""
    return m * int(data.lengths.sum()) / float(data.sums.sum())


def _pooled_erlang_loglik(data: SequenceSet, m: int) -> float:
    lam = pooled_erlang_rate(data, m)
    count = int(data.lengths.sum())
    return count * (m * math.log(lam) - special.gammaln(m)) + (m - 1) * data.log_time_sum - lam * data.sums.sum()


def fitted_renewal_iid(
    t: npt.ArrayLike,
    data: SequenceSet,
    m: int,
    profile_m: bool = False,
    m_range: tuple[int, int] = const.M_RANGE,
) -> Any:
    """U(t | lam_hat) for an i.i.d. Erlang fit to the pooled times.

    With ``profile_m`` the shape is chosen by the pooled likelihood over
    ``m_range`` instead of using ``m``.
    """
    if profile_m:
        m = max(range(m_range[0], m_range[1] + 1), key=lambda j: (_pooled_erlang_loglik(data, j), -j))
    return erlang_conditional_renewal(t, m, pooled_erlang_rate(data, m))


def lhd_reference_fit() -> FitResult:
    """Published estimate for the LHD hydraulic-subsystem data (raw data not bundled)."""
    return FitResult(const.LHD_M_HAT, const.LHD_ALPHA_HAT, math.nan)


@dataclass(frozen=True)
class Band:
    """Pointwise 2.5%, 50% and 97.5% percentiles of fitted curves."""

    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_curves(cls, curves: np.ndarray) -> "Band":
        """Percentiles along the replicate axis."""
        lower, median, upper = np.percentile(curves, [2.5, 50.0, 97.5], axis=0)
        return cls(lower, median, upper)

    def contains(self, values: np.ndarray) -> np.ndarray:
        """Pointwise membership of ``values`` in the band."""
        return (self.lower <= values) & (values <= self.upper)


@dataclass(frozen=True)
class StudyBands:
    """Outcome of a Monte Carlo study of the two renewal-function estimators."""

    grid: np.ndarray
    true_curve: np.ndarray
    exchangeable: Band
    iid: Band
    estimates: np.ndarray = field(repr=False)
    exchangeable_curves: np.ndarray = field(repr=False)
    iid_curves: np.ndarray = field(repr=False)
    failures: int = 0

    @property
    def coverage(self) -> float:
        """Fraction of grid points where the truth lies inside the exchangeable band."""
        return float(np.mean(self.exchangeable.contains(self.true_curve)))


def _study_replicate(
    model: ErlangGamma, lengths: tuple[int, ...], grid: np.ndarray, seed: int, r: int, m_range: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    data = SequenceSet(tuple(sample_sequences(model, list(lengths), seed, stream=(r,))))
    try:
        fit = fit_mle(data, m_range)
    except FitFailureError as e:
        logger.warning(f"replicate {r} failed: {e}")
        return None
    estimate = np.array([fit.m_hat, fit.alpha_hat, fit.corr_hat])
    return estimate, fitted_renewal_exchangeable(grid, fit), fitted_renewal_iid(grid, data, fit.m_hat)


def monte_carlo_study(
    true_model: ErlangGamma,
    lengths: list[int],
    replicates: int,
    grid: npt.ArrayLike,
    seed: int,
    m_range: tuple[int, int] = const.M_RANGE,
    workers: int = 1,
) -> StudyBands:
    """Simulate, fit and compare the exchangeable and i.i.d. renewal estimators.

    Replicate r draws its sequences from streams (seed, r, i).
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    if replicates < const.MIN_MC_REPLICATES:
        logger.warning(f"{replicates} replicates are too few for meaningful percentile bands")
    grid = np.asarray(grid, dtype=float)
    lengths_t = tuple(int(n) for n in lengths)
    args = [(true_model, lengths_t, grid, seed, r, m_range) for r in range(replicates)]
    logger.info(f"Running {replicates} study replicates for {true_model}")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_study_replicate, *zip(*args, strict=True)))
    else:
        results = [_study_replicate(*a) for a in args]
    kept = [res for res in results if res is not None]
    failures = replicates - len(kept)
    if failures > const.FIT_FAILURE_LIMIT * replicates:
        raise FitFailureError(f"{failures} of {replicates} replicate fits failed")
    if not kept:
        raise FitFailureError("every replicate fit failed")
    estimates = np.stack([res[0] for res in kept])
    exch = np.stack([res[1] for res in kept])
    iid = np.stack([res[2] for res in kept])
    true_curve = erlang_gamma_mixed_renewal(grid, true_model.m, true_model.alpha)
    return StudyBands(grid, true_curve, Band.from_curves(exch), Band.from_curves(iid), estimates, exch, iid, failures)
