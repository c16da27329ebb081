from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math
import sys
import numba
import numpy as np
from .exceptions import DomainError, InvalidInputError
from .genetic import Evaluation, GAConfig, GAHistory, evolve
from .intensity import ChangePointConfig
from .series import MeasurementSeries, _as_series

logger = logging.getLogger(__name__)

PELT_COSTS = ("log", "raw")


@dataclass(frozen=True)
class PeltConfig:
    """Settings of the penalised Gaussian segmentation

    penalty : beta per change-point, None means 2 ln(T)
    K : pruning constant, 0 is exact for the Gaussian likelihood cost
    cost : "log" works on ln(y), "raw" on y
    """
    penalty: Optional[float] = None
    K: float = 0.0
    cost: str = "log"

    def __post_init__(self):
        if self.penalty is not None and not float(self.penalty) >= 0:
            raise InvalidInputError(
                f"penalty must be >= 0, got {self.penalty}")
        if not float(self.K) >= 0:
            raise InvalidInputError(f"K must be >= 0, got {self.K}")
        if self.cost not in PELT_COSTS:
            raise InvalidInputError(
                f"cost must be one of {PELT_COSTS}, got '{self.cost}'")

    def beta(self, T: int) -> float:
        return 2.0 * math.log(T) if self.penalty is None else self.penalty


@numba.njit(nogil=True)
def _gauss_cost(csum, csum2, t, s, sigma2):
    n = s - t
    total = csum[s] - csum[t]
    sse = max(0.0, (csum2[s] - csum2[t]) - total * total / n)
    return n * math.log(2.0 * math.pi * sigma2) + sse / sigma2


@numba.njit(nogil=True)
def _pelt_kernel(csum, csum2, sigma2, beta, K, prune):
    n = csum.size - 1
    F = np.empty(n + 1)
    F[0] = -beta
    last = np.zeros(n + 1, dtype=np.int64)
    cand = np.empty(n + 1, dtype=np.int64)
    vals = np.empty(n + 1)
    cand[0] = 0
    ncand = 1
    for s in range(1, n + 1):
        best = np.inf
        arg = 0
        for i in range(ncand):
            t = cand[i]
            vals[i] = F[t] + _gauss_cost(csum, csum2, t, s, sigma2)
            if vals[i] + beta < best:
                best = vals[i] + beta
                arg = t
        F[s] = best
        last[s] = arg
        if prune:
            kept = 0
            for i in range(ncand):
                if vals[i] + K <= best:
                    cand[kept] = cand[i]
                    kept += 1
            ncand = kept
        cand[ncand] = s
        ncand += 1
    return F, last


def _segment_input(series, cost: str) -> np.ndarray:
    y = _as_series(series).values
    if cost == "log":
        if (y <= 0).any():
            raise InvalidInputError(
                "the log cost needs strictly positive values")
        y = np.log(y)
    return y


def _backtrack(last: np.ndarray) -> List[int]:
    out = []
    s = last.size - 1
    while s > 0:
        s = int(last[s])
        if s > 0:
            out.append(s)
    return out[::-1]


def _partition(series, cfg: PeltConfig, prune: bool) -> List[int]:
    y = _segment_input(series, cfg.cost)
    # centring keeps the cumulative sums exact on constant stretches
    y = y - np.median(y)
    sigma2 = max(float(np.mean(np.diff(y) ** 2)) / 2.0,
                 np.finfo(np.float64).eps)
    csum = np.concatenate(([0.0], np.cumsum(y)))
    csum2 = np.concatenate(([0.0], np.cumsum(y * y)))
    _, last = _pelt_kernel(csum, csum2, sigma2, float(cfg.beta(y.size)),
                           float(cfg.K), prune)
    return _backtrack(last)


def pelt(series: Union[MeasurementSeries, Sequence[float]],
         cfg: PeltConfig = PeltConfig()) -> List[int]:
    """Penalised Gaussian segmentation with pruning

    Minimises the sum of segment costs plus beta per change-point through
      F(s) = min_t F(t) + C(y_{t+1..s}) + beta with F(0) = -beta. C is twice
      the negative Gaussian log-likelihood with the segment mean and one
      global variance, estimated as mean(diff(y)**2) / 2. A candidate t is
      dropped once F(t) + C(y_{t+1..s}) + K > F(s).

    Parameters:
    -----------
    series : MeasurementSeries
        The measurements y_1..y_T

    cfg : PeltConfig
        Penalty, pruning constant and cost

    Returns:
    --------
    List[int]
        Change-points tau (last index of each regime but the final one)

    Example:
    --------
        import cpdetect as cp
        cp.pelt([0.0] * 10 + [10.0] * 10, cp.PeltConfig(cost="raw"))
        # [10]
    """
    out = _partition(series, cfg, True)
    logger.debug("pelt found %d change-points", len(out))
    return out


def optimal_partitioning(series: Union[MeasurementSeries, Sequence[float]],
                         cfg: PeltConfig = PeltConfig()) -> List[int]:
    """`pelt` without pruning, quadratic in T"""
    return _partition(series, cfg, False)


def slack_from_shift(shift: float, sigma: float) -> float:
    """Reference value K for detecting a mean shift of `shift` sigmas"""
    return float(shift) * float(sigma) / 2.0


@dataclass(frozen=True)
class CusumConfig:
    """Tabular CUSUM settings; None fields are estimated from the series

    mu0 : target mean, default the series mean
    sigma : default sqrt(sum((y - mu0)**2) / (T - 1))
    K : slack, default slack_from_shift(shift, sigma)
    H : decision interval, default 5 sigma
    shift : mean shift to detect in sigmas, only used when K is None
    reference : number of leading in-control observations mu0 and sigma
        are estimated from, default the whole series
    """
    mu0: Optional[float] = None
    sigma: Optional[float] = None
    K: Optional[float] = None
    H: Optional[float] = None
    shift: float = 1.0
    reference: Optional[int] = None

    def __post_init__(self):
        if self.reference is not None and not int(self.reference) >= 2:
            raise InvalidInputError(
                f"reference must be >= 2, got {self.reference}")
        if not float(self.shift) >= 0:
            raise InvalidInputError(f"shift must be >= 0, got {self.shift}")
        if self.sigma is not None and not float(self.sigma) > 0:
            raise InvalidInputError(f"sigma must be > 0, got {self.sigma}")
        if self.H is not None and not float(self.H) > 0:
            raise InvalidInputError(f"H must be > 0, got {self.H}")
        if self.K is not None and not float(self.K) >= 0:
            raise InvalidInputError(f"K must be >= 0, got {self.K}")

    def resolve(self, y: np.ndarray) -> "CusumConfig":
        if self.reference is not None and self.reference > y.size:
            raise InvalidInputError(
                f"reference window {self.reference} exceeds the series "
                f"length {y.size}")
        ref = y if self.reference is None else y[:int(self.reference)]
        mu0 = float(np.mean(ref)) if self.mu0 is None else float(self.mu0)
        sigma = self.sigma
        if sigma is None:
            sigma = math.sqrt(
                float(np.sum((ref - mu0) ** 2)) / (ref.size - 1))
            if sigma <= 0:
                raise InvalidInputError(
                    "cannot estimate sigma of a constant series")
        K = slack_from_shift(self.shift, sigma) if self.K is None else self.K
        H = 5.0 * sigma if self.H is None else self.H
        return CusumConfig(mu0=mu0, sigma=float(sigma), K=float(K),
                           H=float(H), shift=self.shift,
                           reference=self.reference)


@dataclass(frozen=True, eq=False)
class CusumResult:
    c_plus: np.ndarray
    c_minus: np.ndarray
    alarms: np.ndarray
    change_points: List[int]
    config: CusumConfig


@numba.njit(nogil=True)
def _cusum_kernel(y, mu0, K):
    n = y.size
    c_plus = np.zeros(n)
    c_minus = np.zeros(n)
    up = 0.0
    down = 0.0
    for t in range(n):
        up = max(0.0, y[t] - (mu0 + K) + up)
        down = max(0.0, (mu0 - K) - y[t] + down)
        c_plus[t] = up
        c_minus[t] = down
    return c_plus, c_minus


def _alarm_change_points(c_plus, c_minus, H) -> List[int]:
    """Map each run of consecutive alarms to the last time (1-based) its
        triggering statistic was zero

    A statistic that has been positive since the first observation maps to
    0, the start of the series.
    """
    alarm = (c_plus > H) | (c_minus > H)
    out = []
    t = 0
    while t < alarm.size:
        if not alarm[t]:
            t += 1
            continue
        stat = c_plus if c_plus[t] > H else c_minus
        zeros = np.flatnonzero(stat[:t] == 0.0)
        cp = int(zeros[-1]) + 1 if zeros.size > 0 else 0
        if not out or out[-1] != cp:
            out.append(cp)
        while t < alarm.size and alarm[t]:
            t += 1
    return out


def cusum(series: Union[MeasurementSeries, Sequence[float]],
          cfg: CusumConfig = CusumConfig()) -> CusumResult:
    """Two-sided tabular CUSUM

    C+_t = max(0, y_t - (mu0 + K) + C+_{t-1}) and
      C-_t = max(0, (mu0 - K) - y_t + C-_{t-1}) start at 0 and are never
      reset. Time t (1-based) alarms when either exceeds H.

    Example:
    --------
        import cpdetect as cp
        res = cp.cusum([0.0] * 5 + [4.0] * 5, cp.CusumConfig(
            mu0=0.0, sigma=1.0, K=2.0, H=3.0))
        res.alarms  # array([7, 8, 9, 10])
    """
    y = _as_series(series).values
    cfg = cfg.resolve(y)
    c_plus, c_minus = _cusum_kernel(y, cfg.mu0, cfg.K)
    alarms = np.flatnonzero((c_plus > cfg.H) | (c_minus > cfg.H)) + 1
    cps = _alarm_change_points(c_plus, c_minus, cfg.H)
    logger.debug("cusum: %d alarms, %d change-points", alarms.size,
                 len(cps))
    return CusumResult(c_plus, c_minus, alarms, cps, cfg)


def lognormal_mle(values: Sequence[float]) -> Tuple[float, float]:
    """(mu_hat, sigma2_hat) of a log-normal sample

    Example:
    --------
        cp.lognormal_mle([math.e, math.e ** 3])  # (2.0, 1.0)
    """
    y = np.asarray(values, dtype=np.float64).ravel()
    if y.size == 0:
        raise InvalidInputError("empty sample")
    if (y <= 0).any():
        raise DomainError("log-normal samples must be > 0")
    x = np.log(y)
    mu = float(np.mean(x))
    return mu, float(np.mean((x - mu) ** 2))


@dataclass(frozen=True)
class FreqMdlValue:
    """Frequentist MDL of a log-normal mean-shift segmentation

    mdl = fit_term + length_term + count_term + location_term with
      fit_term = T/2 ln(pooled_sigma2),
      length_term = sum_j ln(tau_j - tau_{j-1}) / 2,
      count_term = ln(J) and location_term = sum_{j>=2} ln(tau_j).
    A numerically exact fit sets `degenerate` and replaces fit_term by
      -sys.float_info.max.
    """
    mdl: float
    mu_hat: Tuple[float, ...]
    sigma2_hat: Tuple[float, ...]
    pooled_sigma2: float
    fit_term: float
    length_term: float
    count_term: float
    location_term: float
    degenerate: bool = False

    @property
    def score(self) -> float:
        return self.mdl


def freq_mdl(series: Union[MeasurementSeries, Sequence[float]],
             config: ChangePointConfig) -> FreqMdlValue:
    """MDL of a change-point configuration for log-normal data

    Means are estimated per regime, the variance is pooled over all
      regime-centred log residuals.
    """
    y = _as_series(series).values
    if config.horizon != y.size:
        raise InvalidInputError(
            f"configuration horizon {config.horizon} does not match series "
            f"length {y.size}")
    if config.J == 0:
        raise InvalidInputError("the MDL criterion needs J >= 1")
    bounds = config.bounds
    mu_hat, s2_hat, sse = [], [], 0.0
    for j in range(config.J + 1):
        mu, s2 = lognormal_mle(y[bounds[j]:bounds[j + 1]])
        mu_hat.append(mu)
        s2_hat.append(s2)
        sse += s2 * (bounds[j + 1] - bounds[j])
    T = config.horizon
    pooled = sse / T
    x = np.log(y)
    degenerate = pooled <= 1e-24 * max(1.0, float(np.mean(x * x)))
    fit_term = (-sys.float_info.max if degenerate
                else T / 2.0 * math.log(pooled))
    length_term = float(np.sum(np.log(np.diff(bounds)))) / 2.0
    count_term = math.log(config.J)
    location_term = float(np.sum(np.log(np.asarray(config.tau[1:],
                                                   dtype=float))))
    return FreqMdlValue(
        mdl=fit_term + length_term + count_term + location_term,
        mu_hat=tuple(mu_hat), sigma2_hat=tuple(s2_hat),
        pooled_sigma2=pooled, fit_term=fit_term, length_term=length_term,
        count_term=count_term, location_term=location_term,
        degenerate=bool(degenerate))


def run_freq_mdl_ga(series: Union[MeasurementSeries, Sequence[float]],
                    cfg: GAConfig = GAConfig(),
                    workers: int = 1) -> GAHistory:
    """Genetic search with `freq_mdl` as fitness; J = 0 scores +inf"""
    series = _as_series(series)
    if (series.values <= 0).any():
        raise DomainError("log-normal data must be > 0")

    def fitness(config, rng):
        if config.J == 0:
            return Evaluation(np.inf, None)
        value = freq_mdl(series, config)
        return Evaluation(value.mdl, value)

    return evolve(series.horizon, fitness, cfg, workers)
