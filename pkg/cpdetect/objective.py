from dataclasses import dataclass
from typing import Optional, Sequence, Tuple
import functools
import logging
import math
import numpy as np
from scipy.optimize import minimize
from .exceptions import DomainError, InvalidInputError
from .intensity import (
    ChangePointConfig, IntensityFamily, SegmentParams, _log_rate, _mean)
from .series import ExceedanceData

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hyperparams:
    """Gamma prior hyperparameters

    alpha ~ Gamma(shape=phi12, rate=phi11), beta ~ Gamma(phi22, phi21),
      gamma ~ Gamma(phi32, phi31) (GGO only).
    """
    phi11: float = 1.0
    phi12: float = 2.0
    phi21: float = 3.0
    phi22: float = 1.2
    phi31: float = 1.0
    phi32: float = 1.0

    def __post_init__(self):
        for name, val in self.__dict__.items():
            if not (np.isfinite(val) and val > 0):
                raise InvalidInputError(
                    f"hyperparameter {name} must be > 0, got {val}")

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "Hyperparams":
        """Build from (phi11, phi12, phi21, phi22[, phi31, phi32])"""
        values = [float(v) for v in values]
        if len(values) not in (4, 6):
            raise InvalidInputError(
                f"expected 4 or 6 hyperparameters, got {len(values)}")
        return cls(*values)


@dataclass(frozen=True)
class ObjectiveValue:
    """Bayesian-MDL of one chromosome, lower is better"""
    bmdl: float
    log_lik: float
    log_prior: float
    penalty: float

    @property
    def score(self) -> float:
        return self.bmdl


@dataclass(frozen=True)
class SegmentFit:
    params: Tuple[SegmentParams, ...]
    converged: Tuple[bool, ...]
    evaluations: int

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


@dataclass(frozen=True)
class FitOptions:
    """Settings of the per-segment Nelder-Mead fit (log-parameter space)

    initial : (alpha, beta) start point; initial_gamma completes it for GGO
    fatol : stop when the objective spread across the simplex is below this
    max_evaluations : objective evaluations per segment and attempt
    restart_scale : std. dev. of the log-space perturbation of the restart
    """
    initial: Tuple[float, float] = (0.1, 0.5)
    initial_gamma: float = 1.0
    fatol: float = 1e-8
    max_evaluations: int = 500
    restart_scale: float = 0.5

    def start(self, family: IntensityFamily) -> np.ndarray:
        x0 = list(self.initial)
        if family is IntensityFamily.GGO:
            x0.append(self.initial_gamma)
        return np.log(np.asarray(x0, dtype=np.float64))


def penalty_factor(family: IntensityFamily) -> int:
    """R = 2 for two-parameter families, 3 for GGO"""
    return IntensityFamily.parse(family).param_count


def _check_inputs(family, segments, config, data=None):
    family = IntensityFamily.parse(family)
    segments = tuple(segments)
    if len(segments) != config.J + 1:
        raise InvalidInputError(
            f"{len(segments)} segment parameter vectors for J={config.J}")
    for seg in segments:
        seg.check(family)
    if data is not None and data.horizon != config.horizon:
        raise InvalidInputError(
            f"configuration horizon {config.horizon} does not match data "
            f"horizon {data.horizon}")
    return family, segments


def _event_index(config: ChangePointConfig, data: ExceedanceData):
    """N at every regime bound, so regime j holds d[idx[j]:idx[j+1]]"""
    return np.searchsorted(data.event_times, config.bounds, side='right')


def _segment_loglik(family, a, b, g, lo, hi, d):
    return (_mean(family, a, b, g, np.float64(lo))
            - _mean(family, a, b, g, np.float64(hi))
            + float(np.sum(_log_rate(family, a, b, g, d))))


def _prior_kernel(family, a, b, g, hyper):
    out = ((hyper.phi12 - 1.0) * np.log(a) - hyper.phi11 * a
           + (hyper.phi22 - 1.0) * np.log(b) - hyper.phi21 * b)
    if family is IntensityFamily.GGO:
        out += (hyper.phi32 - 1.0) * np.log(g) - hyper.phi31 * g
    return out


def log_likelihood(family: IntensityFamily,
                   segments: Sequence[SegmentParams],
                   config: ChangePointConfig,
                   data: ExceedanceData) -> float:
    """Log-likelihood of a segmented NHPP

    Sum over regimes of m(tau_{j-1}|theta_j) - m(tau_j|theta_j) plus the
      log-intensities of the events d_i in (tau_{j-1}, tau_j].

    Example:
    --------
        import cpdetect as cp
        data = cp.ExceedanceData(0.0, 10, [3, 7])
        cfg = cp.ChangePointConfig((), 10)
        cp.log_likelihood("W", [cp.SegmentParams(1, 2)], cfg, data)
    """
    family, segments = _check_inputs(family, segments, config, data)
    bounds = config.bounds
    idx = _event_index(config, data)
    d = data.event_times.astype(np.float64)
    total = 0.0
    with np.errstate(divide='ignore', over='ignore'):
        for j, seg in enumerate(segments):
            total += _segment_loglik(
                family, seg.alpha, seg.beta, seg.gamma,
                bounds[j], bounds[j + 1], d[idx[j]:idx[j + 1]])
    return float(total)


def log_prior(family: IntensityFamily,
              segments: Sequence[SegmentParams],
              config: ChangePointConfig,
              hyper: Hyperparams,
              T: Optional[int] = None) -> float:
    """Log-prior up to constants: Gamma kernels per regime and a uniform
        prior on each change-point, -J ln(T-1)"""
    family, segments = _check_inputs(family, segments, config)
    T = config.horizon if T is None else int(T)
    if T < 2:
        raise DomainError(f"T must be >= 2, got {T}")
    total = 0.0
    for seg in segments:
        if min(seg.as_vector()) <= 0:
            raise DomainError(f"nonpositive parameter in {seg}")
        total += _prior_kernel(family, seg.alpha, seg.beta, seg.gamma, hyper)
    return float(total - config.J * math.log(T - 1))


def penalty(config: ChangePointConfig, R: int) -> float:
    """MDL penalty of a change-point configuration

    R * sum_j ln(tau_j - tau_{j-1}) / 2 + ln(J) + sum_{j>=2} ln(tau_j), with
      tau_0 = 0 and tau_{J+1} = T. J = 0 gives R ln(T) / 2.
    """
    if R not in (2, 3):
        raise InvalidInputError(f"R must be 2 or 3, got {R}")
    if config.J == 0:
        return R * math.log(config.horizon) / 2.0
    widths = np.diff(config.bounds).astype(np.float64)
    return float(R * np.sum(np.log(widths)) / 2.0
                 + math.log(config.J)
                 + np.sum(np.log(np.asarray(config.tau[1:], dtype=float))))


def bayesian_mdl(family: IntensityFamily,
                 segments: Sequence[SegmentParams],
                 config: ChangePointConfig,
                 data: ExceedanceData,
                 hyper: Hyperparams = Hyperparams()) -> ObjectiveValue:
    """Bayesian-MDL = penalty - log-likelihood - log-prior"""
    family = IntensityFamily.parse(family)
    ll = log_likelihood(family, segments, config, data)
    lp = log_prior(family, segments, config, hyper, data.horizon)
    pen = penalty(config, penalty_factor(family))
    return ObjectiveValue(
        bmdl=pen - ll - lp, log_lik=ll, log_prior=lp, penalty=pen)


def expanded_bmdl(family: IntensityFamily,
                  segments: Sequence[SegmentParams],
                  config: ChangePointConfig,
                  data: ExceedanceData,
                  hyper: Hyperparams = Hyperparams()) -> float:
    """Bayesian-MDL written out per family from per-regime sums

    Independent of `log_likelihood`/`log_prior`/`penalty`; the two paths
      must agree.
    """
    family, segments = _check_inputs(family, segments, config, data)
    tau = [float(x) for x in config.bounds]
    T = float(config.horizon)
    J = config.J
    R = family.param_count
    d = data.event_times.astype(np.float64)
    idx = _event_index(config, data)

    # penalty
    if J == 0:
        out = R * math.log(T) / 2.0
    else:
        out = R * sum(math.log(tau[i] - tau[i - 1])
                      for i in range(1, J + 2)) / 2.0
        out += math.log(J) + sum(math.log(tau[i]) for i in range(2, J + 1))

    for j, seg in enumerate(segments, start=1):
        a, b, g = seg.alpha, seg.beta, seg.gamma
        lo, hi = tau[j - 1], tau[j]
        dj = d[idx[j - 1]:idx[j]]
        n = float(dj.size)
        # minus the log-likelihood of regime j
        if family is IntensityFamily.W:
            out -= ((lo ** a - hi ** a) / b ** a
                    + n * (math.log(a) - a * math.log(b))
                    + (a - 1.0) * float(np.sum(np.log(dj))))
        elif family is IntensityFamily.MO:
            out -= (b * (math.log(a + lo) - math.log(a + hi))
                    + n * math.log(b)
                    - float(np.sum(np.log(a + dj))))
        elif family is IntensityFamily.GO:
            out -= (a * (math.exp(-b * hi) - math.exp(-b * lo))
                    + n * math.log(a * b)
                    - b * float(np.sum(dj)))
        else:
            out -= (a * (math.exp(-b * hi ** g) - math.exp(-b * lo ** g))
                    + n * math.log(a * b * g)
                    + (g - 1.0) * float(np.sum(np.log(dj)))
                    - b * float(np.sum(dj ** g)))
        # minus the log-prior of regime j
        out -= ((hyper.phi12 - 1.0) * math.log(a) - hyper.phi11 * a
                + (hyper.phi22 - 1.0) * math.log(b) - hyper.phi21 * b)
        if family is IntensityFamily.GGO:
            out -= (hyper.phi32 - 1.0) * math.log(g) - hyper.phi31 * g

    return out + J * math.log(T - 1.0)


def _segment_objective(x, family, lo, hi, d, hyper):
    with np.errstate(all='ignore'):
        theta = np.exp(x)
        g = theta[2] if family is IntensityFamily.GGO else None
        val = -(_segment_loglik(family, theta[0], theta[1], g, lo, hi, d)
                + _prior_kernel(family, theta[0], theta[1], g, hyper))
    return float(val) if np.isfinite(val) else np.inf


def _nelder_mead(fun, x0, opts: FitOptions):
    return minimize(
        fun, x0, method='Nelder-Mead',
        options={'fatol': opts.fatol, 'xatol': np.inf,
                 'maxfev': opts.max_evaluations,
                 'maxiter': opts.max_evaluations})


def fit_segments(family: IntensityFamily,
                 config: ChangePointConfig,
                 data: ExceedanceData,
                 hyper: Hyperparams = Hyperparams(),
                 opts: FitOptions = FitOptions(),
                 rng: Optional[np.random.Generator] = None
                 ) -> Tuple[SegmentFit, ObjectiveValue]:
    """MAP fit of the regime parameters for a fixed configuration

    The objective is additive over regimes once tau is fixed, so each regime
      is fitted on its own with Nelder-Mead in log-parameter space. A regime
      that does not converge gets one restart from a perturbed point drawn
      from `rng`.

    Parameters:
    -----------
    family : IntensityFamily
        One of W, MO, GO, GGO

    config : ChangePointConfig
        The chromosome (J, tau)

    data : ExceedanceData
        Event times with the same horizon as `config`

    hyper : Hyperparams
        Gamma prior hyperparameters

    opts : FitOptions
        Start point and tolerances

    rng : np.random.Generator
        Stream for restart perturbations (default: seed 0)

    Returns:
    --------
    SegmentFit
        Fitted parameters, per-regime convergence flags, evaluation count

    ObjectiveValue
        Bayesian-MDL of the chromosome at the fitted parameters
    """
    family = IntensityFamily.parse(family)
    if data.horizon != config.horizon:
        raise InvalidInputError(
            f"configuration horizon {config.horizon} does not match data "
            f"horizon {data.horizon}")
    if rng is None:
        rng = np.random.default_rng(0)
    bounds = config.bounds
    idx = _event_index(config, data)
    d = data.event_times.astype(np.float64)
    x0 = opts.start(family)

    params, converged, evaluations = [], [], 0
    for j in range(config.J + 1):
        fun = functools.partial(
            _segment_objective, family=family,
            lo=float(bounds[j]), hi=float(bounds[j + 1]),
            d=d[idx[j]:idx[j + 1]], hyper=hyper)
        res = _nelder_mead(fun, x0, opts)
        evaluations += int(res.nfev)
        ok = bool(res.success)
        if not ok:
            logger.debug("regime %d of %s did not converge (%s), restarting",
                         j + 1, config.tau, res.message)
            x1 = res.x + rng.normal(0.0, opts.restart_scale, size=res.x.size)
            res2 = _nelder_mead(fun, x1, opts)
            evaluations += int(res2.nfev)
            # a converged restart wins ties within the stopping tolerance
            if res2.fun <= res.fun or (
                    res2.success and res2.fun <= res.fun + opts.fatol):
                res = res2
            ok = bool(res.success)
        theta = np.exp(np.clip(res.x, -700.0, 700.0))
        params.append(SegmentParams.from_vector(theta))
        converged.append(ok)

    fit = SegmentFit(tuple(params), tuple(converged), evaluations)
    return fit, bayesian_mdl(family, fit.params, config, data, hyper)
