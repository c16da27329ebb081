from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple
import json
import logging
import math
import numpy as np
import pandas as pd
from scipy.stats import poisson
from .baselines import (
    CusumConfig, PeltConfig, cusum, pelt, run_freq_mdl_ga)
from .exceptions import InvalidInputError
from .genetic import GAConfig, GAHistory, run_ga
from .intensity import (
    ChangePointConfig, IntensityFamily, SegmentParams, SegmentedModel,
    intensity, segmented_mean)
from .objective import Hyperparams, ObjectiveValue
from .series import (
    ExceedanceData, MeasurementSeries, atomic_write, extract_exceedances)

logger = logging.getLogger(__name__)

SPEC_VERSION = "1.0"
METHODS = ("ga", "pelt", "cusum", "freqmdl")


def confidence_bands(m_values: Sequence[float]
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise 95% bands of a Poisson count with mean m

    Exact 2.5% and 97.5% quantiles, widened where needed so that
      lower <= m <= upper. m = 0 gives (0, 0).

    Example:
    --------
        cp.confidence_bands([0.0, 100.0])  # ([0, 81], [0, 120])
    """
    m = np.asarray(m_values, dtype=np.float64)
    if not np.isfinite(m).all():
        raise InvalidInputError("fitted means must be finite")
    if (m < 0).any():
        raise InvalidInputError("fitted means must be >= 0")
    lower = np.zeros_like(m)
    upper = np.zeros_like(m)
    pos = m > 0
    lower[pos] = poisson.ppf(0.025, m[pos])
    upper[pos] = poisson.ppf(0.975, m[pos])
    return np.minimum(lower, m), np.maximum(upper, m)


def regime_rate_summary(model: SegmentedModel
                        ) -> List[Tuple[float, float, float]]:
    """(min, mean, max) of the fitted intensity on each regime's time grid

    Regime j is evaluated at tau_{j-1} + 1..tau_j.
    """
    bounds = model.config.bounds
    out = []
    for j, seg in enumerate(model.segments):
        grid = np.arange(max(int(bounds[j]) + 1, 1), int(bounds[j + 1]) + 1)
        rate = np.atleast_1d(intensity(model.family, seg, grid))
        out.append((float(rate.min()), float(rate.mean()),
                    float(rate.max())))
    return out


def regime_means(series: MeasurementSeries,
                 config: ChangePointConfig) -> List[float]:
    """Sample mean of the measurements in each regime"""
    if series.horizon != config.horizon:
        raise InvalidInputError(
            f"configuration horizon {config.horizon} does not match series "
            f"length {series.horizon}")
    bounds = config.bounds
    return [float(np.mean(series.values[bounds[j]:bounds[j + 1]]))
            for j in range(config.J + 1)]


@dataclass(frozen=True, eq=False)
class DetectionResult:
    """Everything a detection run reports

    `t` runs over 0..T with the observed counts N_t, the fitted mean
      m(t) and its Poisson bands.
    """
    family: IntensityFamily
    threshold: float
    n_events: int
    config: ChangePointConfig
    segments: Tuple[SegmentParams, ...]
    objective: ObjectiveValue
    converged: bool
    best_generation: int
    bmdl_trace: Tuple[float, ...]
    j_trace: Tuple[int, ...]
    cp_frequency: Dict[int, int]
    t: np.ndarray
    observed: np.ndarray
    m_fit: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    regime_rates: Tuple[Tuple[float, float, float], ...]
    regime_means: Tuple[float, ...]
    values: np.ndarray
    ga: Optional[GAConfig] = None
    hyper: Optional[Hyperparams] = None
    source: Optional[str] = None

    @property
    def bmdl(self) -> float:
        return self.objective.bmdl

    @property
    def model(self) -> SegmentedModel:
        return SegmentedModel(self.family, self.config, self.segments)


def build_detection_result(series: MeasurementSeries,
                           data: ExceedanceData,
                           family: IntensityFamily,
                           history: GAHistory,
                           hyper: Optional[Hyperparams] = None,
                           cfg: Optional[GAConfig] = None,
                           source: Optional[str] = None
                           ) -> DetectionResult:
    """Assemble the report of a finished `run_ga`"""
    family = IntensityFamily.parse(family)
    fit = history.best_fit
    model = SegmentedModel(family, history.best_config, fit.params)
    t = np.arange(data.horizon + 1)
    m_fit = np.asarray(segmented_mean(model, t), dtype=np.float64)
    lower, upper = confidence_bands(m_fit)
    return DetectionResult(
        family=family,
        threshold=data.threshold,
        n_events=data.n,
        config=history.best_config,
        segments=fit.params,
        objective=history.best_objective,
        converged=fit.all_converged,
        best_generation=history.best_generation,
        bmdl_trace=tuple(history.bmdl_trace),
        j_trace=tuple(history.j_trace),
        cp_frequency=dict(sorted(history.cp_frequency.items())),
        t=t,
        observed=data.cumulative(t),
        m_fit=m_fit,
        lower=lower,
        upper=upper,
        regime_rates=tuple(regime_rate_summary(model)),
        regime_means=tuple(regime_means(series, history.best_config)),
        values=series.values,
        ga=cfg,
        hyper=hyper,
        source=source)


def detect(series: MeasurementSeries,
           threshold: float,
           family: IntensityFamily,
           hyper: Hyperparams = Hyperparams(),
           cfg: GAConfig = GAConfig(),
           workers: int = 1,
           source: Optional[str] = None) -> DetectionResult:
    """Threshold the series, run the GA and build the report"""
    data = extract_exceedances(series, threshold)
    logger.info("%d exceedances of %g in %d observations",
                data.n, data.threshold, data.horizon)
    history = run_ga(data, family, hyper, cfg, workers)
    return build_detection_result(
        series, data, family, history, hyper, cfg, source)


def _finite(x) -> Optional[float]:
    x = float(x)
    return x if math.isfinite(x) else None


def _segment_dict(seg: SegmentParams) -> dict:
    out = {"alpha": seg.alpha, "beta": seg.beta}
    if seg.gamma is not None:
        out["gamma"] = seg.gamma
    return out


def detection_to_dict(result: DetectionResult) -> dict:
    """JSON-ready dict with the keys spec_version, input, config, best,
        trace, frequency, fit and regimes"""
    bounds = result.config.bounds
    regimes = []
    for j, (rates, mean) in enumerate(
            zip(result.regime_rates, result.regime_means)):
        regimes.append({
            "start": int(bounds[j]) + 1,
            "end": int(bounds[j + 1]),
            "rate_min": rates[0],
            "rate_mean": rates[1],
            "rate_max": rates[2],
            "mean_value": mean})
    return {
        "spec_version": SPEC_VERSION,
        "input": {
            "source": result.source,
            "horizon": result.config.horizon,
            "threshold": result.threshold,
            "n_events": result.n_events},
        "config": {
            "family": result.family.long_name,
            "ga": None if result.ga is None else {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in asdict(result.ga).items()},
            "hyper": None if result.hyper is None else asdict(result.hyper)},
        "best": {
            "tau": list(result.config.tau),
            "J": result.config.J,
            "segments": [_segment_dict(s) for s in result.segments],
            "bmdl": _finite(result.objective.bmdl),
            "log_lik": _finite(result.objective.log_lik),
            "log_prior": _finite(result.objective.log_prior),
            "penalty": _finite(result.objective.penalty),
            "generation": result.best_generation,
            "converged": result.converged},
        "trace": {
            "bmdl": [_finite(v) for v in result.bmdl_trace],
            "J": list(result.j_trace)},
        "frequency": [{"t": int(t), "count": int(c)}
                      for t, c in sorted(result.cp_frequency.items())],
        "fit": {
            "t": result.t.tolist(),
            "observed": result.observed.tolist(),
            "m": result.m_fit.tolist(),
            "lower": result.lower.tolist(),
            "upper": result.upper.tolist()},
        "regimes": regimes,
    }


def dumps_json(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, no NaN/Inf"""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path: str):
    atomic_write(path, dumps_json(obj))


def plot_frame(result: DetectionResult) -> pd.DataFrame:
    """Tidy table (panel, t, series, value) of the four result panels

    - fit: observed N_t, fitted m(t) and the lower/upper band
    - trace: best and running-best objective per generation
    - frequency: change-point counts over the per-generation bests
    - regimes: the measurements and their regime means
    """
    parts = []

    def add(panel, t, series, value):
        parts.append(pd.DataFrame({
            "panel": panel, "t": np.asarray(t, dtype=np.int64),
            "series": series, "value": np.asarray(value, dtype=np.float64)}))

    add("fit", result.t, "observed", result.observed)
    add("fit", result.t, "fitted", result.m_fit)
    add("fit", result.t, "lower", result.lower)
    add("fit", result.t, "upper", result.upper)
    trace = np.asarray(result.bmdl_trace, dtype=np.float64)
    finite = np.isfinite(trace)
    gens = np.arange(trace.size)
    add("trace", gens[finite], "bmdl", trace[finite])
    running = np.minimum.accumulate(trace) if trace.size else trace
    add("trace", gens[np.isfinite(running)], "running_best",
        running[np.isfinite(running)])
    freq = sorted(result.cp_frequency.items())
    add("frequency", [t for t, _ in freq], "count", [c for _, c in freq])
    T = result.values.size
    bounds = result.config.bounds
    step = np.repeat(result.regime_means, np.diff(bounds))
    add("regimes", np.arange(1, T + 1), "value", result.values)
    add("regimes", np.arange(1, T + 1), "regime_mean", step)
    return pd.concat(parts, ignore_index=True)


def write_plot_csv(result: DetectionResult, path: str):
    text = plot_frame(result).to_csv(index=False, float_format="%.17g")
    atomic_write(path, text)


def compare_methods(series: MeasurementSeries,
                    methods: Sequence[str] = METHODS,
                    threshold: Optional[float] = None,
                    family: IntensityFamily = IntensityFamily.W,
                    hyper: Hyperparams = Hyperparams(),
                    cfg: GAConfig = GAConfig(),
                    pelt_cfg: PeltConfig = PeltConfig(),
                    cusum_cfg: CusumConfig = CusumConfig(),
                    workers: int = 1) -> Dict[str, dict]:
    """Run several detectors on one series, keyed by method name"""
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise InvalidInputError(
            f"unknown method(s) {unknown}, expected a subset of {METHODS}")
    out = {}
    for method in methods:
        logger.info("running %s", method)
        if method == "ga":
            thr = float(np.mean(series.values)) if threshold is None \
                else threshold
            res = detect(series, thr, family, hyper, cfg, workers)
            out[method] = {
                "change_points": list(res.config.tau),
                "bmdl": _finite(res.bmdl),
                "threshold": thr,
                "family": res.family.long_name}
        elif method == "pelt":
            out[method] = {
                "change_points": pelt(series, pelt_cfg),
                "cost": pelt_cfg.cost,
                "penalty": pelt_cfg.beta(series.horizon)}
        elif method == "cusum":
            res = cusum(series, cusum_cfg)
            out[method] = {
                "change_points": res.change_points,
                "alarms": int(res.alarms.size),
                "first_alarm": (int(res.alarms[0]) if res.alarms.size
                                else None),
                "mu0": res.config.mu0, "sigma": res.config.sigma,
                "K": res.config.K, "H": res.config.H}
        else:
            hist = run_freq_mdl_ga(series, cfg, workers)
            out[method] = {
                "change_points": list(hist.best_config.tau),
                "mdl": _finite(hist.best_value)}
    return out
