from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
import logging
import numpy as np
from scipy.stats import norm
from .exceptions import InvalidInputError
from .series import MeasurementSeries

logger = logging.getLogger(__name__)

SIM_HORIZON = 1096
SIM_SIGMA = 0.32


@dataclass(frozen=True)
class RegimeSpec:
    """A log-normal regime, ln(y) ~ Normal(mu, sigma**2), of `length` draws"""
    mu: float
    sigma: float
    length: int

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise InvalidInputError(f"mu must be finite, got {self.mu}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidInputError(f"sigma must be > 0, got {self.sigma}")
        if int(self.length) < 1:
            raise InvalidInputError(
                f"length must be >= 1, got {self.length}")


@dataclass(frozen=True)
class SimulationSetting:
    name: str
    regimes: Tuple[RegimeSpec, ...]
    seed: int = 0
    description: str = ""

    def __post_init__(self):
        regimes = tuple(self.regimes)
        if len(regimes) == 0:
            raise InvalidInputError("a setting needs at least one regime")
        object.__setattr__(self, "regimes", regimes)

    @property
    def horizon(self) -> int:
        return int(sum(r.length for r in self.regimes))

    @property
    def change_points(self) -> List[int]:
        """Last time of every regime but the final one"""
        return np.cumsum([r.length for r in self.regimes])[:-1].tolist()


def setting_from_change_points(name: str, change_points: Sequence[int],
                               mu: Sequence[float], T: int,
                               sigma: float = SIM_SIGMA, seed: int = 0,
                               description: str = "") -> SimulationSetting:
    """Build a setting from change-point locations and per-regime means"""
    bounds = [0] + [int(t) for t in change_points] + [int(T)]
    if len(mu) != len(bounds) - 1:
        raise InvalidInputError(
            f"{len(mu)} regime means for {len(bounds) - 1} regimes")
    if any(b <= a for a, b in zip(bounds[:-1], bounds[1:])):
        raise InvalidInputError(
            f"change-points must increase strictly within (0, {T})")
    regimes = tuple(RegimeSpec(float(m), sigma, b - a)
                    for m, a, b in zip(mu, bounds[:-1], bounds[1:]))
    return SimulationSetting(name, regimes, seed, description)


def gen_lognormal_series(setting: SimulationSetting,
                         rng: Union[np.random.Generator, int, None] = None
                         ) -> MeasurementSeries:
    """Draw a piecewise log-normal series

    Normal variates are obtained by inversion: PCG64 uniforms from
      `rng.random` are mapped through the standard normal quantile function,
      scaled to each regime and exponentiated. Draw t depends only on the
      t-th uniform of the stream.

    Parameters:
    -----------
    setting : SimulationSetting
        Regimes in time order

    rng : np.random.Generator or int
        Generator or seed, default `setting.seed`

    Example:
    --------
        import cpdetect as cp
        series = cp.gen_lognormal_series(cp.get_setting("2cp"), rng=7)
    """
    rng = np.random.default_rng(setting.seed if rng is None else rng)
    mu = np.repeat([r.mu for r in setting.regimes],
                   [r.length for r in setting.regimes])
    sigma = np.repeat([r.sigma for r in setting.regimes],
                      [r.length for r in setting.regimes])
    logger.debug("simulating '%s' with T=%d", setting.name, mu.size)
    z = norm.ppf(rng.random(mu.size))
    return MeasurementSeries(np.exp(mu + sigma * z))


def _stepped(name, change_points, description):
    mu = [3.5 + 0.5 * j for j in range(len(change_points) + 1)]
    return setting_from_change_points(
        name, change_points, mu, SIM_HORIZON, description=description)


def _random_means(name, change_points, seed, description):
    gen = np.random.default_rng(seed)
    mu = gen.uniform(0.5, 6.0, size=len(change_points) + 1).tolist()
    return setting_from_change_points(
        name, change_points, mu, SIM_HORIZON, seed=seed,
        description=description)


J10 = [101, 201, 301, 401, 501, 597, 697, 797, 897, 997]
J20 = [53, 105, 157, 209, 261, 313, 365, 417, 469, 525, 576, 629, 681, 731,
       785, 837, 889, 941, 993, 1045]
J50 = [22 + 21 * k for k in range(50)]


def preset_settings() -> List[SimulationSetting]:
    """The bundled experiments, T = 1096 and sigma = 0.32 throughout

    - 1cp, 2cp, 3cp: mu = 3.5, 4.0, 4.5, 5.0 in successive regimes
    - J10, J20, J50: mu uniform in [0.5, 6], fixed by the setting's seed
    """
    return [
        _stepped("1cp", [825], "one change-point"),
        _stepped("2cp", [365, 730], "two change-points"),
        _stepped("3cp", [548, 823, 973], "three change-points"),
        _random_means("J10", J10, 10, "ten change-points"),
        _random_means("J20", J20, 20, "twenty change-points"),
        _random_means("J50", J50, 50, "fifty change-points"),
    ]


def get_setting(name: str, seed: Optional[int] = None) -> SimulationSetting:
    """Look up a preset by name, optionally overriding its sampling seed"""
    for setting in preset_settings():
        if setting.name.lower() == str(name).lower():
            if seed is None:
                return setting
            return SimulationSetting(setting.name, setting.regimes,
                                     int(seed), setting.description)
    raise InvalidInputError(
        f"unknown setting '{name}', expected one of "
        + ", ".join(s.name for s in preset_settings()))
