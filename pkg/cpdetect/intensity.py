from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union
import enum
import numpy as np
from scipy.special import xlogy
from .exceptions import DomainError, InvalidInputError, SingularityError

ArrayLike = Union[float, Sequence[float], np.ndarray]


class IntensityFamily(enum.Enum):
    """NHPP intensity families

    - W   -- Weibull, lambda = (a/b)(t/b)^(a-1), m = (t/b)^a
    - MO  -- Musa-Okumoto, lambda = b/(t+a), m = b log(1 + t/a)
    - GO  -- Goel-Okumoto, lambda = a b exp(-b t), m = a (1 - exp(-b t))
    - GGO -- generalized Goel-Okumoto,
             lambda = a b g t^(g-1) exp(-b t^g), m = a (1 - exp(-b t^g))
    """
    W = "W"
    MO = "MO"
    GO = "GO"
    GGO = "GGO"

    @property
    def param_count(self) -> int:
        return 3 if self is IntensityFamily.GGO else 2

    @property
    def long_name(self) -> str:
        return _LONG_NAMES[self]

    @classmethod
    def parse(cls, name: Union[str, "IntensityFamily"]) -> "IntensityFamily":
        """Accept a tag ('W') or a CLI name ('weibull', 'musa-okumoto')"""
        if isinstance(name, cls):
            return name
        key = str(name).strip()
        for fam in cls:
            if key.upper() == fam.value or key.lower() == fam.long_name:
                return fam
        raise InvalidInputError(
            f"unknown intensity family '{name}', expected one of "
            + ", ".join(f.long_name for f in cls))


_LONG_NAMES = {
    IntensityFamily.W: "weibull",
    IntensityFamily.MO: "musa-okumoto",
    IntensityFamily.GO: "goel-okumoto",
    IntensityFamily.GGO: "ggo",
}


@dataclass(frozen=True)
class SegmentParams:
    """Parameter vector theta_j of one regime (gamma only for GGO)"""
    alpha: float
    beta: float
    gamma: Optional[float] = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            val = getattr(self, name)
            if val is None:
                continue
            val = float(val)
            if not (np.isfinite(val) and val > 0):
                raise DomainError(
                    f"{name} must be finite and > 0, got {val}")
            object.__setattr__(self, name, val)

    @classmethod
    def from_vector(cls, theta: Sequence[float]) -> "SegmentParams":
        return cls(*[float(x) for x in theta])

    def as_vector(self) -> Tuple[float, ...]:
        if self.gamma is None:
            return (self.alpha, self.beta)
        return (self.alpha, self.beta, self.gamma)

    def check(self, family: IntensityFamily) -> "SegmentParams":
        if (self.gamma is not None) != (family is IntensityFamily.GGO):
            raise InvalidInputError(
                f"family {family.value} takes {family.param_count} "
                f"parameters, got {len(self.as_vector())}")
        return self


@dataclass(frozen=True)
class ChangePointConfig:
    """A chromosome (J, tau_1..tau_J) on the horizon T

    Regime j covers the times tau_{j-1}+1..tau_j with tau_0 = 0 and
      tau_{J+1} = T.
    """
    tau: Tuple[int, ...]
    horizon: int

    def __post_init__(self):
        tau = tuple(int(x) for x in self.tau)
        T = int(self.horizon)
        if T < 2:
            raise InvalidInputError(f"horizon must be >= 2, got {T}")
        prev = 1
        for x in tau:
            if x <= prev or x >= T:
                raise InvalidInputError(
                    f"change-points must satisfy 1 < tau_1 < ... < tau_J "
                    f"< {T}, got {list(tau)}")
            prev = x
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "horizon", T)

    @property
    def J(self) -> int:
        return len(self.tau)

    @property
    def bounds(self) -> np.ndarray:
        """[0, tau_1, ..., tau_J, T]"""
        return np.array((0,) + self.tau + (self.horizon,), dtype=np.int64)


@dataclass(frozen=True)
class SegmentedModel:
    family: IntensityFamily
    config: ChangePointConfig
    segments: Tuple[SegmentParams, ...]

    def __post_init__(self):
        segments = tuple(self.segments)
        if len(segments) != self.config.J + 1:
            raise InvalidInputError(
                f"{len(segments)} segment parameter vectors for "
                f"J={self.config.J} change-points")
        for seg in segments:
            seg.check(self.family)
        object.__setattr__(self, "segments", segments)


def is_singular_at_zero(family: IntensityFamily,
                        theta: SegmentParams) -> bool:
    if family is IntensityFamily.W:
        return theta.alpha < 1.0
    if family is IntensityFamily.GGO:
        return theta.gamma < 1.0
    return False


def _mean(family, a, b, g, t):
    if family is IntensityFamily.W:
        return (t / b) ** a
    if family is IntensityFamily.MO:
        return b * np.log1p(t / a)
    if family is IntensityFamily.GO:
        return -a * np.expm1(-b * t)
    return -a * np.expm1(-b * t ** g)


def _log_rate(family, a, b, g, t):
    if family is IntensityFamily.W:
        return np.log(a) - a * np.log(b) + xlogy(a - 1.0, t)
    if family is IntensityFamily.MO:
        return np.log(b) - np.log(t + a)
    if family is IntensityFamily.GO:
        return np.log(a) + np.log(b) - b * t
    return (np.log(a) + np.log(b) + np.log(g)
            + xlogy(g - 1.0, t) - b * t ** g)


def _times(t: ArrayLike):
    arr = np.asarray(t, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise InvalidInputError("time must be finite")
    if (arr < 0).any():
        raise InvalidInputError("time must be >= 0")
    return arr


def _ret(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


def _check_singular(family, theta, t):
    if (t == 0).any() and is_singular_at_zero(family, theta):
        raise SingularityError(
            f"intensity of {family.value} with {theta} diverges at t=0")


def intensity(family: IntensityFamily, theta: SegmentParams, t: ArrayLike):
    """Intensity lambda(t | theta)

    Parameters:
    -----------
    family : IntensityFamily
        One of W, MO, GO, GGO

    theta : SegmentParams
        Parameters (alpha, beta[, gamma])

    t : ArrayLike
        Time(s) >= 0. t = 0 raises SingularityError for W with alpha < 1
          and GGO with gamma < 1.

    Example:
    --------
        import cpdetect as cp
        cp.intensity(cp.IntensityFamily.W, cp.SegmentParams(2, 1), 3.0)
    """
    family = IntensityFamily.parse(family)
    theta.check(family)
    t = _times(t)
    _check_singular(family, theta, t)
    a, b, g = theta.alpha, theta.beta, theta.gamma
    if family is IntensityFamily.W:
        out = (a / b) * (t / b) ** (a - 1.0)
    elif family is IntensityFamily.MO:
        out = b / (t + a)
    elif family is IntensityFamily.GO:
        out = a * b * np.exp(-b * t)
    else:
        out = a * b * g * t ** (g - 1.0) * np.exp(-b * t ** g)
    return _ret(np.asarray(out, dtype=np.float64))


def log_intensity(family: IntensityFamily, theta: SegmentParams,
                  t: ArrayLike):
    """Natural log of lambda(t | theta), computed without forming lambda"""
    family = IntensityFamily.parse(family)
    theta.check(family)
    t = _times(t)
    _check_singular(family, theta, t)
    with np.errstate(divide='ignore'):
        out = _log_rate(family, theta.alpha, theta.beta, theta.gamma, t)
    return _ret(np.asarray(out, dtype=np.float64))


def mean_cumulative(family: IntensityFamily, theta: SegmentParams,
                    t: ArrayLike):
    """Mean cumulative function m(t | theta), m(0 | theta) = 0"""
    family = IntensityFamily.parse(family)
    theta.check(family)
    t = _times(t)
    out = _mean(family, theta.alpha, theta.beta, theta.gamma, t)
    return _ret(np.asarray(out, dtype=np.float64))


def segmented_mean(model: SegmentedModel, t: ArrayLike):
    """Mean cumulative function of a segmented NHPP

    Before tau_1 this is m(t|theta_1). In regime j+1 it is the sum of the
      within-regime increments m(tau_i|theta_i) - m(tau_{i-1}|theta_i) of
      all earlier regimes plus m(t|theta_{j+1}) - m(tau_j|theta_{j+1}).

    Parameters:
    -----------
    model : SegmentedModel
        Family, change-point configuration and J+1 parameter vectors

    t : ArrayLike
        Time(s) in [0, T]
    """
    arr = _times(t)
    T = model.config.horizon
    if (arr > T).any():
        raise InvalidInputError(f"time must lie in [0, {T}]")
    bounds = model.config.bounds.astype(np.float64)
    # accumulated mean at the start of each regime
    offsets = np.zeros(len(model.segments))
    for j in range(1, len(model.segments)):
        seg = model.segments[j - 1]
        inc = (_mean(model.family, seg.alpha, seg.beta, seg.gamma, bounds[j])
               - _mean(model.family, seg.alpha, seg.beta, seg.gamma,
                       bounds[j - 1]))
        offsets[j] = offsets[j - 1] + inc
    idx = np.searchsorted(model.config.tau, arr, side='right')
    flat_t = np.atleast_1d(arr)
    flat_idx = np.atleast_1d(idx)
    out = np.empty(flat_t.shape, dtype=np.float64)
    for j, seg in enumerate(model.segments):
        mask = flat_idx == j
        if not mask.any():
            continue
        a, b, g = seg.alpha, seg.beta, seg.gamma
        out[mask] = offsets[j] + (
            _mean(model.family, a, b, g, flat_t[mask])
            - _mean(model.family, a, b, g, bounds[j]))
    return _ret(out.reshape(arr.shape))
