from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union
import logging
import os
import tempfile
import numpy as np
import pandas as pd
from .exceptions import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MeasurementSeries:
    """Raw measurements y_1..y_T

    Parameters:
    -----------
    values : np.ndarray
        Finite real measurements, index 0 holds y_1.

    labels : Optional[Tuple[str, ...]]
        Opaque calendar labels, one per measurement.
    """
    values: np.ndarray
    labels: Optional[Tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if values.size < 2:
            raise InvalidInputError(
                f"a series needs at least 2 values, got {values.size}")
        if not np.isfinite(values).all():
            raise InvalidInputError("series contains NaN or Inf values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(lab) for lab in self.labels)
            if len(labels) != values.size:
                raise InvalidInputError(
                    f"{len(labels)} labels for {values.size} values")
            object.__setattr__(self, "labels", labels)

    @property
    def horizon(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class ExceedanceData:
    """Times at which a series exceeds a threshold

    Parameters:
    -----------
    threshold : float
        The threshold that was applied.

    horizon : int
        Length T of the underlying series.

    event_times : np.ndarray
        Strictly increasing int64 times d_1..d_n in [1, T].
    """
    threshold: float
    horizon: int
    event_times: np.ndarray

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidInputError(
                f"horizon must be >= 1, got {self.horizon}")
        d = np.asarray(self.event_times, dtype=np.int64).ravel()
        if d.size > 0:
            if d[0] < 1 or d[-1] > self.horizon:
                raise InvalidInputError(
                    f"event times must lie in [1, {self.horizon}]")
            if (np.diff(d) <= 0).any():
                raise InvalidInputError(
                    "event times must be strictly increasing")
        d.setflags(write=False)
        object.__setattr__(self, "event_times", d)

    @property
    def n(self) -> int:
        return int(self.event_times.size)

    def cumulative(self, t: Union[int, np.ndarray]):
        """Counting function N_t, the number of events <= t

        Example:
        --------
            data = cp.extract_exceedances(series, threshold=4.0)
            data.cumulative(np.arange(data.horizon + 1))
        """
        out = np.searchsorted(self.event_times, t, side='right')
        if np.ndim(out) == 0:
            return int(out)
        return out.astype(np.int64)


def _as_series(series: Union[MeasurementSeries, Sequence[float]]
               ) -> MeasurementSeries:
    if isinstance(series, MeasurementSeries):
        return series
    values = np.asarray(series, dtype=np.float64).ravel()
    if values.size == 0:
        raise InvalidInputError("empty series")
    return MeasurementSeries(values)


def extract_exceedances(series: Union[MeasurementSeries, Sequence[float]],
                        threshold: float) -> ExceedanceData:
    """Turn a measurement series into threshold exceedance events

    Parameters:
    -----------
    series : MeasurementSeries
        Measurements y_1..y_T

    threshold : float
        A time t is an event iff y_t > threshold (ties are non-events).

    Returns:
    --------
    ExceedanceData
        Event times d (1-based) with horizon T.

    Example:
    --------
        import cpdetect as cp
        data = cp.extract_exceedances(cp.MeasurementSeries([1, 5, 2, 6]), 4)
        data.event_times  # array([2, 4])
    """
    series = _as_series(series)
    threshold = float(threshold)
    if not np.isfinite(threshold):
        raise InvalidInputError(f"threshold must be finite, got {threshold}")
    d = np.flatnonzero(series.values > threshold) + 1
    return ExceedanceData(
        threshold=threshold, horizon=series.horizon, event_times=d)


def mean_threshold(series: Union[MeasurementSeries, Sequence[float]]
                   ) -> float:
    """Arithmetic mean of the series, the default exceedance threshold"""
    values = np.asarray(
        series.values if isinstance(series, MeasurementSeries) else series,
        dtype=np.float64)
    if values.size == 0:
        raise InvalidInputError("empty series")
    return float(np.mean(values))


def read_series_csv(path: str) -> MeasurementSeries:
    """Read a `date,value` CSV file with header into a MeasurementSeries

    Rows are taken in file order; dates are opaque labels. Missing or
    non-numeric values are rejected.
    """
    try:
        df = pd.read_csv(path, dtype={"date": str},
                         float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise InvalidInputError(f"{path}: empty CSV file")
    except pd.errors.ParserError as err:
        raise InvalidInputError(f"{path}: malformed CSV ({err})")
    if list(df.columns) != ["date", "value"]:
        raise InvalidInputError(
            f"{path}: expected header 'date,value', got {list(df.columns)}")
    if df.isna().any().any():
        raise InvalidInputError(f"{path}: missing values are not imputed")
    values = pd.to_numeric(df["value"], errors="coerce")
    if values.isna().any():
        bad = int(values.isna().idxmax()) + 2
        raise InvalidInputError(f"{path}: non-numeric value on line {bad}")
    logger.debug("read %d rows from %s", len(df), path)
    return MeasurementSeries(
        values.to_numpy(dtype=np.float64), labels=tuple(df["date"]))


def atomic_write(path: str, text: str):
    """Write text to path through a temp file in the same directory"""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_to_frame(series: MeasurementSeries) -> pd.DataFrame:
    labels = series.labels
    if labels is None:
        labels = [str(t) for t in range(1, series.horizon + 1)]
    return pd.DataFrame({"date": list(labels), "value": series.values})


def write_series_csv(series: MeasurementSeries, path: str):
    """Write a series in the `date,value` format (atomically)

    Series without labels get the 1-based time index as date.
    """
    text = series_to_frame(series).to_csv(index=False, float_format="%.17g")
    atomic_write(path, text)
    logger.debug("wrote %d rows to %s", series.horizon, path)
