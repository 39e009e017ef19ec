"""
Price and Return Panels

Ingestion of long-format price files, log-differencing, standardization
and the lagged regression designs consumed by the estimator.
"""

from __future__ import annotations

import datetime
import logging
import pathlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np
import pandas as pd

from mcvar.config import (
    commodity_types,
    price_columns,
    standardization_tolerance,
    zero_variance_threshold,
)
from mcvar.exceptions import (
    ConfigurationError,
    DateParseError,
    DimensionError,
    InconsistentSeriesError,
    InsufficientObservationsError,
    MissingValueError,
    NonPositivePriceError,
    PanelFormatError,
    SeriesTooShortError,
    ZeroVarianceError,
)
from mcvar.utils import read_table

logger = logging.getLogger(__name__)

DateLike = Union[str, datetime.date, pd.Timestamp, None]


@dataclass(frozen=True, eq=False)
class _Panel:
    """
    Identifiers and a K x J x T value cube shared by all panels
    """

    classes: list[str]
    series: list[str]
    types: list[str]
    dates: pd.DatetimeIndex
    values: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.dates, pd.DatetimeIndex):
            object.__setattr__(self, "dates", pd.DatetimeIndex(self.dates))
        shape = (len(self.classes), len(self.series), len(self.dates))
        if self.values.shape != shape:
            msg = f"Panel values have shape {self.values.shape}, expected {shape}"
            raise DimensionError(msg)
        if len(self.types) != len(self.series):
            raise DimensionError("Every series needs exactly one commodity type")
        if len(set(self.classes)) != len(self.classes):
            raise PanelFormatError("Duplicate class identifiers")
        if len(set(self.series)) != len(self.series):
            raise PanelFormatError("Duplicate series identifiers")
        if len(self.dates) > 1 and not self.dates.is_monotonic_increasing:
            raise DateParseError("Dates must be strictly increasing")
        if not self.dates.is_unique:
            raise DateParseError("Dates must not repeat")

    @property
    def n_classes(self) -> int:
        """
        Number of classes K
        """
        return len(self.classes)

    @property
    def n_series(self) -> int:
        """
        Number of series J
        """
        return len(self.series)

    @property
    def n_periods(self) -> int:
        """
        Number of time observations
        """
        return len(self.dates)

    def class_index(self, class_id: str) -> int:
        """
        Position of a class identifier
        """
        return self.classes.index(class_id)

    def class_values(self, k: int) -> np.ndarray:
        """
        The T x J observations of class `k`
        """
        return self.values[k].T

    def _long_frame(self, value_name: str) -> pd.DataFrame:
        index = pd.MultiIndex.from_product(
            [self.classes, self.series, self.dates], names=["class", "series", "date"]
        )
        df = pd.DataFrame({value_name: self.values.reshape(-1)}, index=index)
        df = df.reset_index()
        df["type"] = np.tile(np.repeat(self.types, self.n_periods), self.n_classes)
        df["date"] = df["date"].dt.strftime("%Y-%m-%d")
        return df[["date", "class", "series", "type", value_name]]


@dataclass(frozen=True, eq=False)
class PricePanel(_Panel):
    """
    Raw positive prices, one series per (class, commodity)
    """

    n_filled: int = 0

    def __post_init__(self) -> None:
        super().__post_init__()
        if np.isnan(self.values).any():
            raise MissingValueError("Price panel contains missing cells")
        if (self.values <= 0).any():
            k, j, t = np.argwhere(self.values <= 0)[0]
            msg = (
                f"Non-positive price {self.values[k, j, t]} for series "
                f"`{self.series[j]}` of class `{self.classes[k]}` "
                f"on {self.dates[t].date()}"
            )
            raise NonPositivePriceError(msg)

    def to_frame(self) -> pd.DataFrame:
        """
        Long-format price table
        """
        return self._long_frame("price")


@dataclass(frozen=True, eq=False)
class ReturnPanel(_Panel):
    """
    Log returns with the moments used to standardize them

    `values * scale + mean` recovers the raw log returns; a panel fresh
    from `log_diff` has mean 0 and scale 1.
    """

    mean: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    scale: np.ndarray = field(default_factory=lambda: np.ones((0, 0)))

    def __post_init__(self) -> None:
        super().__post_init__()
        moments_shape = (self.n_classes, self.n_series)
        if self.mean.size == 0:
            object.__setattr__(self, "mean", np.zeros(moments_shape))
        if self.scale.size == 0:
            object.__setattr__(self, "scale", np.ones(moments_shape))
        if self.mean.shape != moments_shape or self.scale.shape != moments_shape:
            msg = f"Stored moments must have shape {moments_shape}"
            raise DimensionError(msg)

    def is_standardized(self, tol: float = standardization_tolerance) -> bool:
        """
        Whether every series has mean 0 and sample standard deviation 1
        """
        if self.n_periods < 2:  # noqa: PLR2004
            return False
        means = self.values.mean(axis=2)
        sds = self.values.std(axis=2, ddof=1)
        return bool(np.all(np.abs(means) <= tol) and np.all(np.abs(sds - 1) <= tol))

    def to_frame(self) -> pd.DataFrame:
        """
        Long-format return table, the preprocessing output schema
        """
        return self._long_frame("return")

    def standardization_frame(self) -> pd.DataFrame:
        """
        Per-series stored mean and standard deviation
        """
        index = pd.MultiIndex.from_product(
            [self.classes, self.series], names=["class", "series"]
        )
        return pd.DataFrame(
            {"mean": self.mean.reshape(-1), "sd": self.scale.reshape(-1)},
            index=index,
        ).reset_index()


@dataclass(frozen=True, eq=False)
class LaggedDesign:
    """
    Regression design of one class: responses y_t against stacked lags

    Column block p of `predictors` holds the lag-(p+1) values.
    """

    responses: np.ndarray
    predictors: np.ndarray
    lag_order: int

    @property
    def n_obs(self) -> int:
        """
        Effective sample size N = T - P
        """
        return int(self.responses.shape[0])

    @property
    def n_series(self) -> int:
        """
        Number of series J
        """
        return int(self.responses.shape[1])

    @cached_property
    def gram(self) -> np.ndarray:
        """
        Predictor Gram matrix X'X
        """
        return self.predictors.T @ self.predictors

    @cached_property
    def cross(self) -> np.ndarray:
        """
        Response-predictor products Y'X
        """
        return self.responses.T @ self.predictors

    @cached_property
    def response_gram(self) -> np.ndarray:
        """
        Response Gram matrix Y'Y
        """
        return self.responses.T @ self.responses


def _read_long_frame(
    file_path: str | pathlib.Path,
    value_column: str,
    type_labels: Sequence[str] | None,
) -> pd.DataFrame:
    """
    Read and validate a long-format table
    """
    df = read_table(file_path)
    columns = [*price_columns[:-1], value_column]
    missing_columns = [column for column in columns if column not in df.columns]
    if missing_columns:
        msg = f"{file_path} is missing required columns {missing_columns}"
        raise PanelFormatError(msg)
    df = df[columns].copy()
    for column in ["class", "series"]:
        df[column] = df[column].astype(str).str.strip()
    df["type"] = df["type"].astype(str).str.strip().str.lower()
    try:
        df["date"] = pd.to_datetime(df["date"], format="ISO8601")
    except (ValueError, TypeError) as e:
        msg = f"Unparseable date in {file_path}: {e}"
        raise DateParseError(msg) from e
    numeric = pd.to_numeric(df[value_column], errors="coerce")
    not_numbers = numeric.isna() & df[value_column].notna()
    if not_numbers.any():
        bad = df.loc[not_numbers].iloc[0]
        msg = (
            f"Unparseable {value_column} `{bad[value_column]}` for series "
            f"`{bad['series']}` of class `{bad['class']}`"
        )
        raise PanelFormatError(msg)
    df[value_column] = numeric.astype(float)
    duplicated = df.duplicated(["class", "series", "date"])
    if duplicated.any():
        bad = df.loc[duplicated].iloc[0]
        msg = (
            f"Duplicate row for series `{bad['series']}` of class `{bad['class']}` "
            f"on {bad['date'].date()}"
        )
        raise PanelFormatError(msg)
    labels = [label.lower() for label in (type_labels or commodity_types)]
    unknown = sorted(set(df["type"]) - set(labels))
    if unknown:
        msg = f"Unknown commodity types {unknown}, expected one of {labels}"
        raise PanelFormatError(msg)
    type_counts = df.groupby("series", sort=False)["type"].nunique()
    if (type_counts > 1).any():
        msg = f"Series {list(type_counts[type_counts > 1].index)} carry several types"
        raise PanelFormatError(msg)
    return df


def _pivot(
    df: pd.DataFrame, value_column: str
) -> tuple[list[str], list[str], list[str], pd.DatetimeIndex, pd.DataFrame]:
    """
    Align a validated long frame on the shared calendar

    Returns the (class, series) x date frame, missing cells left as NaN.
    """
    if df.empty:
        raise PanelFormatError("The panel holds no observations")
    classes = [str(c) for c in pd.unique(df["class"])]
    series = [str(s) for s in pd.unique(df["series"])]
    for class_id, group in df.groupby("class", sort=False):
        class_series = set(group["series"])
        lacking = [s for s in series if s not in class_series]
        if lacking:
            msg = f"Class `{class_id}` lacks series {lacking}"
            raise InconsistentSeriesError(msg)
    calendars = [set(group["date"]) for _, group in df.groupby("class", sort=False)]
    shared = set.intersection(*calendars)
    dropped = set.union(*calendars) - shared
    if dropped:
        logger.info(
            "Dropped %d dates not shared by every class", len(dropped)
        )
    dates = pd.DatetimeIndex(sorted(shared))
    types = (
        df.drop_duplicates("series").set_index("series").loc[series, "type"].tolist()
    )
    cube = (
        df.set_index(["class", "series", "date"])[value_column]
        .unstack("date")
        .reindex(columns=dates)
        .reindex(pd.MultiIndex.from_product([classes, series]))
    )
    return classes, series, types, dates, cube


def _raise_missing(cube: pd.DataFrame) -> None:
    row, column = np.argwhere(cube.isna().to_numpy())[0]
    class_id, series_id = cube.index[row]
    date = cube.columns[column]
    msg = (
        f"Missing value for series `{series_id}` of class `{class_id}` "
        f"on {pd.Timestamp(date).date()} (see --forward-fill)"
    )
    raise MissingValueError(msg)


def _window(df: pd.DataFrame, start: DateLike, end: DateLike) -> pd.DataFrame:
    if start is not None:
        df = df[df["date"] >= pd.Timestamp(start)]
    if end is not None:
        df = df[df["date"] <= pd.Timestamp(end)]
    return df


def load_panel(
    file_path: str | pathlib.Path,
    forward_fill: bool = False,
    type_labels: Sequence[str] | None = None,
    start: DateLike = None,
    end: DateLike = None,
) -> PricePanel:
    """
    Load a long-format price file into a PricePanel

    Parameters
    ----------
    file_path: str | pathlib.Path
        CSV (or parquet / feather) file with columns
        `date, class, series, type, price`.
    forward_fill: bool
        Carry the last observation forward into missing cells instead
        of failing.
    type_labels: Sequence[str] | None
        Allowed commodity type labels, defaults to `config.commodity_types`.
    start, end: DateLike
        Optional inclusive date window.

    Raises
    ------
    MissingValueError
        A cell is missing and `forward_fill` is off, or nothing precedes it.
    NonPositivePriceError
        A price is zero or negative.
    InconsistentSeriesError
        Classes do not hold the same series.
    DateParseError
        A date is not ISO-8601.

    Returns
    -------
    PricePanel
    """
    df = _window(_read_long_frame(file_path, "price", type_labels), start, end)
    classes, series, types, dates, cube = _pivot(df, "price")
    n_filled = 0
    if cube.isna().to_numpy().any():
        if not forward_fill:
            _raise_missing(cube)
        missing_before = int(cube.isna().to_numpy().sum())
        cube = cube.ffill(axis=1)
        if cube.isna().to_numpy().any():
            _raise_missing(cube)
        n_filled = missing_before
        logger.info("Forward-filled %d missing cells", n_filled)
    values = cube.to_numpy(dtype=float).reshape(len(classes), len(series), len(dates))
    return PricePanel(
        classes=classes,
        series=series,
        types=types,
        dates=dates,
        values=values,
        n_filled=n_filled,
    )


def load_returns(
    file_path: str | pathlib.Path,
    type_labels: Sequence[str] | None = None,
) -> ReturnPanel:
    """
    Load the preprocessing output back into a ReturnPanel

    The stored moments come from a `standardization.csv` next to the file
    when present.
    """
    path = pathlib.Path(file_path)
    df = _read_long_frame(path, "return", type_labels)
    classes, series, types, dates, cube = _pivot(df, "return")
    if cube.isna().to_numpy().any():
        _raise_missing(cube)
    values = cube.to_numpy(dtype=float).reshape(len(classes), len(series), len(dates))
    mean = np.zeros((len(classes), len(series)))
    scale = np.ones((len(classes), len(series)))
    sidecar = path.with_name("standardization.csv")
    if sidecar.exists():
        moments = read_table(sidecar).set_index(["class", "series"])
        index = pd.MultiIndex.from_product([classes, series])
        moments = moments.reindex(index)
        if not moments.isna().to_numpy().any():
            mean = moments["mean"].to_numpy(dtype=float).reshape(mean.shape)
            scale = moments["sd"].to_numpy(dtype=float).reshape(scale.shape)
    return ReturnPanel(
        classes=classes,
        series=series,
        types=types,
        dates=dates,
        values=values,
        mean=mean,
        scale=scale,
    )


def log_diff(panel: PricePanel) -> ReturnPanel:
    """
    Daily log returns r_t = ln(p_t / p_{t-1})
    """
    if panel.n_periods < 2:  # noqa: PLR2004
        msg = f"Log-differencing needs at least 2 dates, got {panel.n_periods}"
        raise SeriesTooShortError(msg)
    values = np.log(panel.values[..., 1:] / panel.values[..., :-1])
    return ReturnPanel(
        classes=list(panel.classes),
        series=list(panel.series),
        types=list(panel.types),
        dates=panel.dates[1:],
        values=values,
    )


def standardize(returns: ReturnPanel) -> ReturnPanel:
    """
    Center each (class, series) return and scale it to unit sample variance

    The sample standard deviation uses divisor T - 1. Stored moments are
    composed with those already on `returns`.

    Raises
    ------
    ZeroVarianceError
        A series is constant.
    """
    if returns.n_periods < 2:  # noqa: PLR2004
        msg = f"Standardizing needs at least 2 observations, got {returns.n_periods}"
        raise SeriesTooShortError(msg)
    mean = returns.values.mean(axis=2)
    sd = returns.values.std(axis=2, ddof=1)
    flat = np.argwhere(~(sd > zero_variance_threshold))
    if flat.size:
        k, j = flat[0]
        raise ZeroVarianceError(returns.classes[k], returns.series[j])
    values = (returns.values - mean[..., None]) / sd[..., None]
    return ReturnPanel(
        classes=list(returns.classes),
        series=list(returns.series),
        types=list(returns.types),
        dates=returns.dates,
        values=values,
        mean=returns.mean + returns.scale * mean,
        scale=returns.scale * sd,
    )


def lagged_design(observations: np.ndarray, lag_order: int) -> LaggedDesign:
    """
    Build the lagged design of a single T x J series matrix

    Row t of the predictors is [y_{t-1}, ..., y_{t-P}] for response y_t.
    """
    if lag_order < 1:
        msg = f"Lag order must be at least 1, got {lag_order}"
        raise ConfigurationError(msg)
    y = np.asarray(observations, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n_periods = y.shape[0]
    if n_periods <= lag_order:
        msg = f"Need more than {lag_order} observations, got {n_periods}"
        raise InsufficientObservationsError(msg)
    predictors = np.hstack(
        [y[lag_order - p : n_periods - p] for p in range(1, lag_order + 1)]
    )
    return LaggedDesign(
        responses=y[lag_order:].copy(), predictors=predictors, lag_order=lag_order
    )


def build_lagged_design(panel: ReturnPanel, lag_order: int) -> list[LaggedDesign]:
    """
    One lagged design per class, N = T - P rows each
    """
    return [
        lagged_design(panel.class_values(k), lag_order)
        for k in range(panel.n_classes)
    ]
