"""
Augmented Dickey-Fuller Tests
"""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from mcvar.exceptions import SeriesTooShortError, SingularRegressionError
from mcvar.panel import ReturnPanel
from mcvar.stationarity import (
    adf_table,
    adf_test,
    critical_value_table,
    pooled_rejections,
    schwert_lag,
)


def test_schwert_lag() -> None:
    """
    floor(12 * (T / 100) ** (1/4))
    """
    assert schwert_lag(100) == 12
    assert schwert_lag(500) == 17
    assert schwert_lag(25) == 8


def test_critical_value_table() -> None:
    """
    The bundled table holds the asymptotic row
    """
    table = critical_value_table()
    assert 0 in table.index
    assert table.loc[0, 0.05] == pytest.approx(-2.86)


def test_white_noise_rejects(rng: np.random.Generator) -> None:
    """
    White noise is stationary, a random walk is not
    """
    noise = rng.normal(size=500)
    walk = np.cumsum(rng.normal(size=500))
    stationary = adf_test(noise)
    unit_root = adf_test(walk)
    assert stationary.statistic < unit_root.statistic
    assert not unit_root.reject["1%"]
    assert stationary.pvalue < 0.01
    assert stationary.reject["5%"]
    assert stationary.lags == 17
    assert stationary.nobs == 499 - 17


def test_statistic_matches_regression(rng: np.random.Generator) -> None:
    """
    Without lagged differences the statistic is the plain OLS t-ratio
    """
    y = rng.normal(size=200)
    result = adf_test(y, max_lag=0)
    dy = np.diff(y)
    design = np.column_stack([np.ones(dy.size), y[:-1]])
    beta = np.linalg.solve(design.T @ design, design.T @ dy)
    residuals = dy - design @ beta
    sigma2 = residuals @ residuals / (dy.size - 2)
    se = np.sqrt(sigma2 * np.linalg.inv(design.T @ design)[1, 1])
    assert result.lags == 0
    assert result.nobs == 199
    assert result.statistic == pytest.approx(beta[1] / se)


def test_critical_values_interpolated(rng: np.random.Generator) -> None:
    """
    Critical values sit between the neighbouring tabulated sample sizes
    """
    result = adf_test(rng.normal(size=1000), max_lag=0)
    assert -2.87 <= result.critical_values["5%"] <= -2.86
    assert (
        result.critical_values["1%"]
        < result.critical_values["5%"]
        < result.critical_values["10%"]
    )


def test_pvalue_bounds(rng: np.random.Generator) -> None:
    """
    p-values stay inside [0, 1] even far in the tails
    """
    explosive = np.zeros(100)
    explosive[0] = 1.0
    shocks = rng.normal(size=100)
    for t in range(1, 100):
        explosive[t] = 1.05 * explosive[t - 1] + shocks[t]
    result = adf_test(explosive, max_lag=0)
    assert result.statistic > 0
    assert result.pvalue == 1.0
    assert not result.reject["10%"]


def test_too_short() -> None:
    """
    ADF needs 25 observations
    """
    with pytest.raises(SeriesTooShortError):
        adf_test(np.arange(24.0))


def test_constant_series() -> None:
    """
    A constant series yields a rank deficient regression
    """
    with pytest.raises(SingularRegressionError):
        adf_test(np.full(40, 3.0))


def test_adf_table(rng: np.random.Generator) -> None:
    """
    One row per (class, series) with rejection flags at every level
    """
    panel = ReturnPanel(
        classes=["a", "b"],
        series=["x", "y"],
        types=["energy", "metal"],
        dates=pd.bdate_range("2020-01-01", periods=300),
        values=rng.normal(size=(2, 2, 300)),
    )
    table = adf_table(panel, max_lag=2)
    assert list(table.columns) == [
        "class",
        "series",
        "statistic",
        "pvalue",
        "lags",
        "nobs",
        "reject_1",
        "reject_5",
        "reject_10",
    ]
    assert len(table) == 4
    assert (table["lags"] == 2).all()
    rejected, total = pooled_rejections(table)
    assert total == 4
    assert rejected == 4


def autoregressive(coefficient: float, periods: int, seed: int) -> np.ndarray:
    """
    Simulate y_t = coefficient * y_{t-1} + e_t from y_0 = 0
    """
    shocks = np.random.default_rng(seed).normal(size=periods)
    series = np.zeros(periods)
    for t in range(1, periods):
        series[t] = coefficient * series[t - 1] + shocks[t]
    return series


@pytest.mark.slow
def test_stationary_autoregression_rejects_over_seeds() -> None:
    """
    AR(1) with coefficient 0.2 rejects the unit root at 1% almost always
    """
    rejections = sum(
        adf_test(autoregressive(0.2, 500, seed)).reject["1%"] for seed in range(100)
    )
    assert rejections >= 95


@pytest.mark.slow
def test_random_walk_retained_over_seeds() -> None:
    """
    A random walk keeps its unit root at 5% in most seeds
    """
    retained = sum(
        not adf_test(autoregressive(1.0, 500, seed)).reject["5%"]
        for seed in range(100)
    )
    assert retained >= 90


@pytest.mark.parametrize("shift", [-25.0, 3.5, 100.0])
def test_statistic_shift_invariant(rng: np.random.Generator, shift: float) -> None:
    """
    The intercept absorbs a constant shift of the series
    """
    series = autoregressive(0.6, 300, int(rng.integers(1_000)))
    base = adf_test(series)
    shifted = adf_test(series + shift)
    assert shifted.lags == base.lags
    assert shifted.statistic == pytest.approx(base.statistic, abs=1e-7)
    assert shifted.pvalue == pytest.approx(base.pvalue, abs=1e-7)
