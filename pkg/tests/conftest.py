"""
Pytest Fixtures Shared Across all Unit Tests
"""

from __future__ import annotations

import pathlib
from typing import Callable, Sequence

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from mcvar.panel import ReturnPanel, standardize
from mcvar.simulate import simulate_panel

PriceWriter = Callable[..., pathlib.Path]


@pytest.fixture
def runner() -> CliRunner:
    """
    Return a CliRunner object
    """
    return CliRunner()


@pytest.fixture
def rng() -> np.random.Generator:
    """
    Seeded random generator
    """
    return np.random.default_rng(20240417)


def price_frame(
    values: np.ndarray,
    classes: Sequence[str] = ("world", "india"),
    series: Sequence[str] = ("crude", "wheat", "gold"),
    types: Sequence[str] = ("energy", "agriculture", "metal"),
    start: str = "2020-01-01",
) -> pd.DataFrame:
    """
    Long-format price table of a K x J x T value cube
    """
    n_classes, n_series, n_periods = values.shape
    dates = pd.bdate_range(start=start, periods=n_periods).strftime("%Y-%m-%d")
    rows = [
        {
            "date": dates[t],
            "class": classes[k],
            "series": series[j],
            "type": types[j],
            "price": values[k, j, t],
        }
        for k in range(n_classes)
        for j in range(n_series)
        for t in range(n_periods)
    ]
    return pd.DataFrame(rows)


@pytest.fixture
def write_prices(tmp_path: pathlib.Path) -> PriceWriter:
    """
    Write a long price table to a CSV file under tmp_path
    """

    def _write(frame: pd.DataFrame, name: str = "prices.csv") -> pathlib.Path:
        path = tmp_path / name
        frame.to_csv(path, index=False)
        return path

    return _write


@pytest.fixture
def random_prices(rng: np.random.Generator) -> np.ndarray:
    """
    2 x 3 x 60 positive geometric random walk prices
    """
    steps = rng.normal(scale=0.01, size=(2, 3, 60))
    return 100.0 * np.exp(np.cumsum(steps, axis=2))


def simulated_returns(
    coefficients: np.ndarray,
    n_periods: int,
    seed: int,
    covariances: np.ndarray | None = None,
) -> ReturnPanel:
    """
    Standardized panel simulated from known coefficients
    """
    n_classes, n_series, _ = coefficients.shape
    if covariances is None:
        covariances = np.tile(np.eye(n_series), (n_classes, 1, 1))
    simulation = simulate_panel(coefficients, covariances, n_periods=n_periods, seed=seed)
    return standardize(simulation.panel)


@pytest.fixture
def var1_panel() -> ReturnPanel:
    """
    Standardized two-class VAR(1) panel with a single cross effect
    """
    b = np.zeros((3, 3))
    np.fill_diagonal(b, 0.4)
    b[1, 0] = 0.3
    return simulated_returns(np.stack([b, b]), n_periods=400, seed=7)
