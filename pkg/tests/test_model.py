"""
Model Object Tests
"""

from __future__ import annotations

import json
import pathlib

import numpy as np
import pytest

from mcvar.exceptions import (
    ClassNotFoundError,
    DimensionError,
    FitFormatError,
    InvalidPenaltyError,
    NonSymmetricError,
    NotPositiveDefiniteError,
)
from mcvar.model import (
    FitDiagnostics,
    MultiClassVarFit,
    PenaltyConfig,
    count_parameters,
    load_fit,
    log_determinants,
    objective_value,
    off_diagonal_l1,
    precision_objective,
    save_fit,
)
from mcvar.panel import lagged_design


def make_fit(
    coefficients: np.ndarray, precisions: np.ndarray | None = None
) -> MultiClassVarFit:
    """
    Fit object around given arrays with generated identifiers
    """
    n_classes, n_series, _ = coefficients.shape
    if precisions is None:
        precisions = np.tile(np.eye(n_series), (n_classes, 1, 1))
    return MultiClassVarFit(
        coefficients=coefficients,
        precisions=precisions,
        penalty=PenaltyConfig(lambda1=0.5, lambda2=0.25),
        diagnostics=FitDiagnostics(
            objective_trace=[3.0, 2.0],
            outer_iterations=1,
            converged=True,
            coefficient_changes=[0.1],
            precision_changes=[0.2],
            spg_iterations=[12],
            admm_iterations=[30],
            spg_trace=[(1, 2.5, 0.01), (2, 2.0, 0.01)],
        ),
        classes=[f"c{k}" for k in range(n_classes)],
        series=[f"s{j}" for j in range(n_series)],
        types=["energy"] * n_series,
    )


@pytest.fixture
def two_lag_fit(rng: np.random.Generator) -> MultiClassVarFit:
    """
    K=2, J=3, P=2 fit with random coefficients and precisions
    """
    coefficients = rng.normal(size=(2, 3, 6))
    coefficients[coefficients < 0] = 0.0
    m = rng.normal(size=(2, 3, 3))
    precisions = m @ np.swapaxes(m, 1, 2) + np.eye(3)
    return make_fit(coefficients, precisions)


def test_count_parameters() -> None:
    """
    K J^2 P coefficients and K J (J + 1) / 2 precision entries
    """
    assert count_parameters(3, 2, 2) == (36, 12)
    assert count_parameters(14, 3, 1) == (588, 315)
    with pytest.raises(DimensionError):
        count_parameters(0, 2, 1)


def test_penalty_config() -> None:
    """
    Weights are validated and report whether they couple classes
    """
    with pytest.raises(InvalidPenaltyError):
        PenaltyConfig(lambda3=-1.0)
    with pytest.raises(InvalidPenaltyError):
        PenaltyConfig(lambda1=float("nan"))
    assert not PenaltyConfig(lambda1=1.0, lambda3=1.0).couples_classes
    assert PenaltyConfig(lambda4=0.1).couples_classes


def test_lag_blocks(two_lag_fit: MultiClassVarFit) -> None:
    """
    Block p holds columns p*J to (p+1)*J of the coefficient stack
    """
    assert two_lag_fit.lag_order == 2
    blocks = two_lag_fit.lag_blocks("c1")
    np.testing.assert_array_equal(blocks[0], two_lag_fit.coefficients[1, :, :3])
    np.testing.assert_array_equal(blocks[1], two_lag_fit.coefficients[1, :, 3:])
    np.testing.assert_array_equal(
        two_lag_fit.effect_sums(1), blocks[0] + blocks[1]
    )


def test_class_index(two_lag_fit: MultiClassVarFit) -> None:
    """
    Classes are found by identifier or position
    """
    assert two_lag_fit.class_index("c1") == 1
    assert two_lag_fit.class_index(0) == 0
    with pytest.raises(ClassNotFoundError):
        two_lag_fit.class_index("c9")
    with pytest.raises(ClassNotFoundError):
        two_lag_fit.class_index(2)


def test_fit_validation() -> None:
    """
    Precisions must be symmetric positive definite
    """
    coefficients = np.zeros((1, 2, 2))
    with pytest.raises(NonSymmetricError):
        make_fit(coefficients, np.array([[[1.0, 0.5], [0.0, 1.0]]]))
    with pytest.raises(NotPositiveDefiniteError):
        make_fit(coefficients, np.array([[[1.0, 2.0], [2.0, 1.0]]]))
    with pytest.raises(DimensionError):
        make_fit(coefficients, np.tile(np.eye(3), (1, 1, 1)))


def test_save_and_load(tmp_path: pathlib.Path, two_lag_fit: MultiClassVarFit) -> None:
    """
    A saved fit loads back with identical arrays and metadata
    """
    path = save_fit(two_lag_fit, tmp_path / "fit.json")
    document = json.loads(path.read_text())
    assert document["format"] == "mcvar-fit"
    assert document["dimensions"] == {"classes": 2, "series": 3, "lags": 2}
    assert len(document["classes"][0]["precision_lower"]) == 6
    loaded = load_fit(path)
    np.testing.assert_array_equal(loaded.coefficients, two_lag_fit.coefficients)
    np.testing.assert_array_equal(loaded.precisions, two_lag_fit.precisions)
    assert loaded.penalty.weights == two_lag_fit.penalty.weights
    assert loaded.diagnostics == two_lag_fit.diagnostics
    assert loaded.classes == ["c0", "c1"]
    assert loaded.types == ["energy"] * 3


def test_load_malformed(tmp_path: pathlib.Path, two_lag_fit: MultiClassVarFit) -> None:
    """
    Broken fit documents raise FitFormatError
    """
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(FitFormatError):
        load_fit(path)
    document = two_lag_fit.to_dict()
    document["format"] = "something-else"
    path.write_text(json.dumps(document))
    with pytest.raises(FitFormatError):
        load_fit(path)
    document = two_lag_fit.to_dict()
    del document["classes"][0]["precision_lower"]
    path.write_text(json.dumps(document))
    with pytest.raises(FitFormatError):
        load_fit(path)


def test_log_determinants() -> None:
    """
    log|Omega| per class, rejecting indefinite matrices
    """
    precisions = np.stack([np.diag([2.0, 3.0]), np.eye(2)])
    np.testing.assert_allclose(log_determinants(precisions), [np.log(6.0), 0.0])
    with pytest.raises(NotPositiveDefiniteError):
        log_determinants(np.array([[[1.0, 2.0], [2.0, 1.0]]]))


def test_objective_value(rng: np.random.Generator) -> None:
    """
    The criterion adds the weighted residuals, log-determinants and penalties
    """
    designs = [lagged_design(rng.normal(size=(30, 2)), 1) for _ in range(2)]
    coefficients = rng.normal(scale=0.1, size=(2, 2, 2))
    precisions = np.stack([np.array([[2.0, 0.5], [0.5, 1.0]]), np.eye(2)])
    penalty = PenaltyConfig(lambda1=1.0, lambda2=2.0, lambda3=3.0, lambda4=4.0)
    expected = 0.0
    for k in range(2):
        residuals = designs[k].responses - designs[k].predictors @ coefficients[k].T
        expected += np.trace(residuals @ precisions[k] @ residuals.T)
        expected -= 29 * np.log(np.linalg.det(precisions[k]))
    expected += 1.0 * np.abs(coefficients).sum()
    expected += 2.0 * 2 * np.abs(coefficients[0] - coefficients[1]).sum()
    expected += 3.0 * 1.0
    expected += 4.0 * 2 * np.abs(precisions[0] - precisions[1]).sum()
    value = objective_value(coefficients, precisions, designs, penalty)
    assert value == pytest.approx(expected)


def test_precision_objective() -> None:
    """
    Likelihood term plus off-diagonal and fusion penalties
    """
    precisions = np.stack([np.eye(2), 2.0 * np.eye(2)])
    covariances = np.stack([np.eye(2), np.eye(2)])
    n_obs = np.array([10.0, 20.0])
    value = precision_objective(precisions, covariances, n_obs, 1.0, 0.5)
    expected = 10.0 * 2.0 + 20.0 * (4.0 - np.log(4.0)) + 0.5 * 2 * 2.0
    assert value == pytest.approx(expected)
    assert off_diagonal_l1(np.array([[[1.0, -2.0], [-2.0, 1.0]]])) == 4.0
