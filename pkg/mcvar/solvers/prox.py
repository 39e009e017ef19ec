"""
Proximal Operators

Element-wise building blocks shared by the coefficient (SPG) and the
inverse covariance (ADMM) solvers.
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy import linalg
from scipy.optimize import isotonic_regression

ArrayLike = Union[float, np.ndarray]


def soft_threshold(value: ArrayLike, threshold: ArrayLike) -> np.ndarray:
    """
    Proximal operator of the l1 norm, sign(v) * max(|v| - t, 0)

    Works element-wise on scalars and arrays; `threshold` must be >= 0.
    """
    value = np.asarray(value, dtype=float)
    return np.sign(value) * np.maximum(np.abs(value) - threshold, 0.0)


def fusion_weights(n_classes: int) -> np.ndarray:
    """
    Linear coefficients of the complete-graph fusion penalty on sorted values

    For x_(1) <= ... <= x_(K), sum_{k<k'} |x_k - x_k'| = sum_m (2m - 1 - K) x_(m).
    """
    positions = np.arange(1, n_classes + 1)
    return 2.0 * positions - 1.0 - n_classes


def fused_prox_k(values: np.ndarray, fusion: float, rho: float) -> np.ndarray:
    """
    Exact proximal operator of the complete-graph fused penalty

    Solves argmin_x (rho/2) sum_k (x_k - a_k)^2 + fusion * sum_{k<k'} |x_k - x_k'|.

    The minimizer preserves the order of `values`, so on the sorted sequence
    the penalty is linear and the problem reduces to an isotonic regression
    of the shifted sorted values. The leading axis indexes the K classes;
    any trailing axes are solved independently.

    Parameters
    ----------
    values: np.ndarray
        K values, or a K x ... array of independent problems.
    fusion: float
        Fusion weight, >= 0.
    rho: float
        Quadratic weight, > 0.

    Returns
    -------
    np.ndarray
        Proximal point with the shape of `values`.
    """
    a = np.asarray(values, dtype=float)
    n_classes = a.shape[0]
    if n_classes < 2 or fusion == 0:  # noqa: PLR2004
        return a.copy()
    flat = a.reshape(n_classes, -1)
    order = np.argsort(flat, axis=0, kind="stable")
    ordered = np.take_along_axis(flat, order, axis=0)
    shifted = ordered - (fusion / rho) * fusion_weights(n_classes)[:, None]
    solved = np.empty_like(shifted)
    for column in range(shifted.shape[1]):
        solved[:, column] = isotonic_regression(shifted[:, column]).x
    result = np.empty_like(flat)
    np.put_along_axis(result, order, solved, axis=0)
    return result.reshape(a.shape)


def eigen_theta_update(matrix: np.ndarray, rho: float) -> np.ndarray:
    """
    Positive definite solution of rho * Theta - Theta^{-1} = rho * A

    With A = V diag(d) V', Theta = V diag(theta) V' where
    theta_i = (d_i + sqrt(d_i^2 + 4 / rho)) / 2.
    """
    symmetric = (matrix + matrix.T) / 2.0
    eigenvalues, eigenvectors = linalg.eigh(symmetric)
    theta = (eigenvalues + np.sqrt(eigenvalues**2 + 4.0 / rho)) / 2.0
    return (eigenvectors * theta) @ eigenvectors.T
