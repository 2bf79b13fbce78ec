"""
Kriging Prediction
Conditional mean and variance at new mixed points, and latent-space readout
from fitted latent-variable models.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .covariance import KernelParams, LatentMap, cross_correlation
from .errors import KernelError, ValidationError
from .gp_fit import FittedModel
from .mixed_input import MixedPoint, array_violations, normalize_array

BLOCK_SIZE = 512


@dataclass(frozen=True)
class Prediction:
    mean: float
    variance: float


def _query_arrays(model: FittedModel, X: np.ndarray, T: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    schema = model.schema
    X = np.asarray(X, dtype=float).reshape(-1, schema.p) if schema.p else np.zeros((len(T), 0))
    T = np.asarray(T, dtype=int).reshape(X.shape[0], schema.q)
    violations = array_violations(X, T, schema)
    if violations:
        raise ValidationError(violations)
    return normalize_array(X, schema), T


def predict(model: FittedModel, X: np.ndarray, T: np.ndarray, return_variance: bool = True,
            kernel_params: Optional[KernelParams] = None,
            block_size: int = BLOCK_SIZE) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Batch prediction at native-unit query points.

    Rows are processed in blocks with row-local arithmetic, so any row's
    result does not depend on the batch it arrives in.

    Args:
        model: Fitted model
        X: Quantitative inputs (N, p), native units
        T: 1-based levels (N, q)
        return_variance: Also compute the kriging variance
        kernel_params: Equivalent kernel parameters to evaluate r with
        block_size: Rows per block

    Returns:
        (mean, variance) arrays; variance is None when not requested
    """
    Xn, T = _query_arrays(model, X, T)
    params = kernel_params if kernel_params is not None else model.kernel_params
    train = model.train
    level_counts = model.schema.level_counts

    N = Xn.shape[0]
    mean = np.empty(N)
    variance = np.empty(N) if return_variance else None
    for start in range(0, N, block_size):
        stop = min(start + block_size, N)
        r = cross_correlation(Xn[start:stop], T[start:stop], train.X, train.T, params, level_counts)
        # a query equal to training point i sees the jittered diagonal R_ii
        r = r + model.jitter * _training_matches(Xn[start:stop], T[start:stop], train)
        mean[start:stop] = model.mu + np.sum(r * model.alpha, axis=1)
        if return_variance:
            variance[start:stop] = _variance(model, r)
    return mean, variance


def _training_matches(Xn: np.ndarray, T: np.ndarray, train) -> np.ndarray:
    """(rows, n) indicator of queries identical to a training point in x and t."""
    same_x = np.all(Xn[:, None, :] == train.X[None, :, :], axis=2)
    same_t = np.all(T[:, None, :] == train.T[None, :, :], axis=2)
    return (same_x & same_t).astype(float)


def _variance(model: FittedModel, r: np.ndarray) -> np.ndarray:
    quad = np.array([np.sum(row * np.sum(model.r_inv * row, axis=1)) for row in r])
    trend = 1.0 - np.sum(r * model.r_inv_one, axis=1)
    value = model.sigma2 * (1.0 - quad + trend ** 2 / model.one_r_inv_one)
    return np.maximum(value, 0.0)


def predict_point(model: FittedModel, w: MixedPoint) -> Prediction:
    mean, variance = predict(model, np.array([w.x]), np.array([w.t]))
    return Prediction(float(mean[0]), float(variance[0]))


def predict_mean(model: FittedModel, w: MixedPoint) -> float:
    mean, _ = predict(model, np.array([w.x]), np.array([w.t]), return_variance=False)
    return float(mean[0])


def predict_variance(model: FittedModel, w: MixedPoint) -> float:
    return predict_point(model, w).variance


def latent_map(model: FittedModel) -> LatentMap:
    params = model.kernel_params
    if params.family != 'lv':
        raise KernelError(f"latent coordinates need a latent-variable kernel, model uses '{params.family}'")
    return params.latent


def latent_coordinates(model: FittedModel, factor: int) -> np.ndarray:
    """
    Estimated latent coordinates of one factor.

    Args:
        model: Model fitted with a latent-variable kernel
        factor: 1-based factor index

    Returns:
        (m, 2) array in 2D mode, (m,) array in 1D mode
    """
    latent = latent_map(model)
    if not 1 <= factor <= len(latent.coords):
        raise KernelError(f"factor index {factor} out of range 1..{len(latent.coords)}")
    coords = latent.coords[factor - 1]
    return coords[:, 0].copy() if latent.dim == 1 else coords.copy()
