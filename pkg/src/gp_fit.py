"""
Kriging Fit
Profile-likelihood estimation of kernel hyperparameters with multi-start
bounded quasi-Newton search, plus model persistence.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .covariance import CorrelationMatrix, KernelConfig, build_corr_matrix
from .errors import DegenerateDataError, FitError, SingularMatrixError
from .hyperparams import HyperParams, ParamLayout
from .mixed_input import Dataset, InputSchema

logger = logging.getLogger(__name__)

PENALTY = 1e10
MODEL_FORMAT = 'mixed-kriging-model/1'


def profile_mu_sigma(corr: CorrelationMatrix, y: np.ndarray) -> Tuple[float, float]:
    """
    Closed-form mean and variance maximizing the likelihood for fixed R.

    Args:
        corr: Factored correlation matrix
        y: Responses

    Returns:
        (mu_hat, sigma2_hat)
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n < 1:
        raise DegenerateDataError("no observations")
    one = np.ones(n)
    r_one = corr.solve(one)
    mu = float(one @ corr.solve(y)) / float(one @ r_one)
    resid = y - mu
    sigma2 = float(resid @ corr.solve(resid)) / n
    if np.ptp(y) == 0 or not sigma2 > 0:
        raise DegenerateDataError(f"responses have zero variance (sigma2 = {sigma2:.3e})")
    return mu, sigma2


def _nll(corr: CorrelationMatrix, sigma2: float) -> float:
    n = corr.n
    return 0.5 * n * np.log(2.0 * np.pi * sigma2) + 0.5 * corr.log_det() + 0.5 * n


class ProfileLikelihood:
    """Negative profile log-likelihood over one normalized dataset; holds no mutable state."""

    def __init__(self, data: Dataset, layout: ParamLayout):
        self.data = data
        self.layout = layout
        self.y = np.asarray(data.y, dtype=float)
        self.n = data.n

    def _corr(self, v: np.ndarray) -> Tuple[CorrelationMatrix, np.ndarray]:
        params = self.layout.unpack(v)
        corr = build_corr_matrix(self.data, self.layout.config, params)
        return corr, params

    def value(self, v: np.ndarray) -> float:
        corr, _ = self._corr(v)
        _, sigma2 = profile_mu_sigma(corr, self.y)
        return float(_nll(corr, sigma2))

    def value_and_gradient(self, v: np.ndarray) -> Tuple[float, np.ndarray]:
        corr, params = self._corr(v)
        mu, sigma2 = profile_mu_sigma(corr, self.y)
        a = corr.solve(self.y - mu)
        r_inv = corr.solve(np.eye(self.n))
        Q = r_inv - np.outer(a, a) / sigma2
        K = corr.R - corr.jitter * np.eye(self.n)
        grads = self.layout.derivatives(v, self.data.X, self.data.T, K)
        gradient = np.array([0.5 * np.sum(Q * dR) for dR in grads], dtype=float)
        return float(_nll(corr, sigma2)), gradient

    def penalized(self, v: np.ndarray) -> Tuple[float, np.ndarray]:
        """Objective for the local solver; factorization failure maps to a finite penalty."""
        v = np.asarray(v, dtype=float)
        try:
            return self.value_and_gradient(v)
        except SingularMatrixError:
            excess = np.sum(np.maximum(self.layout.lower - v, 0) + np.maximum(v - self.layout.upper, 0))
            return PENALTY + float(excess), np.zeros_like(v)


def _as_vector(v: Union[HyperParams, np.ndarray]) -> np.ndarray:
    return np.asarray(v.values if isinstance(v, HyperParams) else v, dtype=float)


def neg_profile_loglik(v: HyperParams, data: Dataset) -> float:
    """
    Negative log-likelihood at the profiled mean and variance.

    Returns the penalty value when R cannot be factored at the jitter cap.

    Args:
        v: Hyperparameters
        data: Training data in native units

    Returns:
        (n/2) ln(2 pi sigma2) + (1/2) ln|R| + n/2
    """
    objective = ProfileLikelihood(data.normalized(), v.layout)
    try:
        return objective.value(v.values)
    except SingularMatrixError as e:
        logger.warning(f"Likelihood penalty applied: {e}")
        return PENALTY


def nll_gradient(v: HyperParams, data: Dataset) -> np.ndarray:
    objective = ProfileLikelihood(data.normalized(), v.layout)
    return objective.value_and_gradient(v.values)[1]


def start_matrix(n_starts: int, lower: np.ndarray, upper: np.ndarray, seed: int) -> np.ndarray:
    """Latin-hypercube sample of n_starts points over the box [lower, upper]."""
    if n_starts < 1:
        raise ValueError(f"n_starts must be >= 1, got {n_starts}")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.size == 0:
        return np.zeros((n_starts, 0))
    sampler = qmc.LatinHypercube(d=lower.size, seed=np.random.default_rng(seed))
    return qmc.scale(sampler.random(n_starts), lower, upper)


def generate_starts(n_starts: int, layout: ParamLayout, seed: int) -> List[HyperParams]:
    matrix = start_matrix(n_starts, layout.lower, layout.upper, seed)
    return [HyperParams(row, layout) for row in matrix]


@dataclass(frozen=True)
class FitDiagnostics:
    start_index: int
    iterations: int
    gradient_norm: float
    n_starts: int
    n_failed: int
    initial_nll: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'start_index': self.start_index,
            'iterations': self.iterations,
            'gradient_norm': self.gradient_norm,
            'n_starts': self.n_starts,
            'n_failed': self.n_failed,
            'initial_nll': self.initial_nll,
        }


@dataclass(frozen=True)
class FittedModel:
    schema: InputSchema
    config: KernelConfig
    params: HyperParams
    mu: float
    sigma2: float
    corr: CorrelationMatrix = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    data: Dataset = field(repr=False)
    train: Dataset = field(repr=False)
    nll: float
    diagnostics: FitDiagnostics
    r_inv: np.ndarray = field(repr=False)
    r_inv_one: np.ndarray = field(repr=False)
    one_r_inv_one: float

    @property
    def jitter(self) -> float:
        return self.corr.jitter

    @property
    def kernel_params(self):
        return self.params.unpack()


def assemble_model(data: Dataset, config: KernelConfig, values: np.ndarray,
                   diagnostics: FitDiagnostics, jitter: Optional[float] = None) -> FittedModel:
    """
    Build the immutable model at fixed hyperparameters.

    Fitting and reloading both go through here so a reloaded model predicts
    bit-identically.
    """
    layout = ParamLayout(data.schema, config)
    params = HyperParams(values, layout)
    train = data.normalized()
    corr = build_corr_matrix(train, config, params.unpack(), fixed_jitter=jitter)
    mu, sigma2 = profile_mu_sigma(corr, train.y)
    n = data.n
    alpha = corr.solve(train.y - mu)
    r_inv = corr.solve(np.eye(n))
    r_inv_one = corr.solve(np.ones(n))
    return FittedModel(
        schema=data.schema,
        config=config,
        params=params,
        mu=mu,
        sigma2=sigma2,
        corr=corr,
        alpha=alpha,
        data=data,
        train=train,
        nll=float(_nll(corr, sigma2)),
        diagnostics=diagnostics,
        r_inv=r_inv,
        r_inv_one=r_inv_one,
        one_r_inv_one=float(np.sum(r_inv_one)),
    )


def _local_search(objective: ProfileLikelihood, index: int, x0: np.ndarray,
                  maxiter: int, gtol: float) -> Dict[str, Any]:
    layout = objective.layout
    initial_nll, _ = objective.penalized(x0)
    result = minimize(
        objective.penalized, x0, jac=True, method='L-BFGS-B',
        bounds=layout.bounds, options={'maxiter': maxiter, 'gtol': gtol}
    )
    x = np.clip(result.x, layout.lower, layout.upper)
    nll, grad = objective.penalized(x)
    nit = int(result.nit)
    # keep the start point if the search never improved on it
    if not nll <= initial_nll:
        x, nll = np.array(x0, dtype=float), initial_nll
        grad = objective.penalized(x)[1]
    projected = np.clip(x - grad, layout.lower, layout.upper) - x
    logger.debug(f"Start {index}: nll {initial_nll:.6g} -> {nll:.6g} in {nit} iterations ({result.message})")
    return {
        'index': index,
        'x': x,
        'nll': float(nll),
        'initial_nll': float(initial_nll),
        'nit': nit,
        'gradient_norm': float(np.max(np.abs(projected))) if projected.size else 0.0,
        'message': str(result.message),
    }


def fit(data: Dataset, config: KernelConfig, n_starts: int = 200, seed: int = 0,
        starts: Optional[Sequence[Union[HyperParams, np.ndarray]]] = None,
        n_jobs: int = 1, maxiter: int = 500, gtol: float = 1e-6) -> FittedModel:
    """
    Maximum-likelihood fit from a Latin-hypercube set of starts.

    Args:
        data: Training data in native units
        config: Kernel configuration
        n_starts: Number of starts when starts is not given
        seed: Seed for the start sample
        starts: Explicit start vectors, used instead of the sample
        n_jobs: Concurrent local searches
        maxiter: Iteration cap per local search
        gtol: Projected-gradient tolerance

    Returns:
        Model at the start with the lowest final nll, earliest index on ties
    """
    if data.n < 2:
        raise DegenerateDataError(f"need at least 2 observations, got {data.n}")
    if np.ptp(data.y) == 0:
        raise DegenerateDataError("responses are constant")

    layout = ParamLayout(data.schema, config)
    if starts is None:
        start_vectors = start_matrix(n_starts, layout.lower, layout.upper, seed)
    else:
        start_vectors = np.array([_as_vector(s) for s in starts], dtype=float).reshape(len(starts), layout.size)
    objective = ProfileLikelihood(data.normalized(), layout)

    logger.info(f"Fitting {config.family} kernel: n={data.n}, {layout.size} hyperparameters, "
                f"{len(start_vectors)} starts")

    def run(item):
        index, x0 = item
        return _local_search(objective, index, x0, maxiter, gtol)

    items = list(enumerate(start_vectors))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as executor:
            results = list(executor.map(run, items))
    else:
        results = [run(item) for item in items]

    failures = [r for r in results if r['nll'] >= PENALTY]
    best = None
    for r in results:
        if r['nll'] >= PENALTY:
            continue
        if best is None or r['nll'] < best['nll']:
            best = r
    if best is None:
        raise FitError(
            f"all {len(results)} starts failed to factor the correlation matrix",
            [{'index': r['index'], 'start': r['x'].tolist(), 'message': r['message']} for r in failures]
        )
    if failures:
        logger.warning(f"{len(failures)} of {len(results)} starts hit the factorization penalty")

    diagnostics = FitDiagnostics(
        start_index=best['index'],
        iterations=best['nit'],
        gradient_norm=best['gradient_norm'],
        n_starts=len(results),
        n_failed=len(failures),
        initial_nll=best['initial_nll'],
    )
    model = assemble_model(data, config, best['x'], diagnostics)
    logger.info(f"Best start {best['index']}: nll={model.nll:.6g}, jitter={model.jitter:.1e}")
    return model


def save_model(model: FittedModel, path: Union[str, Path]) -> None:
    document = {
        'format': MODEL_FORMAT,
        'schema': model.schema.to_dict(),
        'config': model.config.to_dict(),
        'slots': model.params.layout.names,
        'params': model.params.values.tolist(),
        'mu': model.mu,
        'sigma2': model.sigma2,
        'jitter': model.jitter,
        'nll': model.nll,
        'diagnostics': model.diagnostics.to_dict(),
        'training': {
            'X': model.data.X.tolist(),
            'T': model.data.T.tolist(),
            'y': model.data.y.tolist(),
        },
    }
    with open(Path(path), 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=2)


def load_model(path: Union[str, Path]) -> FittedModel:
    with open(Path(path), 'r', encoding='utf-8') as f:
        document = json.load(f)
    if document.get('format') != MODEL_FORMAT:
        raise ValueError(f"unsupported model file format: {document.get('format')}")

    schema = InputSchema.from_dict(document['schema'])
    config = KernelConfig.from_dict(document['config'])
    training = document['training']
    data = Dataset(schema, np.array(training['X'], dtype=float).reshape(-1, schema.p),
                   np.array(training['T'], dtype=int).reshape(-1, schema.q), training['y'])
    diagnostics = FitDiagnostics(**document['diagnostics'])
    return assemble_model(data, config, np.array(document['params'], dtype=float),
                          diagnostics, jitter=float(document['jitter']))
