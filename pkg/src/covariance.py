"""
Covariance Kernels
Correlation functions over mixed quantitative/qualitative inputs and
correlation-matrix assembly with escalating jitter.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist

from .errors import KernelError, SingularMatrixError
from .mixed_input import Dataset

logger = logging.getLogger(__name__)

FAMILIES = ('lv', 'uc', 'mc', 'add_uc', 'numeric')

# model name -> (family, latent dimension)
MODEL_FAMILIES = {
    'LV2': ('lv', 2),
    'LV1': ('lv', 1),
    'UC': ('uc', 2),
    'MC': ('mc', 2),
    'AddUC': ('add_uc', 2),
    'BNGP': ('numeric', 2),
}


@dataclass(frozen=True)
class JitterPolicy:
    initial: float = 1e-8
    factor: float = 10.0
    cap: float = 1e-4

    def __post_init__(self):
        if not 0 < self.initial <= self.cap:
            raise KernelError(f"jitter policy needs 0 < initial <= cap, got {self.initial}, {self.cap}")
        if self.factor <= 1:
            raise KernelError(f"jitter growth factor must exceed 1, got {self.factor}")

    def schedule(self) -> List[float]:
        """Jitter values tried in order, ending at the cap."""
        values = []
        k = 0
        while True:
            value = self.initial * self.factor ** k
            if value > self.cap * (1 + 1e-9):
                break
            values.append(value)
            k += 1
        return values


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family and the search box for its hyperparameters."""
    family: str = 'lv'
    lv_dim: int = 2
    jitter: JitterPolicy = field(default_factory=JitterPolicy)
    theta_bounds: Tuple[float, float] = (-3.0, 3.0)
    latent_bound: float = 2.0
    uc_upper: float = 5.0
    mc_upper: float = 5.0
    log_var_bounds: Tuple[float, float] = (-10.0, 10.0)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelError(f"unknown kernel family '{self.family}', expected one of {FAMILIES}")
        if self.lv_dim not in (1, 2):
            raise KernelError(f"latent dimension must be 1 or 2, got {self.lv_dim}")
        if not self.theta_bounds[0] < self.theta_bounds[1]:
            raise KernelError("theta bounds must be increasing")
        if self.latent_bound <= 0 or self.uc_upper <= 0 or self.mc_upper <= 0:
            raise KernelError("latent and level-parameter bounds must be positive")

    @classmethod
    def for_model(cls, name: str, **overrides) -> 'KernelConfig':
        if name not in MODEL_FAMILIES:
            raise KernelError(f"unknown model '{name}', expected one of {list(MODEL_FAMILIES)}")
        family, lv_dim = MODEL_FAMILIES[name]
        return cls(family=family, lv_dim=lv_dim, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family,
            'lv_dim': self.lv_dim,
            'jitter': {'initial': self.jitter.initial, 'factor': self.jitter.factor, 'cap': self.jitter.cap},
            'theta_bounds': list(self.theta_bounds),
            'latent_bound': self.latent_bound,
            'uc_upper': self.uc_upper,
            'mc_upper': self.mc_upper,
            'log_var_bounds': list(self.log_var_bounds),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'KernelConfig':
        data = dict(data)
        jitter = JitterPolicy(**data.pop('jitter', {}))
        for key in ('theta_bounds', 'log_var_bounds'):
            if key in data:
                data[key] = tuple(float(v) for v in data[key])
        return cls(jitter=jitter, **data)


@dataclass(frozen=True)
class QuantCorrParams:
    """Log10 roughness per quantitative input; phi = 10**theta."""
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'theta', np.array(self.theta, dtype=float).ravel())

    @property
    def phi(self) -> np.ndarray:
        return 10.0 ** self.theta


@dataclass(frozen=True)
class LatentMap:
    """
    Latent coordinates per factor, one (m_j, dim) array each.

    Level 1 sits at the origin; in 2D level 2 sits on the first axis.
    """
    coords: Tuple[np.ndarray, ...]

    def __post_init__(self):
        coords = tuple(np.array(z, dtype=float).reshape(len(z), -1) for z in self.coords)
        object.__setattr__(self, 'coords', coords)

    @property
    def dim(self) -> int:
        return self.coords[0].shape[1] if self.coords else 0

    @property
    def level_counts(self) -> Tuple[int, ...]:
        return tuple(z.shape[0] for z in self.coords)

    @staticmethod
    def free_count(m: int, dim: int) -> int:
        return m - 1 if dim == 1 else 2 * m - 3

    @classmethod
    def from_free(cls, values: Sequence[float], level_counts: Sequence[int], dim: int) -> 'LatentMap':
        values = np.asarray(values, dtype=float).ravel()
        expected = sum(cls.free_count(m, dim) for m in level_counts)
        if values.size != expected:
            raise KernelError(f"expected {expected} free latent coordinates, got {values.size}")
        coords = []
        k = 0
        for m in level_counts:
            z = np.zeros((m, dim))
            if dim == 1:
                z[1:, 0] = values[k:k + m - 1]
                k += m - 1
            else:
                z[1, 0] = values[k]
                k += 1
                for level in range(2, m):
                    z[level, :] = values[k:k + 2]
                    k += 2
            coords.append(z)
        return cls(tuple(coords))

    def free_values(self) -> np.ndarray:
        values = []
        for z in self.coords:
            if self.dim == 1:
                values.extend(z[1:, 0])
            else:
                values.append(z[1, 0])
                for level in range(2, z.shape[0]):
                    values.extend(z[level, :])
        return np.array(values, dtype=float)

    def is_pinned(self) -> bool:
        for z in self.coords:
            if np.any(z[0] != 0.0):
                return False
            if self.dim == 2 and z[1, 1] != 0.0:
                return False
        return True

    def distances(self, factor: int) -> np.ndarray:
        """Squared latent distances between all level pairs of one factor (0-based)."""
        z = self.coords[factor]
        diff = z[:, None, :] - z[None, :, :]
        return np.sum(diff ** 2, axis=-1)

    def transformed(self, factor: int, rotation: np.ndarray, translation: np.ndarray) -> 'LatentMap':
        coords = list(self.coords)
        coords[factor] = coords[factor] @ np.asarray(rotation, dtype=float).T + np.asarray(translation, dtype=float)
        return LatentMap(tuple(coords))


def uc_pairs(m: int) -> List[Tuple[int, int]]:
    """Unordered level pairs (l, l') with 1 <= l <= l' <= m-1."""
    return [(l, l2) for l in range(1, m) for l2 in range(l, m)]


def indicator_W(l: int, l2: int, t: int) -> int:
    """Pair indicator I_l(t) + I_l'(t), or I_l(t) when l = l'."""
    if l == l2:
        return int(t == l)
    return int(t == l) + int(t == l2)


def uc_features(m: int) -> np.ndarray:
    """(m, m(m-1)/2) matrix of pair indicators; row t-1 holds the features of level t."""
    pairs = uc_pairs(m)
    features = np.zeros((m, len(pairs)))
    for t in range(1, m + 1):
        for k, (l, l2) in enumerate(pairs):
            features[t - 1, k] = indicator_W(l, l2, t)
    return features


@dataclass(frozen=True)
class UCParams:
    """Non-negative pair parameters per factor, ordered as uc_pairs(m)."""
    pairs: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, 'pairs', tuple(np.array(v, dtype=float).ravel() for v in self.pairs))

    def exponents(self, factor: int, m: int) -> np.ndarray:
        """(m, m) matrix of sum_k phi_k (F[a,k] - F[b,k])^2."""
        phi = self.pairs[factor]
        expected = m * (m - 1) // 2
        if phi.size != expected:
            raise KernelError(f"factor {factor + 1}: expected {expected} pair parameters, got {phi.size}")
        features = uc_features(m)
        diff = features[:, None, :] - features[None, :, :]
        return np.sum(phi * diff ** 2, axis=-1)


@dataclass(frozen=True)
class MCParams:
    """Per-level parameters; tau_ab = exp(-(theta_a + theta_b)) for a != b."""
    theta: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, 'theta', tuple(np.array(v, dtype=float).ravel() for v in self.theta))

    def tau(self, factor: int) -> np.ndarray:
        theta = self.theta[factor]
        tau = np.exp(-(theta[:, None] + theta[None, :]))
        np.fill_diagonal(tau, 1.0)
        return tau


@dataclass(frozen=True)
class AddUCParams:
    """One (log variance, roughness, UC) component per factor."""
    log_var: np.ndarray
    thetas: np.ndarray
    uc: UCParams

    def __post_init__(self):
        object.__setattr__(self, 'log_var', np.array(self.log_var, dtype=float).ravel())
        thetas = np.array(self.thetas, dtype=float)
        object.__setattr__(self, 'thetas', thetas.reshape(self.log_var.size, -1))

    @property
    def weights(self) -> np.ndarray:
        """Normalized component weights exp(s_j) / sum_k exp(s_k)."""
        shifted = np.exp(self.log_var - np.max(self.log_var))
        return shifted / np.sum(shifted)


@dataclass(frozen=True)
class KernelParams:
    family: str
    theta: Optional[QuantCorrParams] = None
    latent: Optional[LatentMap] = None
    uc: Optional[UCParams] = None
    mc: Optional[MCParams] = None
    add_uc: Optional[AddUCParams] = None

    def flat(self) -> np.ndarray:
        parts = []
        if self.theta is not None:
            parts.append(self.theta.theta)
        if self.latent is not None:
            parts.append(self.latent.free_values())
        if self.uc is not None:
            parts.extend(self.uc.pairs)
        if self.mc is not None:
            parts.extend(self.mc.theta)
        if self.add_uc is not None:
            parts.extend([self.add_uc.log_var, self.add_uc.thetas.ravel()])
            parts.extend(self.add_uc.uc.pairs)
        return np.concatenate(parts) if parts else np.zeros(0)


def _theta_array(theta) -> np.ndarray:
    if isinstance(theta, QuantCorrParams):
        return theta.theta
    return np.array(theta, dtype=float).ravel()


def gaussian_corr(x: Sequence[float], x2: Sequence[float], theta) -> float:
    """
    Gaussian product correlation exp(-sum_i 10**theta_i (x_i - x'_i)^2).

    Args:
        x: First quantitative vector
        x2: Second quantitative vector
        theta: Log10 roughness per input

    Returns:
        Correlation in (0, 1]
    """
    return float(np.exp(-_gaussian_exponent(x, x2, theta)))


def _gaussian_exponent(x, x2, theta) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    theta = _theta_array(theta)
    if not x.size == x2.size == theta.size:
        raise KernelError(f"length mismatch: x {x.size}, x' {x2.size}, theta {theta.size}")
    return float(np.sum(10.0 ** theta * (x - x2) ** 2))


def _check_levels(t: Sequence[int], level_counts: Sequence[int]) -> np.ndarray:
    t = np.asarray(t, dtype=int).ravel()
    if t.size != len(level_counts):
        raise KernelError(f"expected {len(level_counts)} factor levels, got {t.size}")
    for j, (level, m) in enumerate(zip(t, level_counts), 1):
        if not 1 <= level <= m:
            raise KernelError(f"factor {j} level out of range: {level} not in 1..{m}")
    return t


def lv_corr(w, w2, theta, latent: LatentMap) -> float:
    """Latent-variable correlation between two mixed points."""
    t = _check_levels(w.t, latent.level_counts)
    t2 = _check_levels(w2.t, latent.level_counts)
    exponent = _gaussian_exponent(w.x, w2.x, theta)
    for j in range(len(latent.coords)):
        exponent += latent.distances(j)[t[j] - 1, t2[j] - 1]
    return float(np.exp(-exponent))


def uc_corr(w, w2, theta, uc: UCParams) -> float:
    level_counts = [int(round((1 + np.sqrt(1 + 8 * v.size)) / 2)) for v in uc.pairs]
    t = _check_levels(w.t, level_counts)
    t2 = _check_levels(w2.t, level_counts)
    exponent = sum(uc.exponents(j, m)[t[j] - 1, t2[j] - 1] for j, m in enumerate(level_counts))
    return float(np.exp(-exponent) * gaussian_corr(w.x, w2.x, theta))


def mc_corr(w, w2, theta, mc: MCParams) -> float:
    level_counts = [v.size for v in mc.theta]
    t = _check_levels(w.t, level_counts)
    t2 = _check_levels(w2.t, level_counts)
    tau = np.prod([mc.tau(j)[t[j] - 1, t2[j] - 1] for j in range(len(level_counts))])
    return float(tau * gaussian_corr(w.x, w2.x, theta))


def add_uc_cov(w, w2, params: AddUCParams) -> float:
    """Unnormalized additive covariance sum_j exp(s_j) tau^(j) g(x, x'; theta^(j))."""
    q = params.log_var.size
    if q < 1:
        raise KernelError("additive UC kernel needs at least one factor")
    level_counts = [int(round((1 + np.sqrt(1 + 8 * v.size)) / 2)) for v in params.uc.pairs]
    t = _check_levels(w.t, level_counts)
    t2 = _check_levels(w2.t, level_counts)
    total = 0.0
    for j, m in enumerate(level_counts):
        tau = np.exp(-params.uc.exponents(j, m)[t[j] - 1, t2[j] - 1])
        total += np.exp(params.log_var[j]) * tau * gaussian_corr(w.x, w2.x, params.thetas[j])
    return float(total)


def tau_matrix(params: KernelParams, factor: int, m: int) -> np.ndarray:
    """(m, m) level correlation matrix of one factor (0-based) under the params' family."""
    if params.family == 'lv':
        return np.exp(-params.latent.distances(factor))
    if params.family == 'uc':
        return np.exp(-params.uc.exponents(factor, m))
    if params.family == 'mc':
        return params.mc.tau(factor)
    if params.family == 'add_uc':
        return np.exp(-params.add_uc.uc.exponents(factor, m))
    raise KernelError(f"family '{params.family}' has no level correlations")


def quant_distance(Xa: np.ndarray, Xb: np.ndarray, theta) -> np.ndarray:
    """Weighted squared distances sum_i 10**theta_i (xa_i - xb_i)^2 between row sets."""
    phi = 10.0 ** _theta_array(theta)
    if Xa.shape[1] == 0:
        return np.zeros((Xa.shape[0], Xb.shape[0]))
    return cdist(Xa, Xb, metric='sqeuclidean', w=phi)


def level_exponents(params: KernelParams, Ta: np.ndarray, Tb: np.ndarray, level_counts: Sequence[int]) -> np.ndarray:
    """Summed level exponents for the exponential families (lv, uc)."""
    exponent = np.zeros((Ta.shape[0], Tb.shape[0]))
    for j, m in enumerate(level_counts):
        if params.family == 'lv':
            table = params.latent.distances(j)
        else:
            table = params.uc.exponents(j, m)
        exponent += table[np.ix_(Ta[:, j] - 1, Tb[:, j] - 1)]
    return exponent


def add_uc_components(params: KernelParams, Xa: np.ndarray, Ta: np.ndarray,
                      Xb: np.ndarray, Tb: np.ndarray, level_counts: Sequence[int]) -> List[np.ndarray]:
    """Per-factor correlation components tau^(j) * g(x, x'; theta^(j)), each with unit diagonal."""
    add = params.add_uc
    components = []
    for j, m in enumerate(level_counts):
        tau = np.exp(-add.uc.exponents(j, m))[np.ix_(Ta[:, j] - 1, Tb[:, j] - 1)]
        components.append(tau * np.exp(-quant_distance(Xa, Xb, add.thetas[j])))
    return components


def cross_correlation(Xa: np.ndarray, Ta: np.ndarray, Xb: np.ndarray, Tb: np.ndarray,
                      params: KernelParams, level_counts: Sequence[int]) -> np.ndarray:
    """
    Correlation between two sets of normalized mixed points.

    The additive UC family returns the weight-normalized sum so every
    family yields unit self-correlation.

    Args:
        Xa, Ta: First point set (normalized x, 1-based levels)
        Xb, Tb: Second point set
        params: Kernel parameters
        level_counts: Levels per factor

    Returns:
        (len(Xa), len(Xb)) correlation array
    """
    Xa = np.asarray(Xa, dtype=float)
    Xb = np.asarray(Xb, dtype=float)
    Ta = np.asarray(Ta, dtype=int).reshape(Xa.shape[0], -1)
    Tb = np.asarray(Tb, dtype=int).reshape(Xb.shape[0], -1)
    family = params.family

    if family == 'numeric':
        if len(level_counts):
            raise KernelError("numeric-only kernel takes no qualitative factors")
        return np.exp(-quant_distance(Xa, Xb, params.theta))
    if family in ('lv', 'uc'):
        exponent = quant_distance(Xa, Xb, params.theta) + level_exponents(params, Ta, Tb, level_counts)
        return np.exp(-exponent)
    if family == 'mc':
        corr = np.exp(-quant_distance(Xa, Xb, params.theta))
        for j in range(len(level_counts)):
            corr = corr * params.mc.tau(j)[np.ix_(Ta[:, j] - 1, Tb[:, j] - 1)]
        return corr
    if family == 'add_uc':
        weights = params.add_uc.weights
        components = add_uc_components(params, Xa, Ta, Xb, Tb, level_counts)
        return sum(w * c for w, c in zip(weights, components))
    raise KernelError(f"unknown kernel family '{family}'")


@dataclass
class CorrelationMatrix:
    """Jittered correlation matrix with its lower Cholesky factor."""
    R: np.ndarray
    factor: Tuple[np.ndarray, bool]
    jitter: float

    @classmethod
    def factorize(cls, R: np.ndarray, jitter: float = 0.0) -> 'CorrelationMatrix':
        R = np.asarray(R, dtype=float)
        return cls(R, cho_factor(R, lower=True, check_finite=False), jitter)

    @property
    def n(self) -> int:
        return self.R.shape[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        return cho_solve(self.factor, b, check_finite=False)

    def log_det(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.factor[0]))))


def symmetrize(K: np.ndarray) -> np.ndarray:
    """Mirror the upper triangle and set a unit diagonal."""
    R = np.triu(K) + np.triu(K, 1).T
    np.fill_diagonal(R, 1.0)
    return R


def build_corr_matrix(data: Dataset, config: KernelConfig, params: KernelParams,
                      fixed_jitter: Optional[float] = None) -> CorrelationMatrix:
    """
    Assemble R over normalized training points and factor it.

    Jitter starts at the policy's initial value and grows until the Cholesky
    factorization succeeds; a fixed jitter skips the search.

    Args:
        data: Normalized dataset
        config: Kernel configuration
        params: Kernel parameters
        fixed_jitter: Exact jitter to use instead of escalating

    Returns:
        Factored correlation matrix and the jitter used
    """
    K = cross_correlation(data.X, data.T, data.X, data.T, params, data.schema.level_counts)
    R0 = symmetrize(K)
    if not np.all(np.isfinite(R0)):
        raise SingularMatrixError("correlation matrix has non-finite entries", params.flat())

    schedule = [fixed_jitter] if fixed_jitter is not None else config.jitter.schedule()
    identity = np.eye(R0.shape[0])
    for jitter in schedule:
        R = R0 + jitter * identity
        try:
            corr = CorrelationMatrix.factorize(R, jitter)
        except np.linalg.LinAlgError:
            continue
        if jitter != schedule[0]:
            logger.debug(f"Jitter escalated to {jitter:.1e}")
        return corr
    logger.debug(f"Factorization failed at jitter cap {schedule[-1]:.1e}")
    raise SingularMatrixError(
        f"correlation matrix not positive definite at jitter {schedule[-1]:.1e}", params.flat()
    )
