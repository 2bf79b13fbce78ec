"""
Hyperparameter Packing
Maps the flat optimizer vector to named kernel parameters and back, and
computes the derivative of the correlation matrix with respect to each slot.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .covariance import (
    AddUCParams, KernelConfig, KernelParams, LatentMap, MCParams, QuantCorrParams,
    UCParams, add_uc_components, cross_correlation, uc_features, uc_pairs
)
from .errors import KernelError
from .mixed_input import InputSchema

LN10 = np.log(10.0)


@dataclass(frozen=True)
class Slot:
    name: str
    lower: float
    upper: float


class ParamLayout:
    """Slot descriptor for one (schema, kernel config) pair."""

    def __init__(self, schema: InputSchema, config: KernelConfig):
        self.schema = schema
        self.config = config
        self.p = schema.p
        self.level_counts = schema.level_counts
        if config.family == 'numeric' and schema.q:
            raise KernelError("numeric-only kernel takes no qualitative factors")
        if config.family == 'add_uc' and not schema.q:
            raise KernelError("additive UC kernel needs at least one factor")
        self.slots = self._build_slots()

    def _build_slots(self) -> List[Slot]:
        config = self.config
        names = self.schema.input_names
        factors = self.schema.factor_names
        theta_lo, theta_hi = config.theta_bounds
        slots = []

        if config.family != 'add_uc':
            slots.extend(Slot(f"theta[{name}]", theta_lo, theta_hi) for name in names)

        if config.family == 'lv':
            bound = config.latent_bound
            for factor, m in zip(factors, self.level_counts):
                if config.lv_dim == 1:
                    slots.extend(Slot(f"z[{factor}][{level}]", -bound, bound) for level in range(2, m + 1))
                else:
                    slots.append(Slot(f"z[{factor}][2][1]", -bound, bound))
                    for level in range(3, m + 1):
                        slots.append(Slot(f"z[{factor}][{level}][1]", -bound, bound))
                        slots.append(Slot(f"z[{factor}][{level}][2]", -bound, bound))
        elif config.family == 'uc':
            for factor, m in zip(factors, self.level_counts):
                slots.extend(Slot(f"uc[{factor}][{l},{l2}]", 0.0, config.uc_upper) for l, l2 in uc_pairs(m))
        elif config.family == 'mc':
            for factor, m in zip(factors, self.level_counts):
                slots.extend(Slot(f"mc[{factor}][{level}]", 0.0, config.mc_upper) for level in range(1, m + 1))
        elif config.family == 'add_uc':
            s_lo, s_hi = config.log_var_bounds
            for factor, m in zip(factors, self.level_counts):
                slots.append(Slot(f"s[{factor}]", s_lo, s_hi))
                slots.extend(Slot(f"theta[{factor}][{name}]", theta_lo, theta_hi) for name in names)
                slots.extend(Slot(f"uc[{factor}][{l},{l2}]", 0.0, config.uc_upper) for l, l2 in uc_pairs(m))
        return slots

    @property
    def size(self) -> int:
        return len(self.slots)

    @property
    def names(self) -> List[str]:
        return [slot.name for slot in self.slots]

    @property
    def lower(self) -> np.ndarray:
        return np.array([slot.lower for slot in self.slots], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([slot.upper for slot in self.slots], dtype=float)

    @property
    def bounds(self) -> List[Tuple[float, float]]:
        return [(slot.lower, slot.upper) for slot in self.slots]

    def _check(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        if v.size != self.size:
            raise KernelError(f"expected {self.size} hyperparameters, got {v.size}")
        return v

    def unpack(self, v: np.ndarray) -> KernelParams:
        v = self._check(v)
        family = self.config.family
        p = self.p
        if family == 'add_uc':
            log_var, thetas, pairs = [], [], []
            k = 0
            for m in self.level_counts:
                n_pairs = m * (m - 1) // 2
                log_var.append(v[k])
                thetas.append(v[k + 1:k + 1 + p])
                pairs.append(v[k + 1 + p:k + 1 + p + n_pairs])
                k += 1 + p + n_pairs
            return KernelParams(family, add_uc=AddUCParams(np.array(log_var), np.array(thetas).reshape(len(log_var), p),
                                                           UCParams(tuple(pairs))))

        theta = QuantCorrParams(v[:p])
        rest = v[p:]
        if family == 'numeric':
            return KernelParams(family, theta=theta)
        if family == 'lv':
            return KernelParams(family, theta=theta,
                                latent=LatentMap.from_free(rest, self.level_counts, self.config.lv_dim))
        blocks = []
        k = 0
        for m in self.level_counts:
            width = m * (m - 1) // 2 if family == 'uc' else m
            blocks.append(rest[k:k + width])
            k += width
        if family == 'uc':
            return KernelParams(family, theta=theta, uc=UCParams(tuple(blocks)))
        return KernelParams(family, theta=theta, mc=MCParams(tuple(blocks)))

    def pack(self, params: KernelParams) -> np.ndarray:
        if params.family != self.config.family:
            raise KernelError(f"params are for family '{params.family}', layout is '{self.config.family}'")
        if params.family == 'add_uc':
            add = params.add_uc
            parts = []
            for j in range(len(self.level_counts)):
                parts.extend([[add.log_var[j]], add.thetas[j], add.uc.pairs[j]])
            return self._check(np.concatenate(parts))
        return self._check(params.flat())

    def derivatives(self, v: np.ndarray, X: np.ndarray, T: np.ndarray,
                    K: Optional[np.ndarray] = None) -> List[np.ndarray]:
        """
        dR/dv_k for every slot, evaluated at normalized training points.

        Args:
            v: Packed hyperparameters
            X: Normalized quantitative inputs (n, p)
            T: 1-based levels (n, q)
            K: Unjittered correlation matrix at v, if already computed

        Returns:
            One (n, n) symmetric array per slot
        """
        params = self.unpack(v)
        sq = [(X[:, i, None] - X[None, :, i]) ** 2 for i in range(self.p)]
        if params.family == 'add_uc':
            return self._add_uc_derivatives(params, X, T, sq)
        if K is None:
            K = cross_correlation(X, T, X, T, params, self.level_counts)

        phi = params.theta.phi
        grads = [-K * (LN10 * phi[i] * sq[i]) for i in range(self.p)]

        if params.family == 'lv':
            grads.extend(self._latent_derivatives(params.latent, T, K))
        elif params.family == 'uc':
            for j, m in enumerate(self.level_counts):
                features = uc_features(m)[T[:, j] - 1]
                for k in range(features.shape[1]):
                    f = features[:, k]
                    grads.append(-K * (f[:, None] - f[None, :]) ** 2)
        elif params.family == 'mc':
            for j, m in enumerate(self.level_counts):
                levels = T[:, j]
                differ = levels[:, None] != levels[None, :]
                for level in range(1, m + 1):
                    ind = (levels == level).astype(float)
                    grads.append(-K * ((ind[:, None] + ind[None, :]) * differ))
        return grads

    def _latent_derivatives(self, latent: LatentMap, T: np.ndarray, K: np.ndarray) -> List[np.ndarray]:
        grads = []
        dim = latent.dim
        for j, m in enumerate(self.level_counts):
            levels = T[:, j]
            z = latent.coords[j][levels - 1]
            for level in range(2, m + 1):
                ind = (levels == level).astype(float)
                d_ind = ind[:, None] - ind[None, :]
                # level 2 in 2D only moves along the first axis
                axes = [0] if dim == 1 or level == 2 else [0, 1]
                for c in axes:
                    d_z = z[:, c, None] - z[None, :, c]
                    grads.append(-K * (2.0 * d_z * d_ind))
        return grads

    def _add_uc_derivatives(self, params: KernelParams, X: np.ndarray, T: np.ndarray,
                            sq: List[np.ndarray]) -> List[np.ndarray]:
        add = params.add_uc
        weights = add.weights
        components = add_uc_components(params, X, T, X, T, self.level_counts)
        R = sum(w * c for w, c in zip(weights, components))
        grads = []
        for j, m in enumerate(self.level_counts):
            weighted = weights[j] * components[j]
            grads.append(weighted - weights[j] * R)
            phi = 10.0 ** add.thetas[j]
            grads.extend(-weighted * (LN10 * phi[i] * sq[i]) for i in range(self.p))
            features = uc_features(m)[T[:, j] - 1]
            for k in range(features.shape[1]):
                f = features[:, k]
                grads.append(-weighted * (f[:, None] - f[None, :]) ** 2)
        return grads


@dataclass(frozen=True)
class HyperParams:
    """Packed hyperparameter vector with its slot layout."""
    values: np.ndarray
    layout: ParamLayout

    def __post_init__(self):
        values = self.layout._check(self.values).copy()
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def unpack(self) -> KernelParams:
        return self.layout.unpack(self.values)

    def in_bounds(self) -> bool:
        return bool(np.all(self.values >= self.layout.lower) and np.all(self.values <= self.layout.upper))
