"""
Design of Experiments
Maximin Latin hypercube training designs, random level assignment and
uniform hold-out test sets, all deterministic per seed.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import pdist

from .mixed_input import InputSchema, points_frame


@dataclass(frozen=True)
class Design:
    """Points on the unit cube with 1-based level assignments."""
    X: np.ndarray
    T: np.ndarray
    seed: int
    score: float
    level_seed: Optional[int] = None
    initial_score: Optional[float] = None
    accepted: int = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]


def min_pairwise_distance(X: np.ndarray) -> float:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        return float('inf')
    return float(np.min(pdist(X)))


def random_lhd(n: int, p: int, rng: np.random.Generator, jitter: bool = False) -> np.ndarray:
    """One point per stratum [(k-1)/n, k/n) in every column."""
    X = np.empty((n, p))
    for j in range(p):
        offset = rng.uniform(size=n) if jitter else 0.5
        X[:, j] = (rng.permutation(n) + offset) / n
    return X


def maximin_lhd(n: int, p: int, seed: int, budget: int = 10000, jitter: bool = False) -> Design:
    """
    Latin hypercube improved by within-column swaps that never lower the minimum distance.

    Args:
        n: Number of points
        p: Number of columns
        seed: Random seed
        budget: Number of swap proposals
        jitter: Place points uniformly inside strata instead of at midpoints

    Returns:
        Design with an empty level block
    """
    if n < 1 or p < 1:
        raise ValueError(f"maximin_lhd needs n >= 1 and p >= 1, got n={n}, p={p}")
    rng = np.random.default_rng(seed)
    X = random_lhd(n, p, rng, jitter)
    empty_levels = np.zeros((n, 0), dtype=int)
    if n < 2:
        return Design(X, empty_levels, seed, float('inf'), initial_score=float('inf'))

    diff = X[:, None, :] - X[None, :, :]
    D = np.sum(diff ** 2, axis=-1)
    np.fill_diagonal(D, np.inf)
    best = D.min()
    initial = best
    accepted = 0

    for _ in range(budget):
        col = rng.integers(p)
        a, b = rng.choice(n, size=2, replace=False)
        X[[a, b], col] = X[[b, a], col]
        old_a = D[a].copy()
        old_b = D[b].copy()
        for row in (a, b):
            d = np.sum((X - X[row]) ** 2, axis=1)
            d[row] = np.inf
            D[row, :] = d
            D[:, row] = d
        candidate = D.min()
        if candidate >= best:
            best = candidate
            accepted += 1
        else:
            X[[a, b], col] = X[[b, a], col]
            D[a, :] = old_a
            D[:, a] = old_a
            D[b, :] = old_b
            D[:, b] = old_b

    return Design(X, empty_levels, seed, float(np.sqrt(best)),
                  initial_score=float(np.sqrt(initial)), accepted=accepted)


def assign_levels(n: int, schema: InputSchema, seed: int, stratified: bool = False) -> np.ndarray:
    """
    Draw 1-based levels for n points, independently per factor.

    Args:
        n: Number of points
        schema: Schema supplying the level counts
        seed: Random seed
        stratified: Balance level counts instead of drawing i.i.d.

    Returns:
        (n, q) integer array
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    T = np.zeros((n, schema.q), dtype=int)
    for j, m in enumerate(schema.level_counts):
        if stratified:
            T[:, j] = rng.permutation(np.resize(np.arange(1, m + 1), n))
        else:
            T[:, j] = rng.integers(1, m + 1, size=n)
    return T


def training_design(n: int, schema: InputSchema, design_seed: int, level_seed: int,
                    budget: int = 10000, jitter: bool = False, stratified: bool = False) -> Design:
    design = maximin_lhd(n, schema.p, design_seed, budget, jitter)
    T = assign_levels(n, schema, level_seed, stratified)
    return Design(design.X, T, design_seed, design.score, level_seed,
                  design.initial_score, design.accepted)


def uniform_test_set(N: int, schema: InputSchema, seed: int) -> Design:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(N, schema.p))
    T = np.zeros((N, schema.q), dtype=int)
    for j, m in enumerate(schema.level_counts):
        T[:, j] = rng.integers(1, m + 1, size=N)
    return Design(X, T, seed, float('nan'))


def write_design_csv(design: Design, schema: InputSchema, path: Union[str, Path]) -> None:
    """Unit-cube columns and 1-based levels, with the seeds in a header comment."""
    frame = points_frame(design.X, design.T, schema, use_labels=False)
    with open(Path(path), 'w', encoding='utf-8', newline='') as f:
        f.write(f"# seed={design.seed} level_seed={design.level_seed} score={design.score!r}\n")
        frame.to_csv(f, index=False)
