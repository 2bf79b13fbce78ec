"""
Latent Space Analysis
Summaries of an estimated latent map: principal-axis ordering, rank agreement
with a known underlying variable and cluster separation.
"""

from typing import Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.stats import spearmanr


def principal_axis(coords: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Project latent points onto their first principal axis.

    Args:
        coords: (m, d) latent coordinates

    Returns:
        (projection of each point, smaller-to-larger principal variance ratio)
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    centered = coords - coords.mean(axis=0)
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    projection = centered @ vt[0]
    variances = singular ** 2
    if variances.size < 2 or variances[0] == 0:
        return projection, 0.0
    return projection, float(variances[-1] / variances[0])


def rank_agreement(projection: Sequence[float], reference: Sequence[float]) -> float:
    """Spearman rank correlation between a latent projection and a reference variable."""
    rho, _ = spearmanr(projection, reference)
    return float(rho)


def cluster_separation(coords: np.ndarray, groups: Sequence[Sequence[int]]) -> Tuple[float, float]:
    """
    Mean inter-cluster and intra-cluster Euclidean distances.

    Args:
        coords: (m, d) latent coordinates
        groups: Lists of 1-based levels forming each cluster

    Returns:
        (mean inter-cluster distance, mean intra-cluster distance)
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    members = [coords[np.asarray(group, dtype=int) - 1] for group in groups]

    intra = [d for block in members if len(block) > 1 for d in pdist(block)]
    inter = []
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            inter.extend(cdist(members[a], members[b]).ravel())
    return float(np.mean(inter)) if inter else 0.0, float(np.mean(intra)) if intra else 0.0
