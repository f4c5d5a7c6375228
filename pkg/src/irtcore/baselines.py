"""Comparison samplers: uniform, k-means++ distance sampling, and l1-score
based subsampling. All emit the same weighted-subset structure as the main
coreset construction so downstream fitting code is shared."""

from __future__ import annotations

import enum

import numpy as np

from .coreset import SamplingMethod, sample_weighted
from .leverage import leverage_l1, lewis_weights_l1

__all__ = [
    "BaselineKind",
    "uniform_coreset",
    "distance_sampling_coreset",
    "score_based_coreset",
    "kmeans_pp_centers",
]


class BaselineKind(enum.Enum):
    UNIFORM = "uniform"
    DISTANCE_SAMPLING = "distance"
    L1_LEVERAGE = "l1lev"
    LEWIS_L1 = "lewis"


def uniform_coreset(n, k, seed=0, method=SamplingMethod.IID_ALIAS):
    """k indices sampled uniformly, each weighted n / k."""
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    return sample_weighted(np.ones(n), k, seed=seed, method=method)


def kmeans_pp_centers(points, n_centers, rng):
    """k-means++ seeding: the first center is uniform, each further center is
    drawn proportionally to the squared distance to the nearest chosen one."""
    n = points.shape[0]
    centers = np.empty((n_centers, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, n_centers):
        total = float(np.sum(d2))
        if total <= 0:  # all points coincide with a chosen center
            centers[i:] = centers[0]
            break
        centers[i] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def distance_sampling_coreset(points, k, centers=25, seed=0,
                              method=SamplingMethod.IID_ALIAS):
    """Sampling proportional to squared distance to the nearest of a rough
    k-means++ center set, plus a 1/n floor so points sitting on centers stay
    sampleable."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= centers <= n:
        raise ValueError(f"centers must lie in [1, {n}]")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xD157]))
    C = kmeans_pp_centers(points, centers, rng)
    d2 = np.min(
        np.sum((points[:, None, :] - C[None, :, :]) ** 2, axis=2), axis=1
    )
    total = float(np.sum(d2))
    scores = (d2 / total if total > 0 else np.zeros(n)) + 1.0 / n
    return sample_weighted(scores, k, seed=seed, method=method)


def score_based_coreset(kind, X, k, seed=0, method=SamplingMethod.IID_ALIAS):
    """Subsampling proportional to l1 leverage scores or l1 Lewis weights,
    with the same 1/n uniform floor as the main 2PL recipe."""
    kind = BaselineKind(kind)
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if kind is BaselineKind.L1_LEVERAGE:
        base = leverage_l1(X).values
    elif kind is BaselineKind.LEWIS_L1:
        base = lewis_weights_l1(X).values
    else:
        raise ValueError(f"score_based_coreset does not handle {kind}")
    return sample_weighted(base + 1.0 / n, k, seed=seed, method=method)
