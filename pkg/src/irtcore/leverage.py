"""Row-importance scores for tall 2-column matrices: exact and CountSketch
approximated l2 leverage, exact l1 leverage via an angular sweep, and l1
Lewis weights by fixed-point iteration."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ScoreKind",
    "ScoreVector",
    "leverage_l2",
    "leverage_l2_sketched",
    "leverage_l1",
    "lewis_weights_l1",
]

_RANK_TOL = 1e-12


class ScoreKind(enum.Enum):
    L2_LEVERAGE = "l2_leverage"
    L2_LEVERAGE_SKETCHED = "l2_leverage_sketched"
    L1_LEVERAGE = "l1_leverage"
    LEWIS_L1 = "lewis_l1"


@dataclass
class ScoreVector:
    values: np.ndarray
    kind: ScoreKind
    converged: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(self.values < 0):
            raise ValueError("scores must be nonnegative")


def _check_matrix(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2 or X.shape[0] < 1:
        raise ValueError("expected an (n, 2) matrix with n >= 1")
    return X


def leverage_l2(X):
    """Exact l2 leverage scores: squared row norms of an orthonormal basis
    of the column space. Scores lie in [0, 1] and sum to rank(X)."""
    X = _check_matrix(X)
    # SVD handles rank deficiency by dropping negligible singular directions.
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    keep = s > _RANK_TOL * max(s[0], 1e-300)
    if not np.any(keep):
        return ScoreVector(np.zeros(X.shape[0]), ScoreKind.L2_LEVERAGE)
    values = np.sum(U[:, keep] ** 2, axis=1)
    return ScoreVector(np.minimum(values, 1.0), ScoreKind.L2_LEVERAGE)


def leverage_l2_sketched(X, sketch_rows=64, seed=0):
    """CountSketch-approximated l2 leverage scores.

    Sketches X down to sketch_rows rows (one random target row and one random
    sign per input row), QR-factors the sketch, and returns the squared row
    norms of X R^-1. A rank-deficient sketch is retried with a fresh seed up
    to 3 times before falling back to the exact computation.
    """
    X = _check_matrix(X)
    if sketch_rows < 16:
        raise ValueError("sketch_rows must be at least 16")
    n = X.shape[0]
    for attempt in range(3):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), attempt]))
        target = rng.integers(0, sketch_rows, size=n)
        sign = rng.integers(0, 2, size=n) * 2.0 - 1.0
        SX = np.zeros((sketch_rows, 2))
        np.add.at(SX, target, sign[:, None] * X)
        r = np.linalg.qr(SX, mode="r")
        if abs(r[0, 0]) > _RANK_TOL and abs(r[1, 1]) > _RANK_TOL:
            Xr = np.linalg.solve(r.T, X.T).T  # X @ R^-1 without forming R^-1
            values = np.sum(Xr**2, axis=1)
            return ScoreVector(values, ScoreKind.L2_LEVERAGE_SKETCHED)
    exact = leverage_l2(X)
    return ScoreVector(exact.values, ScoreKind.L2_LEVERAGE_SKETCHED)


def _candidate_directions(X):
    """Unit directions orthogonal to each nonzero row, folded into [0, pi)."""
    norms = np.hypot(X[:, 0], X[:, 1])
    nz = norms > 0
    phi = np.arctan2(X[nz, 1], X[nz, 0])
    t = np.mod(phi + 0.5 * np.pi, np.pi)
    t = np.unique(t)
    return np.column_stack([np.cos(t), np.sin(t)])


def leverage_l1(X, chunk=4096):
    """Exact l1 leverage scores sup_eta |x_i eta| / ||X eta||_1 for d = 2.

    The ratio is scale invariant, so eta sweeps the unit half-circle. Between
    the directions orthogonal to data rows every ratio is a linear-fractional
    function of eta with constant-sign derivative, hence monotone; the per-row
    suprema are therefore attained at those sector boundaries and it suffices
    to evaluate all rows at each boundary direction.
    """
    X = _check_matrix(X)
    n = X.shape[0]
    H = _candidate_directions(X)
    if H.shape[0] == 0:  # all rows zero
        return ScoreVector(np.zeros(n), ScoreKind.L1_LEVERAGE)
    best = np.zeros(n)
    for start in range(0, H.shape[0], chunk):
        P = np.abs(X @ H[start : start + chunk].T)  # (n, t)
        denom = np.sum(P, axis=0)
        ok = denom > 0
        if np.any(ok):
            ratios = P[:, ok] / denom[ok]
            np.maximum(best, ratios.max(axis=1), out=best)
    return ScoreVector(np.minimum(best, 1.0), ScoreKind.L1_LEVERAGE)


def lewis_weights_l1(X, max_iters=100, tol=1e-10):
    """l1 Lewis weights: the fixed point of w_i = sqrt(x_i (X^T W^-1 X)^-1 x_i^T).

    Iterates from the l2 leverage scores; rows of all zeros get weight zero.
    Requires X to have full column rank. For d = 2 the weights sum to 2.
    """
    X = _check_matrix(X)
    s = np.linalg.svd(X, compute_uv=False)
    if s.size < 2 or s[1] <= _RANK_TOL * max(s[0], 1e-300):
        raise ValueError("Lewis weights require a full-rank matrix")
    nz = np.hypot(X[:, 0], X[:, 1]) > 0
    Xn = X[nz]
    w = np.maximum(leverage_l2(Xn).values, 1e-12)
    converged = False
    for _ in range(max_iters):
        # M = sum_i x_i x_i^T / w_i, accumulated with deterministic np.sum.
        inv_w = 1.0 / w
        m00 = np.sum(inv_w * Xn[:, 0] * Xn[:, 0])
        m01 = np.sum(inv_w * Xn[:, 0] * Xn[:, 1])
        m11 = np.sum(inv_w * Xn[:, 1] * Xn[:, 1])
        det = m00 * m11 - m01 * m01
        if det <= 0:
            break
        # quadratic form x_i M^-1 x_i^T via the 2x2 inverse
        q = (
            m11 * Xn[:, 0] ** 2 - 2.0 * m01 * Xn[:, 0] * Xn[:, 1] + m00 * Xn[:, 1] ** 2
        ) / det
        w_new = np.sqrt(np.maximum(q, 0.0))
        change = np.max(np.abs(w_new - w) / np.maximum(w, 1e-300))
        w = w_new
        if change <= tol:
            converged = True
            break
    values = np.zeros(X.shape[0])
    values[nz] = w
    return ScoreVector(values, ScoreKind.LEWIS_L1, converged=converged)
