"""Complexity measures for signed 2-column designs: the positive-to-negative
mass ratio (exact for d = 2 via an angular sweep, plus a direction-sampling
heuristic) and the minimum l1 singular value used by the parameter-quality
bound."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = ["MuMethod", "MuEstimate", "mu_exact_2d", "mu_heuristic", "sigma1_min_2d"]


class MuMethod(enum.Enum):
    EXACT_SWEEP = "exact_sweep"
    HEURISTIC = "heuristic"


@dataclass
class MuEstimate:
    """Count-ratio (mu0) and l1-mass-ratio (mu1) complexity of a design.

    Infinite values indicate separable data; the witness directions realize
    (or approach) the suprema.
    """

    mu0: float
    mu1: float
    method: MuMethod
    witness_mu0: np.ndarray = None
    witness_mu1: np.ndarray = None

    @property
    def is_separable(self):
        return np.isinf(self.mu0) or np.isinf(self.mu1)

    @property
    def mu(self):
        return max(self.mu0, self.mu1)


def _check(X, min_rows=1):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2 or X.shape[0] < min_rows:
        raise ValueError(f"expected an (n, 2) matrix with n >= {min_rows}")
    return X


def _ratio_tables(X, H, chunk=2048):
    """Per-direction mu0/mu1 ratios for the columns of H^T (directions in rows).

    Entries with x . eta == 0 count toward the nonnegative side of the mu0
    ratio and contribute zero mass to both sides of the mu1 ratio.
    """
    r0 = np.empty(H.shape[0])
    r1 = np.empty(H.shape[0])
    for start in range(0, H.shape[0], chunk):
        Z = X @ H[start : start + chunk].T  # (n, t)
        pos_mass = np.sum(np.maximum(Z, 0.0), axis=0)
        neg_mass = np.sum(np.maximum(-Z, 0.0), axis=0)
        pos_cnt = np.sum(Z >= 0, axis=0).astype(np.float64)
        neg_cnt = np.sum(Z < 0, axis=0).astype(np.float64)
        sl = slice(start, start + Z.shape[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            r0[sl] = np.where(neg_cnt > 0, pos_cnt / np.maximum(neg_cnt, 1.0), np.inf)
            r1[sl] = np.where(
                neg_mass > 0,
                pos_mass / np.where(neg_mass > 0, neg_mass, 1.0),
                np.where(pos_mass > 0, np.inf, 0.0),
            )
    return r0, r1


def _sweep_directions(X):
    """Sector boundaries (directions orthogonal to rows) and midpoints on [0, 2pi)."""
    norms = np.hypot(X[:, 0], X[:, 1])
    nz = norms > 0
    if not np.any(nz):
        raise ValueError("complexity is undefined for an all-zero matrix")
    phi = np.arctan2(X[nz, 1], X[nz, 0])
    t = np.concatenate([phi + 0.5 * np.pi, phi - 0.5 * np.pi])
    t = np.unique(np.mod(t, 2.0 * np.pi))
    nxt = np.roll(t, -1).copy()
    nxt[-1] += 2.0 * np.pi
    mid = 0.5 * (t + nxt)
    return t, mid


def mu_exact_2d(X):
    """Exact mu0/mu1 for an (n, 2) design via the angular decomposition.

    mu0 is piecewise constant between the directions orthogonal to the rows
    and is maximized over open-sector midpoints. mu1 restricted to a sector is
    a ratio of two linear forms in eta whose derivative along the arc has
    constant sign, so its supremum over the circle is attained at sector
    boundaries (where it is continuous: a crossing row contributes zero mass).
    Separable data yields +inf together with a witness direction.
    """
    X = _check(X, min_rows=2)
    bounds, mids = _sweep_directions(X)
    Hb = np.column_stack([np.cos(bounds), np.sin(bounds)])
    Hm = np.column_stack([np.cos(mids), np.sin(mids)])

    r0_mid, r1_mid = _ratio_tables(X, Hm)
    _, r1_bnd = _ratio_tables(X, Hb)

    i0 = int(np.argmax(r0_mid))
    mu0 = float(r0_mid[i0])
    w0 = Hm[i0]

    if np.max(r1_bnd) >= np.max(r1_mid):
        i1 = int(np.argmax(r1_bnd))
        mu1, w1 = float(r1_bnd[i1]), Hb[i1]
    else:
        i1 = int(np.argmax(r1_mid))
        mu1, w1 = float(r1_mid[i1]), Hm[i1]

    return MuEstimate(mu0=mu0, mu1=mu1, method=MuMethod.EXACT_SWEEP,
                      witness_mu0=w0, witness_mu1=w1)


def mu_heuristic(X, extra_directions=(), n_uniform=64):
    """Lower bound on mu0/mu1 from ratio evaluations at a direction sample.

    Directions: the box-constrained logistic optimum of the design and its
    negation, ``n_uniform`` uniformly spaced directions (with negations), and
    any caller-supplied extras. Never exceeds the exact sweep on the same
    input.
    """
    from .solver import fit_logistic_direction

    X = _check(X, min_rows=2)
    t = np.arange(n_uniform) * (np.pi / n_uniform)
    H = [np.column_stack([np.cos(t), np.sin(t)])]
    opt = fit_logistic_direction(X)
    if np.any(opt != 0):
        H.append(opt[None, :])
    for d in extra_directions:
        d = np.asarray(d, dtype=np.float64).reshape(2)
        if np.any(d != 0):
            H.append(d[None, :])
    H = np.concatenate(H, axis=0)
    H = np.concatenate([H, -H], axis=0)
    r0, r1 = _ratio_tables(X, H)
    i0 = int(np.argmax(r0))
    i1 = int(np.argmax(r1))
    return MuEstimate(mu0=float(r0[i0]), mu1=float(r1[i1]),
                      method=MuMethod.HEURISTIC,
                      witness_mu0=H[i0], witness_mu1=H[i1])


def sigma1_min_2d(X):
    """Exact min_{x != 0} ||Xx||_1 / ||x||_1 for an (n, 2) matrix.

    ||Xx||_1 is piecewise linear on the boundary of the l1 unit diamond, with
    kinks at the diamond vertices and wherever a row's zero line crosses an
    edge; the minimum over those candidate points is exact.
    """
    X = _check(X)
    cands = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    for u, v in X:
        s = abs(u) + abs(v)
        if s > 0:
            cands.append(np.array([v, -u]) / s)
    C = np.stack(cands)
    vals = np.sum(np.abs(X @ C.T), axis=0)
    return float(np.min(vals))
