"""Coreset construction: sampling scores for 2PL and 3PL conditional
problems, power-of-two score rounding, weighted i.i.d. and reservoir
sampling, and CSV serialization of the resulting weighted subsets.

A single coreset built from the fixed parameter matrix is reused across all
conditional solves of the opposite dimension: leverage-type scores are
invariant to the per-row sign flips induced by different label vectors, so
the same sampled rows serve every item (or every examinee).
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabelsError
from .leverage import leverage_l2, leverage_l2_sketched
from .model import (
    AbilityParameters,
    ItemParameters,
    ModelKind,
    Orientation,
    build_signed_design,
)

__all__ = [
    "SamplingMethod",
    "WeightedCoreset",
    "scores_2pl",
    "scores_3pl",
    "next_power_of_two",
    "sample_weighted",
    "build_coreset",
    "save_coreset_csv",
    "load_coreset_csv",
]


class SamplingMethod(enum.Enum):
    IID_ALIAS = "iid_alias"
    CHAO_RESERVOIR = "chao_reservoir"


@dataclass
class WeightedCoreset:
    """Sampled row indices (with multiplicity) and their coreset weights.

    Sampled entries carry u = S / (k' * s_index) where S is the total score
    mass of the sampling pool and k' the number of sampled entries;
    force-included entries carry u = 1. ``scores`` is the score vector over
    all compressed rows that produced the sample (0 for rows outside the
    sampling pool).
    """

    indices: np.ndarray
    u: np.ndarray
    k: int
    scores: np.ndarray
    seed: int
    method: SamplingMethod = SamplingMethod.IID_ALIAS
    forced: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.intp)
        self.u = np.asarray(self.u, dtype=np.float64)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.forced = np.asarray(self.forced, dtype=np.intp)
        if self.indices.shape != self.u.shape:
            raise ValueError("indices and u must have equal length")
        if len(self.indices) != self.k:
            raise ValueError("coreset must hold exactly k entries")
        if np.any(self.u <= 0):
            raise ValueError("coreset weights must be positive")

    @property
    def size(self):
        return self.k


def next_power_of_two(x):
    """Smallest power of two >= x, elementwise; requires x > 0."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("power-of-two rounding requires positive values")
    return np.exp2(np.ceil(np.log2(x)))


def scores_2pl(fixed, sketched=False, sketch_rows=64, seed=0):
    """Sampling scores sqrt(leverage) + 1/r for the 2PL conditional problems.

    ``fixed`` holds the parameters of the dimension being compressed:
    AbilityParameters for examinee compression (rows (theta_j, -1)) or
    ItemParameters for item compression (rows (a_i, b_i)). Computed once;
    valid for every label vector of the opposite dimension.
    """
    if isinstance(fixed, AbilityParameters):
        rows = fixed.beta()
    elif isinstance(fixed, ItemParameters):
        rows = fixed.alpha()
    else:
        rows = np.asarray(fixed, dtype=np.float64)
    r = rows.shape[0]
    if sketched:
        lev = leverage_l2_sketched(rows, sketch_rows=sketch_rows, seed=seed).values
    else:
        lev = leverage_l2(rows).values
    return np.sqrt(np.maximum(lev, 0.0)) + 1.0 / r


def scores_3pl(design, mu, E):
    """Sensitivity upper bounds for a mixed g/h design, rounded up to powers
    of two.

    Fail rows get 42.5 * mu1^2 * (||U_i||_2 + 1/r_fail) with U an orthonormal
    basis of the full design's column space; pass rows get the uniform bound
    3.5 * E * (1 + mu0) / r_pass. Both label classes must be present.
    """
    mu0, mu1 = float(mu[0]), float(mu[1])
    if not (np.isfinite(mu0) and np.isfinite(mu1)):
        raise ValueError("scores_3pl needs finite mu estimates")
    n_pass = int(np.sum(design.is_pass))
    n_fail = design.size - n_pass
    if n_pass == 0 or n_fail == 0:
        raise DegenerateLabelsError(
            "3PL sensitivity scores need both label classes in the design"
        )
    unorm = np.sqrt(np.maximum(leverage_l2(design.rows).values, 0.0))
    s = np.empty(design.size)
    fail = ~design.is_pass
    s[fail] = 42.5 * mu1**2 * (unorm[fail] + 1.0 / n_fail)
    s[design.is_pass] = 3.5 * E * (1.0 + mu0) / n_pass
    return next_power_of_two(s)


class _VoseAlias:
    """Alias table for O(1) draws from a finite distribution."""

    def __init__(self, p):
        n = len(p)
        scaled = np.asarray(p, dtype=np.float64) * n
        self.prob = np.zeros(n)
        self.alias = np.zeros(n, dtype=np.intp)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        for q in (small, large):
            for g in q:
                self.prob[g] = 1.0
                self.alias[g] = g

    def sample(self, rng, size):
        i = rng.integers(0, len(self.prob), size=size)
        toss = rng.random(size) < self.prob[i]
        return np.where(toss, i, self.alias[i])


def _chao_reservoir(scores, k, rng):
    """One-pass weighted reservoir (Chao): item t enters with probability
    k * s_t / W_t (capped at 1) and evicts a uniformly chosen member."""
    n = len(scores)
    if k >= n:
        return np.arange(n, dtype=np.intp)
    reservoir = np.arange(k, dtype=np.intp)
    W = float(np.sum(scores[:k]))
    for t in range(k, n):
        W += float(scores[t])
        p = min(k * float(scores[t]) / W, 1.0)
        if rng.random() < p:
            reservoir[rng.integers(0, k)] = t
    return reservoir


def sample_weighted(scores, k, seed=0, method=SamplingMethod.IID_ALIAS):
    """Weighted sample of k row indices with coreset weights S / (k * s_j).

    IID_ALIAS draws k indices i.i.d. with probability s_j / S via an alias
    table (duplicates allowed); CHAO_RESERVOIR draws without replacement in
    one pass. Deterministic for a fixed seed.
    """
    method = SamplingMethod(method)
    scores = np.asarray(scores, dtype=np.float64)
    if k < 1:
        raise ValueError("sample size k must be >= 1")
    if np.any(scores < 0) or not np.any(scores > 0):
        raise ValueError("scores must be nonnegative with positive total mass")
    S = float(np.sum(scores))
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    if method is SamplingMethod.IID_ALIAS:
        idx = _VoseAlias(scores / S).sample(rng, k)
    else:
        pool = np.flatnonzero(scores > 0)
        picked = _chao_reservoir(scores[pool], min(k, pool.size), rng)
        idx = pool[picked]
        if idx.size < k:  # fewer positive-score rows than k: repeat last
            idx = np.concatenate([idx, np.full(k - idx.size, idx[-1])])
    u = S / (k * scores[idx])
    return WeightedCoreset(indices=idx, u=u, k=k, scores=scores,
                           seed=int(seed), method=method)


def _grid_round_up(c, kappa, spacing, cap=0.5 - 1e-12):
    """Clamp guessing values to >= 1/kappa and round up to the grid."""
    base = 1.0 / kappa
    cc = np.maximum(np.asarray(c, dtype=np.float64), base)
    steps = np.ceil((cc - base) / spacing - 1e-12)
    return np.minimum(base + steps * spacing, cap)


def _mu_plugin(rows, mu_policy, exact_limit=5000):
    from .mu import mu_exact_2d, mu_heuristic

    if mu_policy == "exact" or (mu_policy == "auto" and rows.shape[0] <= exact_limit):
        est = mu_exact_2d(rows)
        if np.isfinite(est.mu0) and np.isfinite(est.mu1):
            return max(1.0, est.mu0), max(1.0, est.mu1)
        return None  # genuinely separable reference labeling
    est = mu_heuristic(rows)
    if not (np.isfinite(est.mu0) and np.isfinite(est.mu1)):
        return None
    return max(1.0, est.mu0), max(1.0, est.mu1)


def build_coreset(
    Y,
    items,
    abilities,
    model,
    k,
    compress="examinees",
    method=SamplingMethod.IID_ALIAS,
    seed=0,
    sketched=False,
    rounds=1,
    mu_policy="auto",
    epsilon=0.1,
    kappa=10.0,
    timings=None,
):
    """End-to-end coreset over one dimension of the response matrix.

    2PL/1PL: sqrt-leverage + uniform scores from the compressed dimension's
    parameter rows. 3PL: sensitivity scores from a reference labeling (the
    first non-degenerate row of the opposite dimension), with guessing values
    clamped to >= 1/kappa and rounded up to a grid of spacing
    epsilon / (6 * kappa * mu^2) before the E = max ln(1/c) bound is taken.
    Compressed units whose own labels are single-class are force-included
    with weight 1. ``rounds > 1`` re-applies the construction to the
    weight-scaled output (experimental).
    """
    model = ModelKind(model)
    if compress == "examinees":
        size, fixed = Y.n, abilities
        unit_labels = Y.entries.T  # labels of examinee j across items
    elif compress == "items":
        size, fixed = Y.m, items
        unit_labels = Y.entries
    else:
        raise ValueError("compress must be 'examinees' or 'items'")
    if not 1 <= k <= size:
        raise ValueError(f"k must lie in [1, {size}]")

    t0 = time.perf_counter()
    forced = np.flatnonzero(np.all(unit_labels == unit_labels[:, :1], axis=1))
    if model.has_guessing:
        scores = _scores_3pl_shared(
            Y, items, abilities, compress, mu_policy, epsilon, kappa
        )
    else:
        scores = scores_2pl(fixed, sketched=sketched, seed=seed)
        forced = forced[:0]  # 2PL scores handle degenerate rows directly

    pool_scores = scores.copy()
    if forced.size:
        if forced.size >= k:
            raise ValueError(
                f"k={k} too small: {forced.size} rows must be force-included"
            )
        pool_scores[forced] = 0.0
    t1 = time.perf_counter()

    core = sample_weighted(pool_scores, k - forced.size, seed=seed, method=method)
    if timings is not None:
        timings["scores"] = timings.get("scores", 0.0) + (t1 - t0)
        timings["sampling"] = timings.get("sampling", 0.0) + (time.perf_counter() - t1)
    if forced.size:
        core = WeightedCoreset(
            indices=np.concatenate([forced, core.indices]),
            u=np.concatenate([np.ones(forced.size), core.u]),
            k=k,
            scores=pool_scores,
            seed=int(seed),
            method=SamplingMethod(method),
            forced=forced,
        )

    for r in range(1, rounds):
        rows = (fixed.beta() if compress == "examinees" else fixed.alpha())
        sub = rows[core.indices] * core.u[:, None]
        lev = leverage_l2(sub).values
        s = np.sqrt(np.maximum(lev, 0.0)) + 1.0 / len(sub)
        inner = sample_weighted(s, k, seed=seed + r, method=method)
        full_scores = np.zeros(size)
        np.add.at(full_scores, core.indices, s)
        core = WeightedCoreset(
            indices=core.indices[inner.indices],
            u=core.u[inner.indices] * inner.u,
            k=k,
            scores=full_scores,
            seed=int(seed),
            method=SamplingMethod(method),
        )
    return core


def _scores_3pl_shared(Y, items, abilities, compress, mu_policy, epsilon, kappa):
    """3PL sensitivity scores valid across one whole phase.

    A single coreset must serve every conditional solve of the opposite
    dimension, and a given row is a g-row for some labelings and an h-row for
    others; a sensitivity bound uniform across labelings must therefore
    dominate both per-class formulas, so each row's score is their maximum.
    Class sizes and the mu plug-in come from the first reference labeling
    with both classes present (any two labelings' class sizes agree within
    the 2*mu0 factor of the label-class bound).
    """
    orientation = (
        Orientation.BY_ITEM if compress == "examinees" else Orientation.BY_EXAMINEE
    )
    fixed = abilities if compress == "examinees" else items
    n_refs = Y.m if compress == "examinees" else Y.n
    last_error = None
    for ref in range(n_refs):
        design = build_signed_design(Y, fixed, orientation, ref)
        n_pass = int(np.sum(design.is_pass))
        n_fail = design.size - n_pass
        if n_pass == 0 or n_fail == 0:
            last_error = DegenerateLabelsError(
                f"reference labeling {ref} has a single label class"
            )
            continue
        mu = _mu_plugin(design.rows, mu_policy)
        if mu is None:
            last_error = DegenerateLabelsError(
                f"reference labeling {ref} is separable"
            )
            continue
        mu0, mu1 = mu
        spacing = epsilon / (6.0 * kappa * max(mu0, mu1) ** 2)
        c_grid = _grid_round_up(items.c, kappa, spacing)
        E = float(np.max(np.log(1.0 / c_grid)))
        unorm = np.sqrt(np.maximum(leverage_l2(design.rows).values, 0.0))
        s_fail = 42.5 * mu1**2 * (unorm + 1.0 / n_fail)
        s_pass = 3.5 * E * (1.0 + mu0) / n_pass
        return next_power_of_two(np.maximum(s_fail, s_pass))
    raise last_error or DegenerateLabelsError("no usable reference labeling")


def save_coreset_csv(core, path):
    """Write index,u,score rows; repr formatting round-trips floats exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,u,score\n")
        for i, w in zip(core.indices, core.u):
            fh.write(f"{int(i)},{float(w)!r},{float(core.scores[i])!r}\n")


def load_coreset_csv(path, size=None, seed=0, method=SamplingMethod.IID_ALIAS):
    """Read a coreset written by :func:`save_coreset_csv`.

    ``size`` (total number of compressed rows) restores the score vector's
    length; defaults to max index + 1.
    """
    idx, u, sc = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "index,u,score":
            raise ValueError(f"unexpected coreset CSV header: {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 3:
                raise ValueError(f"malformed coreset CSV line: {line!r}")
            idx.append(int(parts[0]))
            u.append(float(parts[1]))
            sc.append(float(parts[2]))
    idx = np.asarray(idx, dtype=np.intp)
    size = int(size) if size is not None else int(idx.max()) + 1
    scores = np.zeros(size)
    scores[idx] = sc
    return WeightedCoreset(indices=idx, u=np.asarray(u), k=len(idx),
                           scores=scores, seed=seed, method=method)
