"""Seeded synthetic population and response generation.

Item discriminations are N(2.75, 0.3) truncated at 0, difficulties and
abilities are N(0, 1), and (3PL only) guessing values are N(0.1, 0.1)
truncated to [0, 0.5); truncation is by rejection, not clamping. The 0.1 in
the guessing distribution is a standard deviation (``c_sd``). Responses are
Bernoulli draws of the model probabilities mapped to {-1, +1}.

Randomness comes from Philox (counter-based) streams keyed by (seed, role),
so output is bit-identical for a fixed seed regardless of threading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    AbilityParameters,
    ItemParameters,
    ModelKind,
    ResponseMatrix,
    icc_probability,
)

__all__ = ["GenConfig", "generate_synthetic"]

_ROLE_ITEMS = 0
_ROLE_ABILITIES = 1
_ROLE_RESPONSES = 2


@dataclass
class GenConfig:
    n: int
    m: int
    model: ModelKind = ModelKind.TWO_PL
    seed: int = 0
    a_mean: float = 2.75
    a_sd: float = 0.3
    b_sd: float = 1.0
    theta_sd: float = 1.0
    c_mean: float = 0.1
    c_sd: float = 0.1
    c_range: tuple = (0.0, 0.5)

    def __post_init__(self):
        self.model = ModelKind(self.model)
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be >= 1")
        if self.c_range[0] >= self.c_range[1]:
            raise ValueError("invalid truncation interval for c")


def _stream(seed, role):
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) ^ (np.uint64(role) << np.uint64(48))))


def _truncated_normal(rng, mean, sd, low, high, size, include_low=False):
    def rejected(v):
        return ((v < low) if include_low else (v <= low)) | (v >= high)

    out = rng.normal(mean, sd, size=size)
    bad = rejected(out)
    while np.any(bad):
        out[bad] = rng.normal(mean, sd, size=int(bad.sum()))
        bad = rejected(out)
    return out


def generate_synthetic(config):
    """Draw (ResponseMatrix, true ItemParameters, true AbilityParameters)."""
    rng_items = _stream(config.seed, _ROLE_ITEMS)
    rng_theta = _stream(config.seed, _ROLE_ABILITIES)
    rng_resp = _stream(config.seed, _ROLE_RESPONSES)

    if config.model is ModelKind.ONE_PL:
        a = np.ones(config.m)
    else:
        a = _truncated_normal(rng_items, config.a_mean, config.a_sd,
                              0.0, np.inf, config.m)
    b = rng_items.normal(0.0, config.b_sd, size=config.m)
    if config.model is ModelKind.THREE_PL:
        c = _truncated_normal(rng_items, config.c_mean, config.c_sd,
                              config.c_range[0], config.c_range[1],
                              config.m, include_low=True)
    else:
        c = np.zeros(config.m)
    theta = rng_theta.normal(0.0, config.theta_sd, size=config.n)

    p = icc_probability((a[:, None], b[:, None], c[:, None]), theta[None, :])
    draws = rng_resp.random(size=(config.m, config.n))
    y = np.where(draws < p, 1, -1).astype(np.int8)
    return (
        ResponseMatrix(y),
        ItemParameters(a=a, b=b, c=c),
        AbilityParameters(theta=theta),
    )
