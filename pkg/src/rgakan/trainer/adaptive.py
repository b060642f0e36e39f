"""The four adaptive training techniques: RAD resampling, RBA point weights,
causal segment weights and gradient-norm loss balancing."""

from __future__ import annotations

from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np

from ..errors import ConfigurationError

GRAD_EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    pde: float = 1.0
    ic: float = 1.0
    bc: float = 1.0

    def __post_init__(self):
        for name in ("pde", "ic", "bc"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigurationError(f"loss weight {name} must be finite and non-negative, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.pde, self.ic, self.bc])


@dataclass(frozen=True)
class RadConfig:
    delta: float = 1.0
    c: float = 1.0
    period: int = 2000
    n_pde: int = 4096

    def __post_init__(self):
        if self.delta < 0 or self.c < 0:
            raise ConfigurationError("RAD delta and C must be non-negative")
        if self.period < 1:
            raise ConfigurationError("RAD period must be at least 1")
        if self.n_pde < 1:
            raise ConfigurationError("RAD needs at least one active point")


@dataclass(frozen=True)
class RbaConfig:
    gamma: float = 0.999
    eta: float = 0.01

    def __post_init__(self):
        if self.gamma < 0 or self.eta < 0:
            raise ConfigurationError("RBA gamma and eta must be non-negative")


@dataclass(frozen=True)
class CausalConfig:
    segments: int = 32
    epsilon: float = 1.0

    def __post_init__(self):
        if self.segments < 1:
            raise ConfigurationError("causal training needs at least one segment")
        if self.epsilon < 0:
            raise ConfigurationError("causal epsilon must be non-negative")


@dataclass(frozen=True)
class AnnealConfig:
    a: float = 0.9
    period: int = 1000
    grad_eps: float = GRAD_EPS

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ConfigurationError("annealing factor a must lie in [0, 1]")
        if self.period < 1:
            raise ConfigurationError("annealing period must be at least 1")


def causal_weights(segment_losses, epsilon):
    """``w_i = exp(-epsilon * sum_{j<i} L_j)``; works on numpy or traced arrays."""
    L = jnp.asarray(segment_losses)
    # Exclusive prefix sum; subtracting L from the inclusive sum can break monotonicity by rounding.
    before = jnp.concatenate([jnp.zeros_like(L[:1]), jnp.cumsum(L)[:-1]])
    return jnp.exp(-epsilon * before)


def rba_update(alpha, residuals, gamma: float, eta: float):
    """Decay every weight by ``gamma`` and add ``eta |R| / max |R|``.

    When every residual is zero the ratio is skipped and only the decay applies.
    """
    r = jnp.abs(jnp.asarray(residuals))
    top = jnp.max(r)
    ratio = jnp.where(top > 0, r / jnp.where(top > 0, top, 1.0), 0.0)
    return gamma * jnp.asarray(alpha) + eta * ratio


def rad_probabilities(residuals, rba_weights, delta: float, c: float) -> np.ndarray:
    """Sampling distribution over the pool: ``(a|R|)^delta / mean((a|R|)^delta) + C``, normalized."""
    e = np.abs(np.asarray(rba_weights, dtype=float) * np.asarray(residuals, dtype=float))
    powered = e**delta
    mean = powered.mean()
    score = (powered / mean if mean > 0 else np.ones_like(powered)) + c
    total = score.sum()
    if not np.isfinite(total) or total <= 0:
        return np.full(len(e), 1.0 / len(e))
    return score / total


def rad_resample(residuals, rba_weights, config: RadConfig, rng) -> np.ndarray:
    """Draw ``config.n_pde`` distinct pool indices from :func:`rad_probabilities`."""
    n_pool = len(residuals)
    if config.n_pde > n_pool:
        raise ConfigurationError(f"N_pde={config.n_pde} exceeds the pool size {n_pool}")
    p = rad_probabilities(residuals, rba_weights, config.delta, config.c)
    idx = rng.choice(n_pool, size=config.n_pde, replace=False, p=p)
    return np.sort(idx)


def anneal_update(grad_norms, weights, a: float, grad_eps: float = GRAD_EPS) -> np.ndarray:
    """Move each global weight toward ``sum(norms) / (norm + grad_eps)`` with EMA factor ``a``."""
    norms = np.asarray(grad_norms, dtype=float)
    old = np.asarray(weights.as_array() if isinstance(weights, LossWeights) else weights, dtype=float)
    target = norms.sum() / (norms + grad_eps)
    return a * old + (1.0 - a) * target
