"""Adam on parameter dicts and the warmup-then-step-decay learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import jax
import jax.numpy as jnp
import numpy as np

from ..errors import ConfigurationError, NumericError

BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


@dataclass(frozen=True)
class Schedule:
    peak: float = 1e-3
    warmup: int = 1000
    decay: float = 0.9
    period: int = 2000

    def __post_init__(self):
        if self.peak < 0 or self.warmup < 0 or self.period < 1 or not 0 < self.decay <= 1:
            raise ConfigurationError(f"invalid learning-rate schedule {self}")

    @classmethod
    def constant(cls, lr: float) -> "Schedule":
        return cls(peak=lr, warmup=0, decay=1.0, period=1)


def lr_schedule(iteration, schedule: Schedule):
    """Linear warmup from zero, then ``peak * decay**floor((iteration - warmup) / period)``.

    Accepts Python ints or traced integers.
    """
    it = jnp.asarray(iteration, dtype=jnp.float64)
    if schedule.warmup > 0:
        warm = schedule.peak * it / schedule.warmup
    else:
        warm = jnp.asarray(schedule.peak)
    steps = jnp.floor(jnp.maximum(it - schedule.warmup, 0.0) / schedule.period)
    decayed = schedule.peak * schedule.decay**steps
    return jnp.where(it < schedule.warmup, warm, decayed)


class AdamState(NamedTuple):
    m: dict
    v: dict
    count: jnp.ndarray


def adam_init(params: dict) -> AdamState:
    zeros = jax.tree_util.tree_map(jnp.zeros_like, params)
    return AdamState(m=zeros, v=jax.tree_util.tree_map(jnp.zeros_like, params), count=jnp.asarray(0))


def _adam_update(params, grads, state: AdamState, lr):
    count = state.count + 1
    m = jax.tree_util.tree_map(lambda m, g: BETA1 * m + (1 - BETA1) * g, state.m, grads)
    v = jax.tree_util.tree_map(lambda v, g: BETA2 * v + (1 - BETA2) * g * g, state.v, grads)
    c1 = 1 - BETA1**count
    c2 = 1 - BETA2**count
    new = jax.tree_util.tree_map(
        lambda p, m, v: p - lr * (m / c1) / (jnp.sqrt(v / c2) + ADAM_EPS), params, m, v)
    return new, AdamState(m=m, v=v, count=count)


def grads_finite(grads) -> jnp.ndarray:
    leaves = jax.tree_util.tree_leaves(grads)
    return jnp.all(jnp.stack([jnp.all(jnp.isfinite(g)) for g in leaves]))


def adam_step(params: dict, grads: dict, state: AdamState, lr):
    """One bias-corrected Adam update; rejects non-finite gradients."""
    if not bool(grads_finite(grads)):
        bad = [k for k, g in grads.items() if not np.all(np.isfinite(np.asarray(g)))]
        raise NumericError(f"non-finite gradient in {bad}")
    return _adam_update(params, grads, state, lr)


def guarded_adam_step(params, grads, state: AdamState, lr):
    """Traceable variant: skips the update (params and moments unchanged) when gradients are not finite."""
    ok = grads_finite(grads)
    safe = jax.tree_util.tree_map(lambda g: jnp.where(ok, g, 0.0), grads)
    new_params, new_state = _adam_update(params, safe, state, lr)
    pick = lambda a, b: jax.tree_util.tree_map(lambda x, y: jnp.where(ok, x, y), a, b)
    return pick(new_params, params), AdamState(*pick(tuple(new_state), tuple(state))), ok
