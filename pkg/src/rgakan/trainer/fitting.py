"""Supervised function fitting with full-batch Adam (initialization comparisons)."""

from __future__ import annotations

from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from .. import diag
from ..problems.functions import FUNCTION_DIMS, evaluation_grid, target_function
from .history import RunHistory
from .optim import Schedule, adam_init, guarded_adam_step, lr_schedule


@dataclass(frozen=True)
class FitConfig:
    iterations: int = 2000
    lr: float = 1e-3
    n_train: int = 4000
    log_every: int = 100


@dataclass
class FitResult:
    params: dict
    history: RunHistory
    rel_l2: float


def fit_function(model, fid: str, cfg: FitConfig = FitConfig(), seed: int = 0) -> FitResult:
    """Fit ``model`` to target ``fid`` from uniform samples on ``[-1, 1]^d``; score on the evaluation grid."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(cfg.n_train, FUNCTION_DIMS[fid]))
    y = jnp.asarray(target_function(fid, x))
    x = jnp.asarray(x)
    schedule = Schedule.constant(cfg.lr)
    params = model.init(jax.random.PRNGKey(seed))

    def loss(p):
        return jnp.mean((model.apply(p, x)[:, 0] - y) ** 2)

    @jax.jit
    def step(p, opt, it):
        value, grads = jax.value_and_grad(loss)(p)
        p, opt, _ = guarded_adam_step(p, grads, opt, lr_schedule(it + 1, schedule))
        return p, opt, value

    opt = adam_init(params)
    history = RunHistory()
    for it in range(cfg.iterations):
        params, opt, value = step(params, opt, it)
        if it % cfg.log_every == 0 or it == cfg.iterations - 1:
            history.append(iteration=it, lr=cfg.lr, loss_pde=float(value), total=float(value))
    grid = evaluation_grid(fid)
    err = diag.relative_l2(diag.predict(model, params, grid), target_function(fid, grid))
    return FitResult(params=params, history=history, rel_l2=err)
