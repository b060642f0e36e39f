"""Training orchestration for the PDE benchmarks."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import jax
import jax.numpy as jnp
import numpy as np

from .. import diag
from ..errors import ConfigurationError, DivergenceError
from ..initialization import physics_informed_output_init
from ..problems.pde import PdeProblem
from ..problems.pool import CollocationPool, make_pool
from .adaptive import AnnealConfig, CausalConfig, LossWeights, RadConfig, RbaConfig, anneal_update, rad_resample
from .history import RunHistory
from .loss import LossBatch, batch_from_pool, ic_targets, loss_terms, pde_residual
from .optim import Schedule, adam_init, guarded_adam_step, lr_schedule

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 20000
    schedule: Schedule = field(default_factory=Schedule)
    pool_resolution: tuple = (400, 400)
    n_pde: int = 1024
    n_ic: int = 64
    rad: RadConfig | None = field(default_factory=lambda: RadConfig(n_pde=1024))
    rba: RbaConfig | None = field(default_factory=RbaConfig)
    causal: CausalConfig | None = field(default_factory=CausalConfig)
    anneal: AnnealConfig | None = field(default_factory=AnnealConfig)
    physics_init: bool = True
    physics_init_points: int = 256
    # At t = 0 the output features are close to collinear; a tiny ridge lets the fit use
    # directions that are negligible there and huge elsewhere (fatal with cubic reactions).
    ridge: float = 1e-3
    log_every: int = 100
    diag_every: int = 0  # SNR and complexity period; 0 disables them
    snr_batches: int = 16
    pool_chunk: int = 4096
    patience: int = 10

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigurationError("iterations must be non-negative")
        if self.log_every < 1 or self.patience < 1 or self.diag_every < 0:
            raise ConfigurationError("log_every and patience must be positive, diag_every non-negative")
        if self.rad is not None and self.rad.n_pde != self.n_pde:
            raise ConfigurationError(f"rad.n_pde={self.rad.n_pde} differs from n_pde={self.n_pde}")

    def for_problem(self, problem: PdeProblem) -> "TrainConfig":
        """Drop techniques the problem cannot use: causal weights and annealing need a time axis and an IC."""
        cfg = self
        if not problem.time_dependent:
            cfg = replace(cfg, causal=None, anneal=None)
        if not problem.has_ic:
            cfg = replace(cfg, anneal=None, physics_init=False)
        return cfg


@dataclass
class TrainResult:
    params: dict
    history: RunHistory
    pool: CollocationPool
    weights: LossWeights
    config: TrainConfig
    seconds_per_iteration: float


class _Evaluator:
    """Jitted pieces shared by one training run."""

    def __init__(self, model, problem, cfg: TrainConfig):
        self.model, self.problem, self.cfg = model, problem, cfg
        rba, causal = cfg.rba, cfg.causal

        def loss(params, batch, lam):
            out = loss_terms(model, problem, params, batch, lam, rba=rba, causal=causal)
            return out.total, out

        def step(params, opt, batch, lam, it):
            (_, out), grads = jax.value_and_grad(loss, has_aux=True)(params, batch, lam)
            lr = lr_schedule(it + 1, cfg.schedule)
            params, opt, ok = guarded_adam_step(params, grads, opt, lr)
            return params, opt, out, ok & jnp.isfinite(out.total), lr

        def term_grad_norms(params, batch):
            terms = lambda p: loss_terms(model, problem, p, batch, jnp.ones(3), rba=rba, causal=causal).terms
            jac = jax.jacrev(terms)(params)
            sq = sum(jnp.sum(j.reshape(3, -1) ** 2, axis=1) for j in jax.tree_util.tree_leaves(jac))
            return jnp.sqrt(sq)

        def batch_loss(params, batch, lam):
            return loss_terms(model, problem, params, batch, lam, rba=None, causal=None).total

        self.step = jax.jit(step)
        self.term_grad_norms = jax.jit(term_grad_norms)
        self.residual = jax.jit(lambda params, pts: pde_residual(model, problem, params, pts))
        self.batch_grad = jax.jit(jax.grad(batch_loss))

    def pool_residuals(self, params, points) -> np.ndarray:
        chunk = self.cfg.pool_chunk
        out = []
        for start in range(0, len(points), chunk):
            block = points[start:start + chunk]
            pad = chunk - len(block)
            if pad:
                block = np.concatenate([block, np.repeat(block[-1:], pad, axis=0)])
            out.append(np.abs(np.asarray(self.residual(params, jnp.asarray(block))))[: chunk - pad])
        return np.concatenate(out)


def _physics_init(model, problem, params, cfg: TrainConfig):
    lo, hi = problem.domain[1]
    x = np.linspace(lo, hi, cfg.physics_init_points)
    pts = np.stack([np.full_like(x, problem.domain[0][0]), x], axis=1)
    targets = np.asarray(problem.initial_condition(x), dtype=float)
    params, result = physics_informed_output_init(model, params, pts, targets, ridge=cfg.ridge)
    log.info("output layer fitted to the initial condition, residual norm %.3e", result.residual_norm)
    return params


def train(model, problem: PdeProblem, cfg: TrainConfig, seed: int = 0, reference=None,
          params: dict | None = None) -> TrainResult:
    """Train ``model`` on ``problem``; deterministic for a given ``seed``.

    ``reference`` (a ReferenceField) enables relative-error logging.  Raises
    :class:`DivergenceError` after ``cfg.patience`` consecutive non-finite steps.
    """
    cfg = cfg.for_problem(problem)
    rng = np.random.default_rng(seed)
    if params is None:
        params = model.init(jax.random.PRNGKey(seed))
        if cfg.physics_init:
            params = _physics_init(model, problem, params, cfg)
    pool = make_pool(problem, cfg.pool_resolution, rng, n_pde=cfg.n_pde, n_ic=cfg.n_ic)
    lam = LossWeights().as_array()
    history = RunHistory()
    ev = _Evaluator(model, problem, cfg)
    opt = adam_init(params)
    ref_points = reference.points() if reference is not None else None
    ref_values = reference.values.ravel() if reference is not None else None
    ic_t = jnp.asarray(ic_targets(problem, pool.ic_points))
    shards = None

    def make_batch():
        return LossBatch(jnp.asarray(pool.active_points), jnp.asarray(pool.rba[pool.active]),
                         jnp.asarray(pool.ic_points), ic_t, jnp.asarray(pool.ic_rba))

    batch = make_batch()
    bad_streak = 0
    timed_from, timed_start = None, None
    for it in range(cfg.iterations):
        if cfg.rad is not None and it > 0 and it % cfg.rad.period == 0:
            res = ev.pool_residuals(params, pool.points)
            pool.active = rad_resample(res, pool.rba, cfg.rad, rng)
            batch = make_batch()
        if cfg.anneal is not None and it > 0 and it % cfg.anneal.period == 0:
            norms = np.asarray(ev.term_grad_norms(params, batch))[:2]
            if np.all(np.isfinite(norms)):
                lam[:2] = anneal_update(norms, lam[:2], cfg.anneal.a, cfg.anneal.grad_eps)

        new_params, new_opt, out, ok, lr = ev.step(params, opt, batch, jnp.asarray(lam), it)
        if bool(ok):
            bad_streak = 0
            params, opt = new_params, new_opt
            if cfg.rba is not None:
                pool.rba[pool.active] = np.asarray(out.pde_alpha)
                pool.ic_rba = np.asarray(out.ic_alpha)
                batch = batch._replace(pde_alpha=out.pde_alpha, ic_alpha=out.ic_alpha)
        else:
            bad_streak += 1
            if bad_streak >= cfg.patience:
                history.diverged = True
                raise DivergenceError(f"loss not finite for {bad_streak} consecutive iterations", history, it)

        if it == 1:
            timed_from, timed_start = it, time.perf_counter()
        last = it == cfg.iterations - 1
        if it % cfg.log_every == 0 or last:
            row = dict(iteration=it, lr=float(lr), lambda_pde=lam[0], lambda_ic=lam[1], lambda_bc=lam[2],
                       loss_pde=float(out.terms[0]), loss_ic=float(out.terms[1]), loss_bc=float(out.terms[2]),
                       total=float(out.total))
            if reference is not None:
                row["rel_l2"] = diag.relative_l2(diag.predict(model, params, ref_points), ref_values)
            if cfg.diag_every and (it % cfg.diag_every == 0 or last):
                if shards is None or len(shards[0]) * cfg.snr_batches > len(pool.active):
                    shards = diag.shuffled_shards(len(pool.active), cfg.snr_batches, seed)
                batches = [batch._replace(pde_points=batch.pde_points[s], pde_alpha=batch.pde_alpha[s])
                           for s in shards]
                grads = [np.asarray(diag.flatten(ev.batch_grad(params, b, jnp.asarray(lam)))) for b in batches]
                row["snr"] = diag.snr_from_gradients(np.stack(grads)).value
                pts = np.concatenate([pool.active_points, pool.ic_points]) if len(pool.ic_points) else pool.active_points
                row["complexity"] = diag.geometric_complexity(model, params, pts)
            history.append(**row)
    if timed_start is not None and cfg.iterations > 2:
        per_it = (time.perf_counter() - timed_start) / (cfg.iterations - timed_from)
    else:
        per_it = float("nan")
    weights = LossWeights(*map(float, lam))
    return TrainResult(params=params, history=history, pool=pool, weights=weights, config=cfg,
                       seconds_per_iteration=per_it)
