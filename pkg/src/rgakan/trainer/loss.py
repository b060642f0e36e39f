"""Composite physics-informed loss: PDE residual term (optionally causal), initial-condition term, RBA weighting."""

from __future__ import annotations

from typing import NamedTuple

import jax
import jax.numpy as jnp
import numpy as np

from .. import diffcore as dc
from ..errors import NumericError
from ..problems.pde import PdeProblem
from ..problems.pool import CollocationPool
from .adaptive import CausalConfig, LossWeights, RbaConfig, causal_weights, rba_update


class LossBatch(NamedTuple):
    pde_points: jnp.ndarray
    pde_alpha: jnp.ndarray
    ic_points: jnp.ndarray
    ic_targets: jnp.ndarray  # stacked per constrained time derivative
    ic_alpha: jnp.ndarray


class LossOutput(NamedTuple):
    total: jnp.ndarray
    terms: jnp.ndarray  # un-weighted (pde, ic, bc)
    pde_residual: jnp.ndarray
    ic_residual: jnp.ndarray
    pde_alpha: jnp.ndarray  # weights actually used (after the RBA update)
    ic_alpha: jnp.ndarray
    causal: jnp.ndarray


def ic_targets(problem: PdeProblem, ic_points) -> np.ndarray:
    """Values (and zero initial velocity where a second time derivative appears) at the IC points."""
    if not problem.has_ic or len(ic_points) == 0:
        return np.zeros(0)
    x = np.asarray(ic_points)[:, 1]
    parts = [np.asarray(problem.initial_condition(x), dtype=float)]
    parts += [np.zeros(len(x)) for _ in problem.ic_derivatives[1:]]
    return np.concatenate(parts)


def pde_residual(model, problem: PdeProblem, params, points):
    fields = dc.input_derivatives(model, params, points, problem.derivatives)
    return problem.residual(fields, points)


def ic_residual(model, problem: PdeProblem, params, points, targets):
    if points.shape[0] == 0:
        return jnp.zeros(0)
    indices = [(k,) + (0,) * (problem.dim - 1) for k in problem.ic_derivatives]
    fields = dc.input_derivatives(model, params, points, indices)
    pred = jnp.concatenate([fields[ix][:, 0] for ix in indices])
    return pred - targets


def _segment_ids(problem: PdeProblem, points, segments: int):
    t0, t1 = problem.domain[0]
    s = jnp.floor((points[:, 0] - t0) / (t1 - t0) * segments)
    return jnp.clip(s, 0, segments - 1).astype(jnp.int32)


def loss_terms(model, problem: PdeProblem, params, batch: LossBatch, lam,
               rba: RbaConfig | None = None, causal: CausalConfig | None = None) -> LossOutput:
    """Traceable composite loss.

    With RBA enabled the point weights are refreshed from the current
    residuals before entering the loss as ``(alpha * R)**2``; the refreshed
    weights are returned (gradients do not flow through them).  With causal
    training the time axis is cut into equal segments, each segment averages
    its own points, and the segment losses are combined as
    ``sum_i w_i L_i / M_nonempty`` with stop-gradient weights.
    """
    lam = jnp.asarray(lam)
    r = pde_residual(model, problem, params, batch.pde_points)
    a_pde = batch.pde_alpha
    if rba is not None:
        a_pde = jax.lax.stop_gradient(rba_update(a_pde, r, rba.gamma, rba.eta))
        sq = (a_pde * r) ** 2
    else:
        sq = r**2
    if causal is not None and problem.time_dependent:
        M = causal.segments
        ids = _segment_ids(problem, batch.pde_points, M)
        sums = jax.ops.segment_sum(sq, ids, num_segments=M)
        counts = jax.ops.segment_sum(jnp.ones_like(sq), ids, num_segments=M)
        seg = sums / jnp.maximum(counts, 1.0)
        w = jax.lax.stop_gradient(causal_weights(seg, causal.epsilon))
        l_pde = jnp.sum(w * seg) / jnp.maximum(jnp.sum(counts > 0), 1)
    else:
        w = jnp.ones(1)
        l_pde = jnp.mean(sq)

    a_ic = batch.ic_alpha
    if batch.ic_points.shape[0]:
        e = ic_residual(model, problem, params, batch.ic_points, batch.ic_targets)
        if rba is not None:
            a_ic = jax.lax.stop_gradient(rba_update(a_ic, e, rba.gamma, rba.eta))
            l_ic = jnp.mean((a_ic * e) ** 2)
        else:
            l_ic = jnp.mean(e**2)
    else:
        e = jnp.zeros(0)
        l_ic = jnp.asarray(0.0)
    terms = jnp.stack([l_pde, l_ic, jnp.asarray(0.0)])
    return LossOutput(total=jnp.sum(lam * terms), terms=terms, pde_residual=r, ic_residual=e,
                      pde_alpha=a_pde, ic_alpha=a_ic, causal=w)


def batch_from_pool(problem: PdeProblem, pool: CollocationPool) -> LossBatch:
    return LossBatch(
        pde_points=jnp.asarray(pool.active_points),
        pde_alpha=jnp.asarray(pool.rba[pool.active]),
        ic_points=jnp.asarray(pool.ic_points),
        ic_targets=jnp.asarray(ic_targets(problem, pool.ic_points)),
        ic_alpha=jnp.asarray(pool.ic_rba),
    )


def composite_loss(model, params, pool: CollocationPool, weights: LossWeights, problem: PdeProblem,
                   causal: CausalConfig | None = None, rba: RbaConfig | None = None):
    """Total loss, per-term breakdown and per-point residual magnitudes on the pool's active set.

    Boundary conditions are built into the networks, so the ``bc`` entry is
    always zero.  Raises :class:`NumericError` naming the first offending
    point when a residual is not finite.
    """
    batch = batch_from_pool(problem, pool)
    out = loss_terms(model, problem, params, batch, weights.as_array(), rba=rba, causal=causal)
    for name, res, pts in (("PDE", out.pde_residual, batch.pde_points), ("IC", out.ic_residual, batch.ic_points)):
        bad = np.flatnonzero(~np.isfinite(np.asarray(res)))
        if bad.size:
            i = int(bad[0]) % max(len(pts), 1)
            raise NumericError(f"non-finite {name} residual at point {np.asarray(pts)[i].tolist()}")
    breakdown = {"pde": float(out.terms[0]), "ic": float(out.terms[1]), "bc": 0.0}
    residuals = {"pde": np.abs(np.asarray(out.pde_residual)), "ic": np.abs(np.asarray(out.ic_residual))}
    return float(out.total), breakdown, residuals
