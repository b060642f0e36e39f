"""Evaluation metrics and training-dynamics diagnostics (gradient SNR, geometric complexity)."""

from __future__ import annotations

from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from . import diffcore as dc
from .errors import ConfigurationError, UndefinedMetricError, ValidationError


def relative_l2(pred, ref) -> float:
    """``|pred - ref|_2 / |ref|_2`` over all entries; ``ref`` may be an array or a ReferenceField."""
    ref = np.asarray(getattr(ref, "values", ref), dtype=float).ravel()
    pred = np.asarray(pred, dtype=float).ravel()
    if pred.shape != ref.shape:
        raise ValidationError(f"prediction has {pred.size} values, reference has {ref.size}")
    norm = np.linalg.norm(ref)
    if norm == 0:
        raise UndefinedMetricError("relative error against a zero reference is undefined")
    return float(np.linalg.norm(pred - ref) / norm)


def predict(model, params, points, chunk: int = 8192) -> np.ndarray:
    """Network values on many points, evaluated in fixed-size chunks to bound memory."""
    points = np.asarray(points, dtype=float)
    apply = jax.jit(model.apply)
    out = []
    for start in range(0, len(points), chunk):
        block = points[start:start + chunk]
        pad = chunk - len(block) if len(points) > chunk else 0
        if pad:
            block = np.concatenate([block, np.repeat(block[-1:], pad, axis=0)])
        out.append(np.asarray(apply(params, jnp.asarray(block)))[: chunk - pad])
    return np.concatenate(out)[:, 0]


@dataclass(frozen=True)
class SnrResult:
    value: float
    infinite: bool

    def __float__(self):
        return self.value


def snr_from_gradients(grads) -> SnrResult:
    """Norm of the mean over the norm of the population std, both taken elementwise over batches.

    ``grads`` is a ``(B, P)`` array of flattened per-batch gradients.
    """
    g = np.asarray(grads, dtype=float)
    if g.ndim != 2 or g.shape[0] < 2:
        raise ConfigurationError("SNR needs gradients from at least two batches")
    mean = g.mean(axis=0)
    std = g.std(axis=0)
    noise = np.linalg.norm(std)
    signal = np.linalg.norm(mean)
    if noise == 0:
        return SnrResult(value=float("inf"), infinite=True)
    return SnrResult(value=float(signal / noise), infinite=False)


def flatten(tree) -> jnp.ndarray:
    return jnp.concatenate([jnp.ravel(v) for v in jax.tree_util.tree_leaves(tree)])


def batch_snr(loss_fn, params, batches) -> SnrResult:
    """Gradient SNR across ``batches``; ``loss_fn(params, batch)`` is the per-batch loss."""
    if len(batches) < 2:
        raise ConfigurationError("SNR needs at least two batches")
    grad = jax.jit(jax.grad(loss_fn))
    return snr_from_gradients(np.stack([np.asarray(flatten(grad(params, b))) for b in batches]))


def shuffled_shards(n: int, batches: int = 16, seed: int = 0) -> list:
    """Split ``range(n)`` into ``batches`` contiguous shards after a seeded shuffle."""
    if batches < 2 or batches > n:
        raise ConfigurationError(f"cannot split {n} points into {batches} batches")
    order = np.random.default_rng(seed).permutation(n)
    size = n // batches
    return [np.sort(order[i * size:(i + 1) * size]) for i in range(batches)]


def geometric_complexity(model, params, points) -> float:
    """Mean over points of the squared Frobenius norm of the input Jacobian."""
    points = jnp.asarray(points)
    if points.shape[0] == 0:
        raise ConfigurationError("geometric complexity needs at least one point")
    d = points.shape[1]
    indices = [tuple(int(i == j) for i in range(d)) for j in range(d)]
    fields = dc.input_derivatives(model, params, points, indices)
    sq = sum(jnp.sum(fields[ix] ** 2, axis=-1) for ix in indices)
    return float(jnp.mean(sq))


def ib_phases(iterations, snr, window: int = 5) -> dict:
    """Heuristic training-phase markers from an SNR trace (labels are indicative only).

    The fitting phase is taken to end where the smoothed log-SNR first turns
    downward after its initial rise; the equilibrium phase starts where the
    smoothed log-SNR trend flattens for the first time after that drop.
    """
    it = np.asarray(iterations)
    s = np.asarray(snr, dtype=float)
    keep = np.isfinite(s) & (s > 0)
    it, s = it[keep], np.log10(s[keep])
    notes = {"normative": False, "fitting_end": None, "equilibrium_start": None}
    if len(s) < 2 * window + 2:
        return notes
    smooth = np.convolve(s, np.ones(window) / window, mode="valid")
    slope = np.diff(smooth)
    offset = window // 2
    down = np.flatnonzero(slope < 0)
    if down.size:
        k = int(down[0])
        notes["fitting_end"] = int(it[k + offset])
        scale = np.std(slope) or 1.0
        flat = np.flatnonzero(np.abs(slope[k + 1:]) < 0.1 * scale)
        if flat.size:
            notes["equilibrium_start"] = int(it[k + 1 + flat[0] + offset])
    return notes
