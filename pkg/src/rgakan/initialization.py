"""Weight initialization: the default Chebyshev rule, the Glorot-like rule and
the least-squares fit of the output layer to the initial condition."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from .bases import BasisMoments
from .errors import ConfigurationError, DegenerateMomentError

SCHEMES = ("default", "glorot_like")


@dataclass(frozen=True)
class InitConfig:
    scheme: str = "glorot_like"
    gain: float = 1.0
    # Gain used on the layer that sees the (embedded) raw coordinates.
    input_gain: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown init scheme {self.scheme!r}")
        if not (self.gain > 0 and self.input_gain > 0):
            raise ConfigurationError("gain must be positive")


def glorot_like_sigmas(moments: BasisMoments, d_in: int, d_out: int, D: int, gain: float = 1.0) -> np.ndarray:
    """Per-term standard deviations balancing forward and backward variance."""
    if d_in < 1 or d_out < 1:
        raise ConfigurationError("fan-in and fan-out must be positive")
    mu0 = np.asarray(moments.mu0, dtype=float)
    mu1 = np.asarray(moments.mu1, dtype=float)
    if mu0.shape != (D,) or mu1.shape != (D,):
        raise ConfigurationError(f"moments must have length {D}")
    denom = d_in * mu0 + d_out * mu1
    if np.any(denom <= 0):
        raise DegenerateMomentError("a basis term has zero forward and backward moments")
    return gain * np.sqrt(2.0 / (D * denom))


def default_cheby_sigma(d_in: int, D: int) -> float:
    if d_in < 1 or D < 1:
        raise ConfigurationError("d_in and D must be positive")
    return 1.0 / np.sqrt(d_in * (D + 1))


def init_coefficients(key, shape, sigmas) -> jnp.ndarray:
    """Normal draws with a per-term standard deviation along the last axis."""
    sigmas = jnp.asarray(sigmas, dtype=jnp.float64)
    return jax.random.normal(key, shape, dtype=jnp.float64) * sigmas


@dataclass(frozen=True)
class LeastSquaresResult:
    coeffs: np.ndarray
    residual_norm: float
    rank: int
    rank_deficient: bool


def solve_least_squares(design, targets, ridge: float = 0.0) -> LeastSquaresResult:
    """Minimize ``|y - B b|^2 + ridge |b|^2`` with an SVD-based solver.

    The ridge term is handled by stacking ``sqrt(ridge) I`` under the design,
    so no normal equations are formed.  Without ridge a rank-deficient design
    yields the minimum-norm solution and sets ``rank_deficient``.
    """
    B = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if B.ndim != 2 or B.shape[0] < 1 or B.shape[1] < 1:
        raise ConfigurationError("design must be a non-empty matrix")
    if ridge < 0:
        raise ConfigurationError("ridge must be non-negative")
    n, p = B.shape
    if ridge > 0:
        A = np.vstack([B, np.sqrt(ridge) * np.eye(p)])
        rhs = np.concatenate([y, np.zeros((p,) + y.shape[1:])])
    else:
        A, rhs = B, y
    coeffs, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    deficient = ridge == 0 and rank < p
    if deficient:
        warnings.warn(f"rank-deficient design ({rank} < {p}); using the minimum-norm solution", stacklevel=2)
    resid = float(np.linalg.norm(y - B @ coeffs))
    return LeastSquaresResult(coeffs=coeffs, residual_norm=resid, rank=int(rank), rank_deficient=deficient)


def physics_informed_output_init(model, params, ic_points, ic_targets, ridge: float = 1e-3,
                                 min_points: int = 8):
    """Fit the output layer to initial-condition data with everything upstream frozen.

    ``model`` must expose ``output_design(params, points)`` returning the
    design matrix whose product with the flattened output coefficients is the
    network output, and ``with_output(params, coeffs)``.
    Returns the updated parameter dict and the least-squares result.
    """
    ic_points = np.asarray(ic_points, dtype=float)
    ic_targets = np.asarray(ic_targets, dtype=float).reshape(len(ic_points), -1)
    if len(ic_points) < min_points:
        raise ConfigurationError(f"need at least {min_points} initial-condition points, got {len(ic_points)}")
    design = np.asarray(model.output_design(params, jnp.asarray(ic_points)))
    d_out = ic_targets.shape[1]
    if d_out != 1:
        raise ConfigurationError("least-squares output init supports a single output")
    result = solve_least_squares(design, ic_targets[:, 0], ridge)
    return model.with_output(params, jnp.asarray(result.coeffs)), result
