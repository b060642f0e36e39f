"""Layer building blocks shared by the network classes.

Every forward function accepts either plain arrays shaped ``(..., features)``
or :class:`~rgakan.diffcore.Jet` objects with the same trailing layout.
"""

from __future__ import annotations

import jax
import jax.numpy as jnp
import numpy as np

from .. import diffcore as dc
from ..bases import basis_moments, cheby_basis, sine_basis
from ..initialization import default_cheby_sigma, glorot_like_sigmas, init_coefficients


def cheby_layer(w, b, x):
    """``y_j = sum_i sum_m w[j, i, m] T_m(tanh x_i) + b_j``; ``b`` may be ``None``."""
    return dc.contract(cheby_basis(x, w.shape[-1]), w, b)


def sine_layer(w, b, omega, phase, x):
    return dc.contract(sine_basis(x, omega, phase), w, b)


def gate_mix(f, U, V):
    """``f U + (1 - f) V``, written literally so ``f = 1`` returns ``U`` exactly."""
    return f * U + (1.0 - f) * V


def rga_block(p: dict, prefix: str, x, U, V):
    f = cheby_layer(p[f"{prefix}.w1"], p[f"{prefix}.b1"], x)
    g = gate_mix(f, U, V)
    beta = p[f"{prefix}.beta"]
    z = beta * g + (1.0 - beta) * x
    f2 = cheby_layer(p[f"{prefix}.w2"], p[f"{prefix}.b2"], z)
    g2 = gate_mix(f2, U, V)
    alpha = p[f"{prefix}.alpha"]
    return alpha * g2 + (1.0 - alpha) * x


def rwf_weight(s, v):
    return jnp.exp(s)[:, None] * v


def rwf_dense(p: dict, prefix: str, x):
    return dc.linear(x, rwf_weight(p[f"{prefix}.s"], p[f"{prefix}.v"]), p[f"{prefix}.b"])


def effective_weight_matrix(w) -> np.ndarray:
    """Slope of a Chebyshev layer at the origin: ``sum_{m odd} m (-1)^((m-1)/2) w[:, :, m]``."""
    w = np.asarray(w)
    m = np.arange(1, w.shape[-1] + 1)
    factor = np.where(m % 2 == 1, m * (-1.0) ** ((m - 1) // 2), 0.0)
    return w @ factor


def cheby_sigmas(d_in: int, d_out: int, D: int, scheme: str, gain: float) -> np.ndarray:
    if scheme == "default":
        return np.full(D, gain * default_cheby_sigma(d_in, D))
    return glorot_like_sigmas(basis_moments("chebyshev", D), d_in, d_out, D, gain)


def init_cheby_layer(key, d_in: int, d_out: int, D: int, scheme: str, gain: float, bias: bool = True):
    w = init_coefficients(key, (d_out, d_in, D), cheby_sigmas(d_in, d_out, D, scheme, gain))
    return w, (jnp.zeros(d_out) if bias else None)


def init_sine_layer(key, d_in: int, d_out: int, D_s: int, gain: float):
    """Frequencies from N(0, 1), zero phases, Glorot-like coefficients for those frequencies."""
    k_omega, k_w = jax.random.split(key)
    omega = jax.random.normal(k_omega, (D_s,), dtype=jnp.float64)
    phase = jnp.zeros(D_s)
    moments = basis_moments("sine", D_s, omega=np.asarray(omega), phase=np.zeros(D_s))
    sigmas = glorot_like_sigmas(moments, d_in, d_out, D_s, gain)
    w = init_coefficients(k_w, (d_out, d_in, D_s), sigmas)
    return w, jnp.zeros(d_out), omega, phase


def init_rwf(key, n_in: int, n_out: int, scale_mean: float = 0.5, scale_std: float = 0.1):
    """Random weight factorization whose effective weight is Glorot-normal distributed."""
    k_w, k_s = jax.random.split(key)
    w = jax.random.normal(k_w, (n_out, n_in), dtype=jnp.float64) * np.sqrt(2.0 / (n_in + n_out))
    s = scale_mean + scale_std * jax.random.normal(k_s, (n_out,), dtype=jnp.float64)
    return s, w / jnp.exp(s)[:, None], jnp.zeros(n_out)
