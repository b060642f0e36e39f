"""Chebyshev-tanh and normalized sine basis families, plus their Gaussian moments."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np
from numpy.polynomial import chebyshev, hermite_e
from numpy.polynomial import polynomial as P

from . import diffcore as dc
from .errors import ConfigurationError, DegenerateBasisError

SIGMA_EPS = 1e-8


@dataclass(frozen=True)
class ChebyBasisSpec:
    """Chebyshev orders ``1..D`` applied to ``tanh(x)``; the constant term is left to the bias."""

    D: int

    def __post_init__(self):
        if self.D < 1:
            raise ConfigurationError("Chebyshev basis needs D >= 1")


@dataclass(frozen=True)
class SineBasisSpec:
    omega: tuple
    phase: tuple

    def __post_init__(self):
        if len(self.omega) != len(self.phase):
            raise ConfigurationError("omega and phase must have equal length")

    @property
    def D(self) -> int:
        return len(self.omega)


@dataclass(frozen=True)
class BasisMoments:
    mu0: np.ndarray
    mu1: np.ndarray


@functools.lru_cache(maxsize=None)
def cheby_tables(D: int, K: int) -> tuple:
    """Polynomials in ``y = tanh x`` for ``d^k/dx^k T_m(tanh x)``, ``k <= K``, ``m = 1..D``.

    Each polynomial has a definite parity, so it is stored as ``(r, q)`` with
    ``p(y) = y**r * q(y**2)`` and ``q`` listed from the highest power down.
    """
    one_minus_y2 = np.array([1.0, 0.0, -1.0])
    tables = []
    polys = [chebyshev.cheb2poly([0.0] * m + [1.0]) for m in range(1, D + 1)]
    for k in range(K + 1):
        row = []
        for m, p in enumerate(polys, start=1):
            r = (m + k) % 2
            q = np.asarray(p[r::2], dtype=float)
            row.append((r, tuple(float(c) for c in q[::-1])))
        tables.append(tuple(row))
        polys = [P.polymul(P.polyder(p), one_minus_y2) for p in polys]
    return tuple(tables)


def _eval_parity_poly(y, s, r, q):
    acc = q[0]
    for c in q[1:]:
        acc = acc * s + c
    if isinstance(acc, float):
        acc = jnp.full_like(y, acc)
    return acc * y if r else acc


def cheby_series(x0, D: int, K: int) -> list:
    """Values and first ``K`` x-derivatives of every basis term, each shaped ``x0.shape + (D,)``."""
    y = dc.fast_tanh(x0)
    s = y * y
    out = []
    for row in cheby_tables(D, K):
        out.append(jnp.stack([_eval_parity_poly(y, s, r, q) for r, q in row], axis=-1))
    return out


def cheby_basis(x, D: int):
    """``T_m(tanh x)`` for ``m = 1..D`` on a value or a jet; adds a trailing axis of size ``D``."""
    if not dc.is_jet(x):
        return cheby_series(x, D, 0)[0]
    return dc.compose(x, cheby_series(x.primal, D, x.order), trailing=1)


def cheby_eval(x, spec: ChebyBasisSpec | int):
    D = spec.D if isinstance(spec, ChebyBasisSpec) else int(spec)
    return cheby_basis(jnp.asarray(x, dtype=jnp.float64), D)


def sine_stats(omega, phase):
    """Mean and standard deviation of ``sin(omega z + phase)`` for ``z ~ N(0, 1)``."""
    mu = jnp.exp(-0.5 * omega**2) * jnp.sin(phase)
    var = 0.5 - 0.5 * jnp.exp(-2.0 * omega**2) * jnp.cos(2.0 * phase) - mu**2
    return mu, jnp.sqrt(jnp.maximum(var, 0.0))


def _check_sigma(sigma, eps):
    if not isinstance(sigma, jax.core.Tracer) and np.any(np.asarray(sigma) <= eps):
        raise DegenerateBasisError(f"sine term with standard deviation {np.min(np.asarray(sigma)):.3g} <= {eps}")


def sine_basis(x, omega, phase, eps: float = SIGMA_EPS):
    """Normalized sine terms ``(sin(w x + p) - mu) / sigma``; adds a trailing axis of size ``D_s``."""
    mu, sigma = sine_stats(omega, phase)
    _check_sigma(sigma, eps)
    x0 = dc.primal(x)
    arg = x0[..., None] * omega + phase
    sn = jnp.sin(arg)
    if not dc.is_jet(x):
        return (sn - mu) / sigma
    cs = jnp.cos(arg)
    inv = 1.0 / sigma
    derivs = [(sn - mu) / sigma, omega * cs * inv, -(omega**2) * sn * inv, -(omega**3) * cs * inv]
    return dc.compose(x, derivs[: x.order + 1], trailing=1)


def sine_eval(x, m: int, spec: SineBasisSpec, eps: float = SIGMA_EPS):
    omega = jnp.asarray(spec.omega[m], dtype=jnp.float64)
    phase = jnp.asarray(spec.phase[m], dtype=jnp.float64)
    return sine_basis(jnp.asarray(x, dtype=jnp.float64), omega[None], phase[None], eps)[..., 0]


def gauss_hermite(nodes: int):
    """Nodes and weights for expectations under the standard normal."""
    z, w = hermite_e.hermegauss(nodes)
    return z, w / np.sqrt(2.0 * np.pi)


def _cheby_numpy(z, D):
    y = np.tanh(z)
    vals, ders = [], []
    for (r0, q0), (r1, q1) in zip(*cheby_tables(D, 1)):
        vals.append(np.polyval(q0, y * y) * (y if r0 else 1.0))
        ders.append(np.polyval(q1, y * y) * (y if r1 else 1.0))
    return np.stack(vals, -1), np.stack(ders, -1)


def tanh_angle_rule(nodes: int):
    """Nodes and weights for ``E[f(z)]``, ``z ~ N(0, 1)``, after substituting ``tanh z = cos(theta)``.

    Gauss-Legendre in ``theta`` on ``(0, pi)``.  Chebyshev-tanh terms become
    ``cos(m theta)`` under a weight that vanishes to all orders at both ends,
    so the rule converges far faster than Gauss-Hermite for these terms.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * np.pi * (x + 1.0)
    z = -np.log(np.tan(0.5 * theta))
    weight = 0.5 * np.pi * w * np.exp(-0.5 * z * z) / (np.sqrt(2.0 * np.pi) * np.sin(theta))
    return z, weight


@functools.lru_cache(maxsize=None)
def _cheby_moments(D: int, nodes: int) -> BasisMoments:
    z, w = tanh_angle_rule(nodes)
    b, db = _cheby_numpy(z, D)
    return BasisMoments(mu0=w @ b**2, mu1=w @ db**2)


def basis_moments(family: str, D: int, quadrature: int = 128, omega=None, phase=None) -> BasisMoments:
    """Second moments ``E[B_m(z)^2]`` and ``E[B_m'(z)^2]`` for ``z ~ N(0, 1)``.

    ``family`` is ``"chebyshev"``, ``"sine"`` (requires ``omega``; ``phase``
    defaults to zero) or ``"identity"`` (every term is ``B(x) = x``).
    Chebyshev moments use :func:`tanh_angle_rule`; sine moments use Gauss-Hermite.
    """
    if quadrature < 32:
        raise ConfigurationError("Gauss-Hermite moments need at least 32 nodes")
    if family == "chebyshev":
        return _cheby_moments(int(D), int(quadrature))
    if family == "identity":
        return BasisMoments(mu0=np.ones(D), mu1=np.ones(D))
    if family == "sine":
        if omega is None:
            raise ConfigurationError("sine moments need the frequencies")
        omega = np.asarray(omega, dtype=float).reshape(-1)
        phase = np.zeros_like(omega) if phase is None else np.asarray(phase, dtype=float).reshape(-1)
        mu, sigma = (np.asarray(v) for v in sine_stats(omega, phase))
        if np.any(sigma <= SIGMA_EPS):
            raise DegenerateBasisError("degenerate sine term in moment computation")
        z, w = gauss_hermite(quadrature)
        arg = z[:, None] * omega + phase
        b = (np.sin(arg) - mu) / sigma
        db = omega * np.cos(arg) / sigma
        return BasisMoments(mu0=w @ b**2, mu1=w @ db**2)
    raise ConfigurationError(f"unknown basis family {family!r}")
