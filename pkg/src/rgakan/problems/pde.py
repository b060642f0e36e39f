"""The seven forward PDE benchmarks.

Coordinates are ordered ``(t, x)`` for time-dependent problems and ``(x, y)``
for the two elliptic ones.  Derivative fields are keyed by multi-indices over
those coordinates, e.g. ``(1, 0)`` is ``u_t`` and ``(0, 2)`` is ``u_xx``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import jax.numpy as jnp
import numpy as np

from .. import diffcore as dc
from ..errors import ConfigurationError, ContractError, UnsupportedError
from ..models.boundary import BoundarySpec

PROBLEM_IDS = ("allen_cahn", "burgers", "kdv", "sine_gordon", "advection", "helmholtz", "poisson")


def _sin_pi(x, k=1.0):
    return dc.sin(x * (k * np.pi))


@dataclass(frozen=True)
class PdeProblem:
    id: str
    coords: tuple
    domain: tuple  # ((lo, hi), ...) per coordinate
    derivatives: tuple  # multi-indices the residual consumes, value index first
    periodic: tuple = ()  # coordinates with periodic conditions
    dirichlet: tuple = ()  # coordinates with homogeneous Dirichlet walls
    params: dict = field(default_factory=dict)
    literal: bool = False  # sine_gordon only: drop the source that makes the closed form exact

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def time_dependent(self) -> bool:
        return self.coords[0] == "t"

    @property
    def has_ic(self) -> bool:
        return self.time_dependent

    @property
    def has_analytic(self) -> bool:
        return self.id in ("sine_gordon", "advection", "helmholtz", "poisson")

    @property
    def ic_derivatives(self) -> tuple:
        """Time-derivative orders constrained at ``t = 0`` (value, and velocity for second order in time)."""
        return (0, 1) if self.id == "sine_gordon" else (0,)

    def boundary_spec(self) -> BoundarySpec:
        """Hard-constraint description used by the network embeddings."""
        return BoundarySpec(
            periodic=tuple((i, self.domain[i][1] - self.domain[i][0]) for i in self.periodic),
            dirichlet=tuple((i, *self.domain[i]) for i in self.dirichlet),
        )

    # -- equations -------------------------------------------------------

    def residual(self, fields: dict, points) -> jnp.ndarray:
        """``F[u] - f`` at every point; ``fields`` maps multi-indices to ``(N,)`` or ``(N, 1)`` arrays."""
        missing = [ix for ix in self.derivatives if ix not in fields]
        if missing:
            raise ContractError(f"{self.id} residual is missing derivative fields {missing}")
        f = {ix: jnp.reshape(fields[ix], (-1,)) for ix in self.derivatives}
        return self._residual(f, jnp.asarray(points))

    def _residual(self, f, pts):
        pid, p = self.id, self.params
        if pid == "allen_cahn":
            u = f[(0, 0)]
            return f[(1, 0)] - p["diffusion"] * f[(0, 2)] - p["reaction"] * (u - u**3)
        if pid == "burgers":
            u = f[(0, 0)]
            return f[(1, 0)] + u * f[(0, 1)] - p["nu"] * f[(0, 2)]
        if pid == "kdv":
            u = f[(0, 0)]
            return f[(1, 0)] + u * f[(0, 1)] + p["dispersion"] ** 2 * f[(0, 3)]
        if pid == "sine_gordon":
            res = f[(2, 0)] - f[(0, 2)] + jnp.sin(f[(0, 0)])
            if not self.literal:
                res = res - jnp.sin(self.analytic(pts))
            return res
        if pid == "advection":
            return f[(1, 0)] + p["speed"] * f[(0, 1)]
        if pid == "helmholtz":
            a1, a2 = p["a1"], p["a2"]
            x, y = pts[:, 0], pts[:, 1]
            src = (1.0 - np.pi**2 * (a1**2 + a2**2)) * jnp.sin(a1 * np.pi * x) * jnp.sin(a2 * np.pi * y)
            return f[(2, 0)] + f[(0, 2)] + f[(0, 0)] - src
        if pid == "poisson":
            w = p["omega"]
            x, y = pts[:, 0], pts[:, 1]
            src = -2.0 * np.pi**2 * w**2 * jnp.sin(w * np.pi * x) * jnp.sin(w * np.pi * y)
            return f[(2, 0)] + f[(0, 2)] - src
        raise UnsupportedError(pid)  # pragma: no cover

    def initial_condition(self, x):
        """``u(0, x)``; accepts arrays or jets."""
        if not self.has_ic:
            raise UnsupportedError(f"{self.id} has no initial condition")
        if self.id == "allen_cahn":
            return x * x * dc.cos(x * np.pi)
        if self.id == "burgers":
            return -_sin_pi(x)
        if self.id == "kdv":
            return dc.cos(x * np.pi)
        if self.id == "sine_gordon":
            return _sin_pi(x)
        return dc.sin(x)  # advection

    def analytic(self, points):
        """Closed-form solution on ``(N, dim)`` points (values or a jet)."""
        if not self.has_analytic:
            raise UnsupportedError(f"{self.id} has no closed-form solution")
        a, b = dc.take(points, 0), dc.take(points, 1)
        p = self.params
        if self.id == "sine_gordon":
            return 0.5 * (_sin_pi(b + a) + _sin_pi(b - a))
        if self.id == "advection":
            return dc.sin(_mod(b - p["speed"] * a, 2.0 * np.pi))
        if self.id == "helmholtz":
            return _sin_pi(a, p["a1"]) * _sin_pi(b, p["a2"])
        return _sin_pi(a, p["omega"]) * _sin_pi(b, p["omega"])  # poisson

    def analytic_model(self) -> "AnalyticModel":
        return AnalyticModel(self)


def _mod(x, period):
    # Piecewise shift: derivatives are unchanged away from the wrap points.
    if dc.is_jet(x):
        return dc.Jet((jnp.mod(x.primal, period),) + x.coeffs[1:])
    return jnp.mod(x, period)


class AnalyticModel:
    """Wrap a closed-form solution in the model interface so it can be differentiated like a network."""

    def __init__(self, problem: PdeProblem):
        self.problem = problem

    def apply(self, params, x):
        return dc.expand_last(self.problem.analytic(x))


def get_problem(problem_id: str, **overrides) -> PdeProblem:
    """Benchmark definition with its default coefficients; ``overrides`` adjust coefficients."""
    literal = bool(overrides.pop("literal", False))
    if problem_id == "allen_cahn":
        params = {"diffusion": 1e-4, "reaction": 5.0}
        spec = dict(coords=("t", "x"), domain=((0.0, 1.0), (-1.0, 1.0)),
                    derivatives=((0, 0), (1, 0), (0, 2)), periodic=(1,))
    elif problem_id == "burgers":
        params = {"nu": 1.0 / (100.0 * np.pi)}
        spec = dict(coords=("t", "x"), domain=((0.0, 1.0), (-1.0, 1.0)),
                    derivatives=((0, 0), (1, 0), (0, 1), (0, 2)), dirichlet=(1,))
    elif problem_id == "kdv":
        params = {"dispersion": 0.022}
        spec = dict(coords=("t", "x"), domain=((0.0, 1.0), (-1.0, 1.0)),
                    derivatives=((0, 0), (1, 0), (0, 1), (0, 3)), periodic=(1,))
    elif problem_id == "sine_gordon":
        params = {}
        spec = dict(coords=("t", "x"), domain=((0.0, 1.0), (0.0, 1.0)),
                    derivatives=((0, 0), (2, 0), (0, 2)), dirichlet=(1,))
    elif problem_id == "advection":
        params = {"speed": 20.0}
        spec = dict(coords=("t", "x"), domain=((0.0, 1.0), (0.0, 2.0 * np.pi)),
                    derivatives=((0, 0), (1, 0), (0, 1)), periodic=(1,))
    elif problem_id == "helmholtz":
        params = {"a1": 1.0, "a2": 4.0}
        spec = dict(coords=("x", "y"), domain=((-1.0, 1.0), (-1.0, 1.0)),
                    derivatives=((0, 0), (2, 0), (0, 2)), dirichlet=(0, 1))
    elif problem_id == "poisson":
        params = {"omega": 1.0}
        spec = dict(coords=("x", "y"), domain=((-1.0, 1.0), (-1.0, 1.0)),
                    derivatives=((0, 0), (2, 0), (0, 2)), dirichlet=(0, 1))
    else:
        raise ConfigurationError(f"unknown problem {problem_id!r}; choose from {PROBLEM_IDS}")
    unknown = set(overrides) - set(params)
    if unknown:
        raise ConfigurationError(f"{problem_id} has no coefficients {sorted(unknown)}")
    params.update({k: float(v) for k, v in overrides.items()})
    if literal and problem_id != "sine_gordon":
        raise ConfigurationError("the literal flag only applies to sine_gordon")
    return PdeProblem(id=problem_id, params=params, literal=literal, **spec)
