"""Collocation pools and the active training subset."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from .pde import PdeProblem


def grid_points(domain, resolution) -> np.ndarray:
    """Tensor grid including the interval endpoints, row-major over coordinates."""
    if len(resolution) != len(domain):
        raise ConfigurationError("one resolution per coordinate is required")
    if any(int(n) < 2 for n in resolution):
        raise ConfigurationError("resolution must be at least 2 per axis")
    axes = [np.linspace(lo, hi, int(n)) for (lo, hi), n in zip(domain, resolution)]
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)


@dataclass
class CollocationPool:
    points: np.ndarray
    rba: np.ndarray
    active: np.ndarray
    ic_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    ic_rba: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def active_points(self) -> np.ndarray:
        return self.points[self.active]


def make_pool(problem: PdeProblem, resolution=(400, 400), rng=None, n_pde: int | None = None,
              n_ic: int = 64) -> CollocationPool:
    """Uniform pool over the domain with every RBA weight at one.

    The initial active set is a uniform draw of ``n_pde`` pool indices without
    replacement (the whole pool when ``n_pde`` is ``None``).  Initial-condition
    points are equispaced over the spatial interval at ``t = 0``; each
    constrained time derivative gets its own block of RBA weights.
    """
    rng = np.random.default_rng(rng)
    points = grid_points(problem.domain, resolution)
    n = len(points)
    if n_pde is None or n_pde >= n:
        if n_pde is not None and n_pde > n:
            raise ConfigurationError(f"N_pde={n_pde} exceeds the pool size {n}")
        active = np.arange(n)
    else:
        active = np.sort(rng.choice(n, size=n_pde, replace=False))
    if problem.has_ic:
        lo, hi = problem.domain[1]
        xs = np.linspace(lo, hi, n_ic)
        ic_points = np.stack([np.full(n_ic, problem.domain[0][0]), xs], axis=1)
        ic_rba = np.ones(n_ic * len(problem.ic_derivatives))
    else:
        ic_points = np.zeros((0, problem.dim))
        ic_rba = np.zeros(0)
    return CollocationPool(points=points, rba=np.ones(n), active=active, ic_points=ic_points, ic_rba=ic_rba)
