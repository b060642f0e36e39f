"""Exact boundary-condition handling: periodic embeddings and Dirichlet shaping."""

from __future__ import annotations

from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np

from .. import diffcore as dc
from ..errors import ConfigurationError


@dataclass(frozen=True)
class BoundarySpec:
    """``periodic`` holds ``(coordinate, period)`` pairs; ``dirichlet`` holds
    ``(coordinate, a, b)`` triples for homogeneous walls at ``a`` and ``b``."""

    periodic: tuple = ()
    dirichlet: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "periodic", tuple((int(i), float(L)) for i, L in self.periodic))
        object.__setattr__(self, "dirichlet", tuple((int(i), float(a), float(b)) for i, a, b in self.dirichlet))
        for i, L in self.periodic:
            if L <= 0:
                raise ConfigurationError(f"periodic coordinate {i} needs a positive period, got {L}")
        for i, a, b in self.dirichlet:
            if not b > a:
                raise ConfigurationError(f"Dirichlet interval for coordinate {i} is empty")
        if {i for i, _ in self.periodic} & {i for i, _, _ in self.dirichlet}:
            raise ConfigurationError("a coordinate cannot be both periodic and Dirichlet")

    def embedded_dim(self, d_in: int) -> int:
        return d_in + len(self.periodic)


def bc_embed(x, spec: BoundarySpec):
    """Replace every periodic coordinate by ``(cos(W x), sin(W x))`` with ``W = 2 pi / L``."""
    if not spec.periodic:
        return x
    periods = dict(spec.periodic)
    d = dc.primal(x).shape[-1]
    cols = []
    for i in range(d):
        xi = dc.take(x, i)
        if i in periods:
            omega = 2.0 * np.pi / periods[i]
            arg = xi * omega
            cols += [dc.cos(arg), dc.sin(arg)]
        else:
            cols.append(xi)
    return dc.stack(cols, axis=-1)


def dirichlet_factor(x, spec: BoundarySpec):
    """Product of ``(x - a)(b - x) 4 / (b - a)^2`` over the Dirichlet coordinates, or ``None``."""
    factor = None
    for i, a, b in spec.dirichlet:
        xi = dc.take(x, i)
        term = (xi - a) * (b - xi) * (4.0 / (b - a) ** 2)
        factor = term if factor is None else factor * term
    return factor


def dirichlet_shape(u, x, spec: BoundarySpec):
    """Multiply an output of shape ``(..., d_out)`` by the shaping factor of its points."""
    factor = dirichlet_factor(x, spec)
    if factor is None:
        return u
    return u * dc.expand_last(factor)
