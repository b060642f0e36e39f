"""RGA KAN, cPIKAN and PirateNet.

Parameters live in flat ``dict[str, jax.Array]`` stores with dotted names so
that ordering, counting and serialization are trivial.  Every model exposes

* ``init(key) -> params``
* ``apply(params, x)`` for values of shape ``(N, d_in)`` or input jets
* ``output_design(params, x)`` / ``with_output(params, coeffs)`` for the
  least-squares output initialization
* ``param_count_formula()`` (closed form) next to :func:`count_params`
* ``param_shapes()``, the parameter layout without drawing any numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import jax
import jax.numpy as jnp
import numpy as np

from .. import diffcore as dc
from ..bases import cheby_basis
from ..errors import ConfigurationError
from ..initialization import InitConfig
from .boundary import BoundarySpec, bc_embed, dirichlet_factor, dirichlet_shape
from .layers import (cheby_layer, init_cheby_layer, init_rwf, init_sine_layer, rga_block,
                     rwf_dense, sine_layer)


def _keys(key, names):
    return {name: jax.random.fold_in(key, i) for i, name in enumerate(names)}


def count_params(params: dict) -> int:
    """Total entries in a parameter store or in a ``param_shapes()`` layout."""
    return int(sum(int(np.prod(getattr(v, "shape", np.shape(v)))) for v in params.values()))


def _layout(pairs) -> dict:
    return {name: jax.ShapeDtypeStruct(tuple(shape), jnp.float64) for name, shape in pairs}


class _Model:
    spec = None

    @property
    def d_in(self) -> int:
        return self.spec.d_in

    @property
    def boundary(self) -> BoundarySpec:
        return self.spec.boundary

    @property
    def embedded_dim(self) -> int:
        return self.boundary.embedded_dim(self.spec.d_in)

    def _shape_design(self, design, x):
        factor = dirichlet_factor(x, self.boundary)
        return design if factor is None else design * factor[:, None]


@dataclass(frozen=True)
class RgaKanSpec:
    d_in: int
    width: int = 16
    blocks: int = 6
    degree: int = 5
    sine_terms: int = 5
    d_out: int = 1
    alpha0: float = 0.0
    beta0: float = 0.0
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    init: InitConfig = field(default_factory=InitConfig)

    def __post_init__(self):
        for name in ("d_in", "width", "degree", "sine_terms", "d_out"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.blocks < 0:
            raise ConfigurationError("blocks must be non-negative")


class RgaKan(_Model):
    """Sine KAN layer, shared Chebyshev gates, ``N`` gated residual blocks and a bias-free output."""

    def __init__(self, spec: RgaKanSpec):
        self.spec = spec

    def init(self, key) -> dict:
        s = self.spec
        cfg = s.init
        names = ["sine", "gate_u", "gate_v"] + [f"block{l}.{k}" for l in range(s.blocks) for k in (1, 2)] + ["out"]
        keys = _keys(key, names)
        p = {}
        p["sine.w"], p["sine.b"], p["sine.omega"], p["sine.phase"] = init_sine_layer(
            keys["sine"], self.embedded_dim, s.width, s.sine_terms, cfg.input_gain)
        for gate in ("gate_u", "gate_v"):
            p[f"{gate}.w"], p[f"{gate}.b"] = init_cheby_layer(
                keys[gate], s.width, s.width, s.degree, cfg.scheme, cfg.gain)
        for l in range(s.blocks):
            for k in (1, 2):
                p[f"block{l}.w{k}"], p[f"block{l}.b{k}"] = init_cheby_layer(
                    keys[f"block{l}.{k}"], s.width, s.width, s.degree, cfg.scheme, cfg.gain)
            p[f"block{l}.alpha"] = jnp.asarray(float(s.alpha0))
            p[f"block{l}.beta"] = jnp.asarray(float(s.beta0))
        p["out.w"], _ = init_cheby_layer(keys["out"], s.width, s.d_out, s.degree, cfg.scheme, cfg.gain, bias=False)
        return p

    def param_shapes(self) -> dict:
        s = self.spec
        W, D = s.width, s.degree
        pairs = [("sine.w", (W, self.embedded_dim, s.sine_terms)), ("sine.b", (W,)),
                 ("sine.omega", (s.sine_terms,)), ("sine.phase", (s.sine_terms,))]
        for gate in ("gate_u", "gate_v"):
            pairs += [(f"{gate}.w", (W, W, D)), (f"{gate}.b", (W,))]
        for l in range(s.blocks):
            for k in (1, 2):
                pairs += [(f"block{l}.w{k}", (W, W, D)), (f"block{l}.b{k}", (W,))]
            pairs += [(f"block{l}.alpha", ()), (f"block{l}.beta", ())]
        pairs.append(("out.w", (s.d_out, W, D)))
        return _layout(pairs)

    def hidden(self, p: dict, x):
        xe = bc_embed(x, self.boundary)
        s = sine_layer(p["sine.w"], p["sine.b"], p["sine.omega"], p["sine.phase"], xe)
        U = cheby_layer(p["gate_u.w"], p["gate_u.b"], s)
        V = cheby_layer(p["gate_v.w"], p["gate_v.b"], s)
        h = s
        for l in range(self.spec.blocks):
            h = rga_block(p, f"block{l}", h, U, V)
        return h

    def apply(self, p: dict, x):
        h = self.hidden(p, x)
        u = cheby_layer(p["out.w"], None, h)
        return dirichlet_shape(u, x, self.boundary)

    def output_design(self, p: dict, x):
        h = self.hidden(p, x)
        design = cheby_basis(h, self.spec.degree).reshape(h.shape[0], -1)
        return self._shape_design(design, x)

    def with_output(self, p: dict, coeffs) -> dict:
        s = self.spec
        return {**p, "out.w": jnp.asarray(coeffs).reshape(1, s.width, s.degree)}

    def param_count_formula(self) -> int:
        s = self.spec
        dH, N, D, Ds = s.width, s.blocks, s.degree, s.sine_terms
        return (2 * dH * (dH * D + 1) * (N + 1) + 2 * N + 2 * Ds
                + dH * (self.embedded_dim * Ds + s.d_out * D + 1))


@dataclass(frozen=True)
class CpikanSpec:
    d_in: int
    width: int = 16
    depth: int = 3  # number of hidden Chebyshev layers
    degree: int = 5
    d_out: int = 1
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    init: InitConfig = field(default_factory=InitConfig)

    def __post_init__(self):
        for name in ("d_in", "width", "degree", "d_out"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.depth < 0:
            raise ConfigurationError("depth must be non-negative")


class Cpikan(_Model):
    """Stack of Chebyshev KAN layers; ``depth`` hidden layers plus the output layer."""

    def __init__(self, spec: CpikanSpec):
        self.spec = spec

    def _dims(self):
        s = self.spec
        return [self.embedded_dim] + [s.width] * s.depth + [s.d_out]

    def init(self, key) -> dict:
        s = self.spec
        dims = self._dims()
        keys = _keys(key, [f"layer{l}" for l in range(len(dims) - 1)])
        p = {}
        for l in range(len(dims) - 1):
            gain = s.init.input_gain if l == 0 else s.init.gain
            p[f"layer{l}.w"], p[f"layer{l}.b"] = init_cheby_layer(
                keys[f"layer{l}"], dims[l], dims[l + 1], s.degree, s.init.scheme, gain)
        return p

    def param_shapes(self) -> dict:
        dims = self._dims()
        pairs = []
        for l in range(len(dims) - 1):
            pairs += [(f"layer{l}.w", (dims[l + 1], dims[l], self.spec.degree)), (f"layer{l}.b", (dims[l + 1],))]
        return _layout(pairs)

    def hidden(self, p: dict, x):
        h = bc_embed(x, self.boundary)
        for l in range(self.spec.depth):
            h = cheby_layer(p[f"layer{l}.w"], p[f"layer{l}.b"], h)
        return h

    def apply(self, p: dict, x):
        last = self.spec.depth
        u = cheby_layer(p[f"layer{last}.w"], p[f"layer{last}.b"], self.hidden(p, x))
        return dirichlet_shape(u, x, self.boundary)

    def output_design(self, p: dict, x):
        h = self.hidden(p, x)
        design = cheby_basis(h, self.spec.degree).reshape(h.shape[0], -1)
        design = jnp.concatenate([design, jnp.ones((h.shape[0], 1))], axis=1)
        return self._shape_design(design, x)

    def with_output(self, p: dict, coeffs) -> dict:
        last = self.spec.depth
        coeffs = jnp.asarray(coeffs)
        d_prev = self._dims()[-2]
        return {**p, f"layer{last}.w": coeffs[:-1].reshape(1, d_prev, self.spec.degree),
                f"layer{last}.b": coeffs[-1:]}

    def param_count_formula(self) -> int:
        s = self.spec
        dI, dH, L, D, dO = self.embedded_dim, s.width, s.depth, s.degree, s.d_out
        if L == 0:
            return dO * (dI * D + 1)
        return dH * (dI * D + D * (L - 1) * dH + L + dO * D) + dO


@dataclass(frozen=True)
class PirateNetSpec:
    d_in: int
    width: int = 36
    blocks: int = 4
    d_out: int = 1
    rff_scale: float = 1.0
    rwf_mean: float = 0.5
    rwf_std: float = 0.1
    alpha0: float = 0.0
    boundary: BoundarySpec = field(default_factory=BoundarySpec)

    def __post_init__(self):
        if self.width < 2 or self.width % 2:
            raise ConfigurationError("PirateNet width must be an even number >= 2")
        if self.blocks < 0:
            raise ConfigurationError("blocks must be non-negative")


class PirateNet(_Model):
    """Random Fourier features, tanh gates and three-layer adaptive-skip blocks (all RWF)."""

    def __init__(self, spec: PirateNetSpec):
        self.spec = spec

    def init(self, key) -> dict:
        s = self.spec
        names = ["rff", "gate_u", "gate_v"] + [f"block{l}.{k}" for l in range(s.blocks) for k in (1, 2, 3)] + ["out"]
        keys = _keys(key, names)
        p = {"rff.kernel": s.rff_scale * jax.random.normal(keys["rff"], (self.embedded_dim, s.width // 2),
                                                           dtype=jnp.float64)}
        for name in ["gate_u", "gate_v"] + [f"block{l}.{k}" for l in range(s.blocks) for k in (1, 2, 3)]:
            p[f"{name}.s"], p[f"{name}.v"], p[f"{name}.b"] = init_rwf(keys[name], s.width, s.width,
                                                                      s.rwf_mean, s.rwf_std)
        for l in range(s.blocks):
            p[f"block{l}.alpha"] = jnp.asarray(float(s.alpha0))
        p["out.w"] = jax.random.normal(keys["out"], (s.d_out, s.width), dtype=jnp.float64) * np.sqrt(
            2.0 / (s.width + s.d_out))
        return p

    def param_shapes(self) -> dict:
        s = self.spec
        W = s.width
        pairs = [("rff.kernel", (self.embedded_dim, W // 2))]
        for name in ["gate_u", "gate_v"] + [f"block{l}.{k}" for l in range(s.blocks) for k in (1, 2, 3)]:
            pairs += [(f"{name}.s", (W,)), (f"{name}.v", (W, W)), (f"{name}.b", (W,))]
        pairs += [(f"block{l}.alpha", ()) for l in range(s.blocks)]
        pairs.append(("out.w", (s.d_out, W)))
        return _layout(pairs)

    def hidden(self, p: dict, x):
        xe = bc_embed(x, self.boundary)
        proj = dc.linear(xe, p["rff.kernel"].T)
        phi = dc.concatenate([dc.cos(proj), dc.sin(proj)], axis=-1)
        U = dc.tanh(rwf_dense(p, "gate_u", phi))
        V = dc.tanh(rwf_dense(p, "gate_v", phi))
        h = phi
        for l in range(self.spec.blocks):
            f = dc.tanh(rwf_dense(p, f"block{l}.1", h))
            z1 = f * U + (1.0 - f) * V
            g = dc.tanh(rwf_dense(p, f"block{l}.2", z1))
            z2 = g * U + (1.0 - g) * V
            hh = dc.tanh(rwf_dense(p, f"block{l}.3", z2))
            alpha = p[f"block{l}.alpha"]
            h = alpha * hh + (1.0 - alpha) * h
        return h

    def apply(self, p: dict, x):
        u = dc.linear(self.hidden(p, x), p["out.w"])
        return dirichlet_shape(u, x, self.boundary)

    def output_design(self, p: dict, x):
        return self._shape_design(self.hidden(p, x), x)

    def with_output(self, p: dict, coeffs) -> dict:
        return {**p, "out.w": jnp.asarray(coeffs).reshape(1, self.spec.width)}

    def param_count_formula(self) -> int:
        s = self.spec
        dH, N = s.width, s.blocks
        return int(dH * (0.5 * self.embedded_dim + s.d_out + (dH + 2) * (3 * N + 2)) + N)


def build_model(spec):
    if isinstance(spec, RgaKanSpec):
        return RgaKan(spec)
    if isinstance(spec, CpikanSpec):
        return Cpikan(spec)
    if isinstance(spec, PirateNetSpec):
        return PirateNet(spec)
    raise ConfigurationError(f"unknown model spec {type(spec).__name__}")
