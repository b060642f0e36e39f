"""Function-fitting targets on the hypercube ``[-1, 1]^d``."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError

FUNCTION_DIMS = {"f1": 1, "f2": 2, "f3": 2, "f4": 3, "f5": 5}

HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN_A = np.array([[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]])
HARTMANN_P = 1e-4 * np.array([[3689.0, 1170.0, 2673.0], [4699.0, 4387.0, 7470.0],
                              [1091.0, 8732.0, 5547.0], [381.0, 5743.0, 8828.0]])


def bessel_i1(x, tol: float = 1e-15):
    """Modified Bessel function of the first kind, order one, from its power series."""
    x = np.asarray(x, dtype=float)
    half = 0.5 * x
    term = half.copy()
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * half * half / (k * (k + 1))
        total = total + term
        if np.all(np.abs(term) <= tol * np.maximum(np.abs(total), 1e-300)):
            return total


def bessel_i1e(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-np.abs(x)) * bessel_i1(x)


def target_function(fid: str, x) -> np.ndarray:
    """Evaluate ``fid`` on points of shape ``(N, d)`` (or a single point of shape ``(d,)``)."""
    if fid not in FUNCTION_DIMS:
        raise ConfigurationError(f"unknown target function {fid!r}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != FUNCTION_DIMS[fid]:
        raise ConfigurationError(f"{fid} takes {FUNCTION_DIMS[fid]} inputs, got {x.shape[1]}")
    if fid == "f1":
        y = np.sin(2 * np.pi * x[:, 0]) + 3 * x[:, 0]
    elif fid == "f2":
        y = x[:, 0] * x[:, 1]
    elif fid == "f3":
        y = bessel_i1(x[:, 0]) + np.exp(bessel_i1e(x[:, 1])) + np.sin(x[:, 0] * x[:, 1])
    elif fid == "f4":
        inner = np.einsum("kj,nkj->nk", HARTMANN_A, (x[:, None, :] - HARTMANN_P[None]) ** 2)
        y = -np.exp(-inner) @ HARTMANN_ALPHA
    else:
        a = (np.arange(1, 6) - 2) / 2.0
        y = np.prod((np.abs(4 * x - 2) + a) / (1 + a), axis=1)
    return y[0] if single else y


def evaluation_grid(fid: str) -> np.ndarray:
    """Uniform evaluation grids: 1000 points in 1D, 200^2 in 2D, 30^3 in 3D and 10^5 in 5D."""
    d = FUNCTION_DIMS[fid]
    n = {1: 1000, 2: 200, 3: 30, 5: 10}[d]
    axes = [np.linspace(-1, 1, n)] * d
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
