"""Fourier pseudo-spectral reference solver for the periodic-friendly 1D benchmarks.

Space is discretized with ``modes`` equispaced points on one period; time is
advanced with classical RK4 applied to ``v = exp(-L t) u_hat`` where ``L`` is
the diagonal linear operator (diffusion or dispersion), so the stiff part is
integrated exactly.
"""

from __future__ import annotations

import numpy as np

from ..errors import InstabilityError, UnsupportedError
from .pde import PdeProblem
from .reference import ReferenceField

DEFAULT_MODES = {"allen_cahn": 512, "burgers": 2048, "kdv": 512}
DEFAULT_DT = {"allen_cahn": 1e-4, "burgers": 1e-4, "kdv": 1e-4}


def _operators(problem: PdeProblem, k):
    p = problem.params
    if problem.id == "allen_cahn":
        lin = -p["diffusion"] * k**2
        r = p["reaction"]

        def nonlin(u_hat):
            u = np.fft.irfft(u_hat, n=n_points)
            return np.fft.rfft(r * (u - u**3))
    elif problem.id in ("burgers", "kdv"):
        lin = -p["nu"] * k**2 if problem.id == "burgers" else 1j * p["dispersion"] ** 2 * k**3
        cutoff = np.abs(k) <= (2.0 / 3.0) * np.abs(k).max()

        def nonlin(u_hat):
            u = np.fft.irfft(u_hat * cutoff, n=n_points)
            return -0.5j * k * np.fft.rfft(u * u) * cutoff
    else:
        raise UnsupportedError(f"no spectral reference for {problem.id}; use its closed form")
    n_points = 2 * (len(k) - 1)
    return lin, nonlin


def spectral_reference(problem: PdeProblem, modes: int | None = None, dt: float | None = None,
                       n_times: int = 101, blowup: float = 1e6) -> ReferenceField:
    """Solve ``problem`` on ``t in [0, T]`` and sample it on ``n_times`` uniform times.

    The spatial output axis covers the closed interval, the right endpoint
    being the periodic copy of the left one.  Burgers' Dirichlet walls are
    honored because its odd, 2-periodic initial condition keeps ``u = 0`` at
    ``x = +-1`` for all time.
    """
    if problem.id not in DEFAULT_MODES:
        raise UnsupportedError(f"no spectral reference for {problem.id}; use its closed form")
    modes = int(modes or DEFAULT_MODES[problem.id])
    dt = float(dt or DEFAULT_DT[problem.id])
    (t0, t1), (a, b) = problem.domain
    period = b - a
    x = a + period * np.arange(modes) / modes
    k = 2.0 * np.pi / period * np.arange(modes // 2 + 1)
    lin, nonlin = _operators(problem, k)

    out_times = np.linspace(t0, t1, n_times)
    steps_per_out = max(1, int(round((out_times[1] - out_times[0]) / dt)))
    h = (out_times[1] - out_times[0]) / steps_per_out
    e_half = np.exp(lin * h / 2)
    e_full = e_half * e_half

    u_hat = np.fft.rfft(np.asarray(problem.initial_condition(x), dtype=float))
    frames = [np.fft.irfft(u_hat, n=modes)]
    for _ in range(n_times - 1):
        # Overflow is expected when the scheme goes unstable; it is reported below.
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(steps_per_out):
                k1 = nonlin(u_hat)
                k2 = nonlin(e_half * (u_hat + 0.5 * h * k1))
                k3 = nonlin(e_half * u_hat + 0.5 * h * k2)
                k4 = nonlin(e_full * u_hat + h * e_half * k3)
                u_hat = e_full * u_hat + (h / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
            u = np.fft.irfft(u_hat, n=modes)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > blowup:
            raise InstabilityError(f"{problem.id} spectral solution blew up; reduce dt or add modes")
        frames.append(u)
    field = np.array(frames)
    field = np.concatenate([field, field[:, :1]], axis=1)
    x_out = np.append(x, b)
    return ReferenceField(coords=problem.coords, axes=(out_times, x_out), values=field,
                          provenance="spectral_oracle")
