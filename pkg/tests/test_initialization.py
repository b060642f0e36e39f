import warnings

import jax
import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgakan import bases
from rgakan.bases import BasisMoments
from rgakan.errors import ConfigurationError, DegenerateMomentError
from rgakan.initialization import (InitConfig, default_cheby_sigma, glorot_like_sigmas, init_coefficients,
                                   physics_informed_output_init, solve_least_squares)
from rgakan.models import RgaKan, RgaKanSpec
from rgakan.models.layers import cheby_layer, cheby_sigmas
from rgakan.problems import get_problem

from test_bases import MC_MU0, MC_MU1


def test_reduces_to_glorot_for_unit_moments():
    m = BasisMoments(np.ones(1), np.ones(1))
    for n in (1, 7, 64):
        assert glorot_like_sigmas(m, n, n, 1)[0] == pytest.approx(np.sqrt(1 / n), rel=1e-15)


def test_gain_is_linear():
    m = bases.basis_moments("chebyshev", 5)
    np.testing.assert_allclose(glorot_like_sigmas(m, 8, 3, 5, 2.0), 2 * glorot_like_sigmas(m, 8, 3, 5, 1.0))


def test_cheby_sigmas_match_moment_oracle():
    expect = np.sqrt(2 / (5 * (16 * MC_MU0 + 16 * MC_MU1)))
    got = glorot_like_sigmas(bases.basis_moments("chebyshev", 5), 16, 16, 5)
    np.testing.assert_allclose(got, expect, rtol=1e-3)


def test_degenerate_moments():
    with pytest.raises(DegenerateMomentError):
        glorot_like_sigmas(BasisMoments(np.array([1.0, 0.0]), np.array([1.0, 0.0])), 2, 2, 2)


def test_bad_fans_and_lengths():
    m = BasisMoments(np.ones(2), np.ones(2))
    with pytest.raises(ConfigurationError):
        glorot_like_sigmas(m, 0, 2, 2)
    with pytest.raises(ConfigurationError):
        glorot_like_sigmas(m, 2, 2, 3)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 64), st.integers(1, 10))
def test_balanced_fans_sum_to_two(n, D):
    m = bases.basis_moments("chebyshev", D)
    s = glorot_like_sigmas(m, n, n, D)
    total = n * np.sum(s**2 * m.mu0) + n * np.sum(s**2 * m.mu1)
    assert total == pytest.approx(2.0, rel=1e-12)


def test_default_sigma_values():
    assert default_cheby_sigma(1, 8) == pytest.approx(1 / 3, rel=1e-15)
    assert default_cheby_sigma(4, 3) == 0.25


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 100), st.integers(1, 20))
def test_default_sigma_decreasing(d, D):
    s = default_cheby_sigma(d, D)
    assert default_cheby_sigma(d + 1, D) < s and default_cheby_sigma(d, D + 1) < s


def test_init_config_validation():
    with pytest.raises(ConfigurationError):
        InitConfig(gain=0.0)
    with pytest.raises(ConfigurationError):
        InitConfig(scheme="lecun")


def test_zero_sigmas_give_zero_block():
    assert not np.any(init_coefficients(jax.random.PRNGKey(0), (3, 4, 5), np.zeros(5)))


def test_coefficients_deterministic():
    key = jax.random.PRNGKey(42)
    a = init_coefficients(key, (4, 4, 3), [0.1, 0.2, 0.3])
    b = init_coefficients(key, (4, 4, 3), [0.1, 0.2, 0.3])
    assert np.array_equal(a, b)


def test_per_term_sample_std():
    sig = np.array([0.5, 0.2, 0.1, 0.05, 0.01])
    w = np.asarray(init_coefficients(jax.random.PRNGKey(1), (64, 64, 5), sig))
    np.testing.assert_allclose(w.reshape(-1, 5).std(axis=0), sig, rtol=0.05)


def _layer_variances(d_in, d_out, D):
    sig = cheby_sigmas(d_in, d_out, D, "glorot_like", 1.0)
    m = bases.basis_moments("chebyshev", D)
    x = jax.random.normal(jax.random.PRNGKey(11), (100_000, d_in), dtype=jnp.float64)
    # Average over independent weight draws to estimate the ensemble variance.
    fwd, bwd = [], []
    for seed in range(8):
        w = init_coefficients(jax.random.PRNGKey(100 + seed), (d_out, d_in, D), sig)
        y, vjp = jax.vjp(lambda z: cheby_layer(w, jnp.zeros(d_out), z), x)
        ct = jax.random.normal(jax.random.PRNGKey(200 + seed), y.shape, dtype=jnp.float64)
        fwd.append(np.var(np.asarray(y)))
        bwd.append(np.var(np.asarray(vjp(ct)[0])))
    return np.mean(fwd), np.mean(bwd), d_in * np.sum(sig**2 * m.mu0), d_out * np.sum(sig**2 * m.mu1)


def test_forward_and_backward_variance_predictions():
    fwd, bwd, fwd_pred, bwd_pred = _layer_variances(32, 32, 5)
    assert fwd == pytest.approx(fwd_pred, rel=0.05)
    assert bwd == pytest.approx(bwd_pred, rel=0.05)


def test_least_squares_identity():
    r = solve_least_squares(np.eye(3), [1.0, 2.0, 3.0])
    np.testing.assert_allclose(r.coeffs, [1, 2, 3], atol=1e-15)


@pytest.mark.parametrize("ridge", [0.0, 1e-3])
def test_least_squares_zero_targets(ridge, rng):
    np.testing.assert_array_equal(solve_least_squares(rng.normal(size=(10, 4)), np.zeros(10), ridge).coeffs, 0)


def test_least_squares_matches_normal_equations(rng):
    B, y = rng.normal(size=(50, 20)), rng.normal(size=50)
    ref = np.linalg.solve(B.T @ B, B.T @ y)
    r = solve_least_squares(B, y)
    res_ref = np.linalg.norm(y - B @ ref)
    assert abs(r.residual_norm - res_ref) / res_ref < 1e-9
    np.testing.assert_allclose(r.coeffs, ref, rtol=1e-9)


def test_ridge_matches_regularized_normal_equations(rng):
    B, y = rng.normal(size=(30, 10)), rng.normal(size=30)
    ref = np.linalg.solve(B.T @ B + 0.5 * np.eye(10), B.T @ y)
    np.testing.assert_allclose(solve_least_squares(B, y, 0.5).coeffs, ref, rtol=1e-10)


def test_rank_deficient_falls_back_to_min_norm():
    B = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    with pytest.warns(UserWarning):
        r = solve_least_squares(B, [2.0, 4.0, 6.0])
    assert r.rank_deficient
    np.testing.assert_allclose(r.coeffs, [1.0, 1.0])


def _rga(**kw):
    spec = dict(d_in=2, width=16, blocks=2, degree=5, sine_terms=5)
    spec.update(kw)
    model = RgaKan(RgaKanSpec(**spec))
    return model, model.init(jax.random.PRNGKey(0))


def _ic_points(n=64):
    x = np.linspace(-1, 1, n)
    return np.stack([np.zeros(n), x], axis=1)


def test_physics_init_zero_targets():
    model, p = _rga()
    pts = _ic_points()
    p2, res = physics_informed_output_init(model, p, pts, np.zeros(64))
    assert not np.any(p2["out.w"])
    assert not np.any(model.apply(p2, jnp.asarray(pts)))


def test_physics_init_misfit_is_ls_residual():
    model, p = _rga()
    pts = _ic_points()
    y = pts[:, 1] ** 2 * np.cos(np.pi * pts[:, 1])
    assert np.asarray(model.output_design(p, jnp.asarray(pts))).shape == (64, 80)
    p2, res = physics_informed_output_init(model, p, pts, y)
    misfit = np.linalg.norm(np.asarray(model.apply(p2, jnp.asarray(pts)))[:, 0] - y)
    assert misfit == pytest.approx(res.residual_norm, rel=1e-9, abs=1e-12)
    assert misfit / np.linalg.norm(y) <= 1.0


@pytest.mark.filterwarnings("ignore:rank-deficient")
def test_physics_init_optimality(rng):
    model, p = _rga()
    pts = _ic_points()
    y = pts[:, 1] ** 2 * np.cos(np.pi * pts[:, 1])
    p2, _ = physics_informed_output_init(model, p, pts, y, ridge=0.0)
    base = np.linalg.norm(np.asarray(model.apply(p2, jnp.asarray(pts)))[:, 0] - y)
    for _ in range(10):
        d = rng.normal(size=p2["out.w"].shape)
        d *= 1e-3 / np.linalg.norm(d)
        moved = {**p2, "out.w": p2["out.w"] + d}
        assert np.linalg.norm(np.asarray(model.apply(moved, jnp.asarray(pts)))[:, 0] - y) >= base - 1e-12


def test_physics_init_needs_points():
    model, p = _rga()
    with pytest.raises(ConfigurationError):
        physics_informed_output_init(model, p, _ic_points(4), np.zeros(4))


def test_physics_init_through_problem_ic():
    problem = get_problem("allen_cahn")
    model, p = _rga(boundary=problem.boundary_spec())
    pts = _ic_points()
    y = np.asarray(problem.initial_condition(jnp.asarray(pts[:, 1])))
    p2, res = physics_informed_output_init(model, p, pts, y)
    assert res.residual_norm / np.linalg.norm(y) < 1.0
