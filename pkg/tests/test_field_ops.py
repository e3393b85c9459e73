import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_bvp

from mhdslip.boundary import WallClosure
from mhdslip.errors import UsageError
from mhdslip.field_ops import (
    ScalarField,
    VectorField,
    differentiate,
    divergence_array,
    divergence_residual,
    inner_product,
    l2_norm,
    leray_project,
)
from mhdslip.geometry import make_grid

from conftest import smooth_vector


def test_curl_grad_vanishes_2d_and_3d():
    for g in (make_grid(2, 16, 17), make_grid(3, 8, 9)):
        mesh = g.mesh()
        f = np.sin(mesh[0]) * np.exp(mesh[-1]) + np.cos(2 * mesh[0]) * mesh[-1] ** 3
        grad = differentiate(ScalarField(g, f), "grad")
        curl = differentiate(grad, "curl")
        assert l2_norm(curl) <= 1e-10 * l2_norm(grad)


def test_div_curl_vanishes_3d(grid3):
    rng = np.random.default_rng(1)
    u = VectorField(grid3, smooth_vector(grid3, rng))
    c = differentiate(u, "curl")
    d = differentiate(c, "div")
    assert np.max(np.abs(d.data)) <= 1e-10 * np.max(np.abs(c.data))


def test_div_of_sin_x():
    g = make_grid(3, 8, 9)
    X = g.mesh()[0]
    u = np.zeros((3,) + g.shape)
    u[0] = np.sin(X)
    d = differentiate(VectorField(g, u), "div")
    np.testing.assert_allclose(d.data, np.cos(X), atol=1e-13)


def test_strain_of_translation_is_zero(grid3):
    u = np.zeros((3,) + grid3.shape)
    u[0] = 2.5
    s = differentiate(VectorField(grid3, u), "strain")
    assert np.all(s.data == 0.0)


def test_rank_errors(grid2):
    f = ScalarField(grid2, np.zeros(grid2.shape))
    with pytest.raises(UsageError):
        differentiate(f, "curl")
    with pytest.raises(UsageError):
        differentiate(f, "div")
    with pytest.raises(UsageError):
        differentiate(f, "nope")


def test_inner_product_examples():
    g = make_grid(3, 8, 9)
    X = g.mesh()[0]
    one = ScalarField(g, np.ones(g.shape))
    assert inner_product(one, one) == pytest.approx(39.4784176, rel=1e-8)
    s, c = ScalarField(g, np.sin(X)), ScalarField(g, np.cos(X))
    assert abs(inner_product(s, c)) < 1e-12
    assert inner_product(s, s) == pytest.approx(2 * math.pi**2, rel=1e-12)


def test_inner_product_grid_mismatch():
    a = ScalarField(make_grid(2, 8, 9), np.zeros((8, 9)))
    b = ScalarField(make_grid(2, 8, 17), np.zeros((8, 17)))
    with pytest.raises(UsageError):
        inner_product(a, b)


def test_laplacian_with_closure_is_second_order():
    errs = []
    for n in (17, 33, 65):
        g = make_grid(2, 8, n)
        X, Z = g.mesh()
        u = np.zeros((2,) + g.shape)
        u[0] = np.cos(X) * np.cos(math.pi * Z)
        lap = differentiate(VectorField(g, u), "laplacian", closure=WallClosure(0.0))
        errs.append(np.max(np.abs(lap.data[0] + (1 + math.pi**2) * u[0])))
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) > 1.8)


def test_gradient_projects_to_zero(grid2):
    Z = grid2.mesh()[1]
    u = np.zeros((2,) + grid2.shape)
    u[1] = np.sin(math.pi * Z)
    assert np.max(np.abs(leray_project(VectorField(grid2, u)).data)) < 1e-12


def test_range_is_fixed(grid2):
    Z = grid2.mesh()[1]
    u = np.zeros((2,) + grid2.shape)
    u[0] = np.cos(math.pi * Z)
    np.testing.assert_allclose(leray_project(VectorField(grid2, u)).data, u, atol=1e-12)


def test_projection_against_1d_oracle():
    # u = (0, z(1-z)); P u = u - grad phi with phi'' = 1 - 2z, phi'(0) = phi'(1) = 0
    g = make_grid(2, 8, 33)
    Z = g.mesh()[1]
    u = np.zeros((2,) + g.shape)
    u[1] = Z * (1 - Z)
    z = np.linspace(0, 1, 10 * 33)
    sol = solve_bvp(
        lambda z, y: np.vstack([y[1], 1 - 2 * z]),
        lambda a, b: np.array([a[1], b[0]]),
        z,
        np.zeros((2, z.size)),
        tol=1e-10,
    )
    dphi = sol.sol(g.z_nodes)[1]
    expect = u.copy()
    expect[1] -= dphi
    np.testing.assert_allclose(leray_project(VectorField(g, u)).data, expect, atol=1e-9)


@given(st.integers(0, 10_000))
def test_projector_properties(seed):
    g = make_grid(2, 16, 17)
    rng = np.random.default_rng(seed)
    u = VectorField(g, smooth_vector(g, rng))
    w = VectorField(g, smooth_vector(g, rng))
    pu, pw = leray_project(u), leray_project(w)
    nu, nw = l2_norm(u), l2_norm(w)
    assert l2_norm(leray_project(pu) - pu) <= 1e-12 * nu
    assert abs(inner_product(pu, w) - inner_product(u, pw)) <= 1e-10 * nu * nw
    assert abs(inner_product(pu, u - pu)) <= 1e-10 * nu**2
    assert divergence_residual(pu) <= 1e-10
    assert np.all(pu.data[-1][..., 0] == 0) and np.all(pu.data[-1][..., -1] == 0)


def test_projector_3d(grid3):
    rng = np.random.default_rng(3)
    u = VectorField(grid3, smooth_vector(grid3, rng))
    pu = leray_project(u)
    assert l2_norm(leray_project(pu) - pu) <= 1e-12 * l2_norm(u)
    assert divergence_residual(pu) <= 1e-10


def test_divergence_wall_identity():
    # at the walls div v = d_n v . n + tangential part, for v . n = 0
    g = make_grid(2, 16, 33)
    X, Z = g.mesh()
    q = Z**2 * (1 - Z) ** 2
    v = np.zeros((2,) + g.shape)
    v[0] = np.sin(X) * (1 + Z)
    v[1] = np.cos(X) * q
    d = divergence_array(g, v)
    for idx, sign in ((0, -1.0), (-1, 1.0)):
        dn_dot_n = sign * g.d_normal(v[1])[..., idx] * sign
        tang = g.d_tangential(v[0], 0)[..., idx]
        np.testing.assert_allclose(d[..., idx], dn_dot_n + tang, atol=1e-12)
