import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhdslip.config import SimConfig
from mhdslip.errors import ConfigError
from mhdslip.geometry import build_grid, make_grid


def test_tangential_spacing():
    assert make_grid(2, 8, 9).spacing == pytest.approx(2 * math.pi / 8, rel=1e-15)


@pytest.mark.parametrize("dim,nt,nn", [(2, 8, 9), (3, 6, 7), (2, 128, 129)])
def test_grid_invariants(dim, nt, nn):
    g = make_grid(dim, nt, nn)
    assert g.phi_weight[0] == 0.0 and g.phi_weight[-1] == 0.0
    assert np.all(g.phi_weight[1:-1] > 0)
    assert g.z_nodes[0] == 0.0 and g.z_nodes[-1] == 1.0
    assert np.all(np.diff(g.z_nodes) > 0)
    assert g.quad_weights.sum() == pytest.approx((2 * math.pi) ** (dim - 1), rel=1e-12)


def test_volume_3d_matches_fine_quadrature():
    coarse = make_grid(3, 6, 7)
    fine = make_grid(3, 24, 25)
    assert coarse.integrate(np.ones(coarse.shape)) == pytest.approx(39.4784176, rel=1e-8)
    assert coarse.integrate(np.ones(coarse.shape)) == pytest.approx(fine.integrate(np.ones(fine.shape)), rel=1e-12)


@pytest.mark.parametrize(
    "field,value",
    [("n_tangential", 7), ("n_tangential", 2), ("n_normal", 4), ("dim", 4)],
)
def test_resolution_errors_name_the_field(field, value):
    kwargs = {"dim": 2, "n_tangential": 8, "n_normal": 9, field: value}
    with pytest.raises(ConfigError) as info:
        make_grid(**kwargs)
    assert info.value.field == field


def test_build_grid_from_config():
    g = build_grid(SimConfig(n_tangential=16, n_normal=9, dim=3))
    assert g.shape == (16, 16, 9)


def _integrand(grid, kx, a, b):
    X, Z = grid.mesh()
    return (1.0 + np.cos(kx * X) ** 2) * (a + b * Z)


@given(st.integers(0, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_quadrature_exact_for_linear_in_z(kx, a, b):
    g, fine = make_grid(2, 8, 9), make_grid(2, 32, 33)
    got = g.integrate(_integrand(g, kx, a, b))
    ref = fine.integrate(_integrand(fine, kx, a, b))
    assert abs(got - ref) <= 1e-10 * max(1.0, abs(ref))


def test_quadrature_second_order_for_higher_degree():
    # trapezoid rule: O(h^2) for z^k, k >= 2
    errs = []
    for n in (9, 17, 33):
        g = make_grid(2, 8, n)
        Z = g.mesh()[1]
        errs.append(abs(g.integrate(Z**4) - 2 * math.pi / 5))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.9)


def test_conormal_derivatives_converge_at_second_order():
    errs = {0: [], 1: []}
    for n in (17, 33, 65):
        g = make_grid(2, 16, n)
        X, Z = g.mesh()
        f = np.sin(2 * X) * np.cos(1.3 * Z)
        errs[0].append(np.max(np.abs(g.conormal_derivative(f, 0) - 2 * np.cos(2 * X) * np.cos(1.3 * Z))))
        exact = Z * (1 - Z) * np.sin(2 * X) * (-1.3) * np.sin(1.3 * Z)
        errs[1].append(np.max(np.abs(g.conormal_derivative(f, 1) - exact)))
    assert max(errs[0]) < 1e-12
    orders = np.log2(np.array(errs[1][:-1]) / errs[1][1:])
    assert np.all(orders > 1.8)


def test_sbp_summation_by_parts():
    g = make_grid(2, 8, 17)
    rng = np.random.default_rng(0)
    f, h = rng.standard_normal((2,) + g.shape)
    lhs = g.integrate(f * g.d_normal(h)) + g.integrate(g.d_normal(f) * h)
    wall = g.integrate_wall(f[..., -1] * h[..., -1] - f[..., 0] * h[..., 0])
    assert lhs == pytest.approx(wall, abs=1e-12)
