import numpy as np
import pytest

from dgvar.lifting import discrete_gradient, l2_project, lift
from dgvar.mesh import build_structured_rect
from dgvar.quadrature import edge_rule
from dgvar.space import DGFunction, affine_map, edge_points, interpolate, trace_pair

from conftest import random_field, step_field
from oracles import dense_lift_oracle, lift_identity_gap




def test_step_field_lift_oracle(square2):
    s = step_field(square2)
    expect = np.array([[[-1.0, 1.0]], [[-1.0, 1.0]]])
    np.testing.assert_allclose(dense_lift_oracle(s), expect, atol=1e-13)
    np.testing.assert_allclose(lift(s).constant_values, expect, atol=1e-13)
    np.testing.assert_allclose(discrete_gradient(s).constant_values, -expect, atol=1e-13)


def test_lift_matches_dense_oracle_random(square8, rng):
    u = random_field(square8, rng)
    np.testing.assert_allclose(lift(u).constant_values, dense_lift_oracle(u), atol=1e-12)


def test_continuous_fields_have_zero_lift(square8):
    F = np.array([[1.0, 0.2], [0.0, 1.1]])
    u = interpolate(affine_map(F), square8, 1, 2)
    np.testing.assert_allclose(lift(u).constant_values, 0.0, atol=1e-14)
    np.testing.assert_allclose(discrete_gradient(u).constant_values, np.broadcast_to(F, (8, 2, 2)), atol=1e-13)


def test_linearity(square8, rng):
    u, v = random_field(square8, rng), random_field(square8, rng)
    lam = 2.7
    np.testing.assert_allclose(lift(lam * u).coeffs, lam * lift(u).coeffs, atol=1e-12)
    np.testing.assert_allclose(discrete_gradient(u + v).coeffs,
                               discrete_gradient(u).coeffs + discrete_gradient(v).coeffs, atol=1e-12)


def test_quadratic_fields_identity(rng):
    # for q = 2 the lift is piecewise linear; test against P1 fields via a fine edge rule
    mesh = build_structured_rect(2, 1)
    u = DGFunction(mesh, 2, rng.standard_normal((mesh.n_triangles, 6, 1)))
    R = lift(u)
    rule = edge_rule(8)
    # test field: w = x-coordinate on element k, component (0, 1)
    for k in range(mesh.n_triangles):
        w = lambda x: x[..., 0]
        lhs_field = l2_project(lambda x: w(x)[..., None, None] * np.array([[0.0, 1.0]]), mesh, 1)
        lhs = np.sum(_integrate_product(R, lhs_field)[k])
        rhs = 0.0
        pts = edge_points(mesh, rule.points)
        for e in mesh.interior_edges:
            if k not in mesh.edge_elements[e]:
                continue
            for s, wt, x in zip(rule.points, rule.weights, pts[e]):
                up, um = trace_pair(u, e, s)
                rhs += 0.5 * wt * mesh.edge_lengths[e] * w(x) * (up[0] - um[0]) * mesh.normals[e, 1]
        assert lhs == pytest.approx(rhs, abs=1e-12)


def _integrate_product(a, b):
    from dgvar.quadrature import triangle_rule

    rule = triangle_rule(4)
    va, vb = a.values_at(rule.points), b.values_at(rule.points)
    return 2.0 * a.mesh.areas[:, None] * np.einsum("kpij,kpij,p->kp", va, vb, rule.weights)


def test_boundary_mode_is_opt_in(square2):
    s = step_field(square2)
    one = lambda x: np.ones(np.shape(x)[:-1] + (1,))
    base = lift(s).constant_values
    np.testing.assert_allclose(lift(s, one).constant_values, base)
    ext = lift(s, one, include_boundary=True).constant_values
    assert not np.allclose(ext, base)


def test_identity_against_all_constant_fields(rng):
    mesh = build_structured_rect(4, 3)
    u = random_field(mesh, rng)
    assert lift_identity_gap(u, lift(u).constant_values) <= 1e-12
