"""L2 projection, the global lifting operator and the discrete gradient."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .mesh import Mesh
from .quadrature import edge_rule, triangle_rule
from .space import (
    DGFunction,
    ElementField,
    basis_values,
    broken_gradient,
    edge_points,
    edge_reference_points,
    n_basis,
    traces,
)


@lru_cache(maxsize=None)
def reference_mass(degree: int) -> np.ndarray:
    """Mass matrix of the degree-``degree`` Lagrange basis on the reference triangle."""
    rule = triangle_rule(min(2 * degree, 10))
    phi = basis_values(rule.points, degree)
    return np.einsum("p,pa,pb->ab", rule.weights, phi, phi)


def l2_project(field, mesh: Mesh, degree: int, quad_degree=None) -> ElementField:
    """Elementwise L2 projection onto matrix polynomials of ``degree``.

    ``field`` is either an :class:`ElementField` or a callable mapping
    physical points (m, n_pts, 2) to values (m, n_pts, N, d). An
    ``ElementField`` that already has the target degree is returned as is.
    """
    if isinstance(field, ElementField):
        if field.degree == degree:
            return ElementField(mesh, degree, field.coeffs.copy())
        src = field
        evaluate = lambda pts_ref, pts_phys: src.values_at(pts_ref)  # noqa: E731
        qdeg = quad_degree if quad_degree is not None else min(field.degree + degree, 10)
    else:
        evaluate = lambda pts_ref, pts_phys: np.asarray(field(pts_phys), dtype=float)  # noqa: E731
        qdeg = quad_degree if quad_degree is not None else 10
    rule = triangle_rule(qdeg)
    x0 = mesh.vertices[mesh.triangles[:, 0]]
    phys = x0[:, None, :] + np.einsum("kij,pj->kpi", mesh.jacobians, rule.points)
    vals = evaluate(rule.points, phys)
    phi = basis_values(rule.points, degree)
    rhs = np.einsum("p,pa,kpij->kaij", rule.weights, phi, vals)
    coeffs = np.einsum("ab,kbij->kaij", np.linalg.inv(reference_mass(degree)), rhs)
    return ElementField(mesh, degree, coeffs)


def _edge_rhs(u: DGFunction, u0, include_boundary: bool, edge_degree=None) -> np.ndarray:
    """Right-hand side ``sum_e int_e {psi_a} [[u (x) n]]`` per element, (m, B, N, d)."""
    mesh = u.mesh
    deg = u.q - 1
    rule = edge_rule(edge_degree if edge_degree is not None else 2 * u.q)
    plus, minus = traces(u, rule.points)
    ref_p, ref_m = edge_reference_points(mesh, rule.points)
    weights = rule.weights[None, :] * mesh.edge_lengths[:, None]  # (E, S)
    N = u.n_components
    rhs = np.zeros((mesh.n_triangles, n_basis(deg), N, 2))

    inner = mesh.interior_edges
    jt = np.einsum("esi,ej->esij", plus[inner] - minus[inner], mesh.normals[inner])
    for side in (0, 1):
        ref = (ref_p if side == 0 else ref_m)[inner]
        psi = basis_values(ref, deg)
        contrib = 0.5 * np.einsum("es,esa,esij->eaij", weights[inner], psi, jt)
        np.add.at(rhs, mesh.edge_elements[inner, side], contrib)

    if include_boundary:
        if u0 is None:
            raise ValueError("boundary lifting requires a boundary datum u0")
        bnd = mesh.boundary_edges
        pts = edge_points(mesh, rule.points)[bnd]
        jump = plus[bnd] - np.asarray(u0(pts), dtype=float).reshape(plus[bnd].shape)
        jt = np.einsum("esi,ej->esij", jump, mesh.normals[bnd])
        psi = basis_values(ref_p[bnd], deg)
        contrib = np.einsum("es,esa,esij->eaij", weights[bnd], psi, jt)
        np.add.at(rhs, mesh.edge_elements[bnd, 0], contrib)
    return rhs


def lift(u: DGFunction, u0=None, *, include_boundary: bool = False, edge_degree=None) -> ElementField:
    """Global lifting ``R_h(u)`` of the interior jumps into degree q-1 fields.

    Solves the local mass systems element by element. With
    ``include_boundary=True`` the boundary jumps ``(u - u0) (x) n`` are
    lifted as well.
    """
    mesh = u.mesh
    deg = u.q - 1
    rhs = _edge_rhs(u, u0, include_boundary, edge_degree)
    mass = reference_mass(deg)
    scale = 2.0 * mesh.areas
    if np.any(scale <= 0.0):
        raise RuntimeError("singular local mass matrix")
    coeffs = np.einsum("ab,kbij->kaij", np.linalg.inv(mass), rhs) / scale[:, None, None, None]
    return ElementField(mesh, deg, coeffs)


def discrete_gradient(u: DGFunction, u0=None, *, include_boundary: bool = False) -> ElementField:
    """``G_h(u) = grad_h u - R_h(u)``."""
    return broken_gradient(u) - lift(u, u0, include_boundary=include_boundary)

