import numpy as np
import pytest

from dgvar.mesh import (
    BOUNDARY, INTERIOR, Mesh, build_structured_rect, grid_for_triangle_count, refine_uniform,
    unit_square_with_triangles,
)


def test_two_triangle_square(square2):
    m = square2
    assert (m.n_vertices, m.n_triangles, m.n_edges) == (4, 2, 5)
    assert len(m.interior_edges) == 1 and len(m.boundary_edges) == 4
    np.testing.assert_allclose(m.areas, [0.5, 0.5])
    # the diagonal is the only interior edge, normal points out of the lower-right triangle
    e = m.interior_edges[0]
    assert tuple(m.edges[e]) == (0, 3)
    np.testing.assert_allclose(m.edge_lengths[e], np.sqrt(2.0))
    np.testing.assert_allclose(m.normals[e], np.array([-1.0, 1.0]) / np.sqrt(2.0))
    assert tuple(m.edge_elements[e]) == (0, 1)


@pytest.mark.parametrize("nx,ny", [(1, 1), (2, 2), (3, 5), (8, 4)])
def test_structured_counts_and_euler(nx, ny):
    m = build_structured_rect(nx, ny)
    assert m.n_triangles == 2 * nx * ny
    assert m.n_vertices == (nx + 1) * (ny + 1)
    # Euler characteristic of a disk: V - E + F = 1
    assert m.n_vertices - m.n_edges + m.n_triangles == 1
    assert len(m.boundary_edges) == 2 * (nx + ny)
    np.testing.assert_allclose(m.areas.sum(), 1.0)
    np.testing.assert_allclose(m.boundary_polygon_length(), 4.0)


def test_orientation_and_normals(square8):
    m = square8
    assert np.all(m.areas > 0)
    # normals point from the plus element towards the minus element (or outside)
    mid = 0.5 * (m.vertices[m.edges[:, 0]] + m.vertices[m.edges[:, 1]])
    to_mid = mid - m.centroids[m.edge_elements[:, 0]]
    assert np.all(np.einsum("ij,ij->i", to_mid, m.normals) > 0)
    np.testing.assert_allclose(np.linalg.norm(m.normals, axis=1), 1.0)
    inner = m.interior_edges
    assert np.all(m.edge_elements[inner, 0] < m.edge_elements[inner, 1])
    assert np.all(m.edge_kinds[inner] == INTERIOR)
    assert np.all(m.edge_kinds[m.boundary_edges] == BOUNDARY)


def test_closed_element_boundaries(square8):
    # sum over each element of |e| n_e^K vanishes (divergence of a constant)
    m = square8
    acc = np.zeros((m.n_triangles, 2))
    for e in range(m.n_edges):
        kp, km = m.edge_elements[e]
        acc[kp] += m.edge_lengths[e] * m.normals[e]
        if km >= 0:
            acc[km] -= m.edge_lengths[e] * m.normals[e]
    np.testing.assert_allclose(acc, 0.0, atol=1e-14)


def test_refine_uniform():
    m = build_structured_rect(2, 2)
    r = refine_uniform(m)
    assert r.n_triangles == 4 * m.n_triangles
    np.testing.assert_allclose(r.areas.sum(), 1.0)
    np.testing.assert_allclose(r.h, m.h / 2)


@pytest.mark.parametrize("n,expect", [(2, (1, 1)), (8, (2, 2)), (1024, (32, 16)), (2048, (32, 32)), (4096, (64, 32))])
def test_triangle_counts(n, expect):
    assert grid_for_triangle_count(n) == expect
    assert unit_square_with_triangles(n).n_triangles == n


@pytest.mark.parametrize("n", [0, 3, 6, 2034])
def test_unsupported_counts(n):
    with pytest.raises(ValueError):
        grid_for_triangle_count(n)


def test_degenerate_triangle_rejected():
    v = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        Mesh(v, np.array([[0, 1, 2]]))
