"""Structured triangulations of rectangles with full edge topology."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

INTERIOR = 0
BOUNDARY = 1


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangle mesh.

    Triangles are stored counterclockwise. Edges are stored with their
    vertex indices sorted ascending, which also fixes the edge parameter
    ``s`` in [0, 1] running from the lower to the higher vertex index.

    For every edge, ``edge_elements[e, 0]`` is the incident element with the
    smaller index (the "plus" side) and ``edge_elements[e, 1]`` is the other
    one, or -1 on the boundary. ``normals[e]`` is the unit normal pointing
    out of the plus element.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=float)
        triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError("vertices must have shape (n, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise ValueError("triangles must have shape (m, 3)")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError("triangle vertex index out of range")
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        if np.any(self.areas <= 0.0):
            raise ValueError("triangles must be non-degenerate and counterclockwise")
        self._build_edges()

    def _build_edges(self):
        tri = self.triangles
        # local edge k is opposite local vertex k
        local = np.array([[1, 2], [2, 0], [0, 1]])
        pairs = np.sort(tri[:, local].reshape(-1, 2), axis=1)
        edges, inverse, counts = np.unique(
            pairs, axis=0, return_inverse=True, return_counts=True
        )
        inverse = inverse.ravel()
        if np.any(counts > 2):
            raise ValueError("non-manifold mesh: edge shared by more than two triangles")
        element_edges = inverse.reshape(-1, 3)

        n_edges = len(edges)
        owner = np.repeat(np.arange(len(tri)), 3)
        edge_elements = np.full((n_edges, 2), -1, dtype=np.int64)
        order = np.lexsort((owner, inverse))
        sorted_edges = inverse[order]
        sorted_owner = owner[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = sorted_edges[1:] != sorted_edges[:-1]
        edge_elements[sorted_edges[first], 0] = sorted_owner[first]
        edge_elements[sorted_edges[~first], 1] = sorted_owner[~first]

        kinds = np.where(edge_elements[:, 1] < 0, BOUNDARY, INTERIOR)

        p0 = self.vertices[edges[:, 0]]
        p1 = self.vertices[edges[:, 1]]
        tangent = p1 - p0
        lengths = np.hypot(tangent[:, 0], tangent[:, 1])
        normals = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1) / lengths[:, None]
        # flip so that the normal leaves the plus element
        centroid = self.vertices[tri[edge_elements[:, 0]]].mean(axis=1)
        flip = np.einsum("ij,ij->i", normals, centroid - p0) > 0.0
        normals[flip] *= -1.0

        for name, value in (
            ("edges", edges),
            ("edge_elements", edge_elements),
            ("edge_kinds", kinds),
            ("edge_lengths", lengths),
            ("normals", normals),
            ("element_edges", element_edges),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_kinds == INTERIOR)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_kinds == BOUNDARY)

    @cached_property
    def jacobians(self) -> np.ndarray:
        """Affine map Jacobians, shape (m, 2, 2), columns x1-x0 and x2-x0."""
        x = self.vertices[self.triangles]
        return np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]], axis=2)

    @cached_property
    def areas(self) -> np.ndarray:
        x = self.vertices[self.triangles]
        a = x[:, 1] - x[:, 0]
        b = x[:, 2] - x[:, 0]
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])

    @cached_property
    def inverse_jacobians(self) -> np.ndarray:
        return np.linalg.inv(self.jacobians)

    @cached_property
    def diameters(self) -> np.ndarray:
        x = self.vertices[self.triangles]
        d = np.stack(
            [
                np.linalg.norm(x[:, 1] - x[:, 0], axis=1),
                np.linalg.norm(x[:, 2] - x[:, 1], axis=1),
                np.linalg.norm(x[:, 0] - x[:, 2], axis=1),
            ],
            axis=1,
        )
        return d.max(axis=1)

    @property
    def h(self) -> float:
        """Mesh size, the largest element diameter."""
        return float(self.diameters.max())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def outward_normal(self, element: int, edge: int) -> np.ndarray:
        """Unit normal of ``edge`` pointing out of ``element``."""
        k = int(element)
        if k == self.edge_elements[edge, 0]:
            return self.normals[edge].copy()
        if k == self.edge_elements[edge, 1]:
            return -self.normals[edge]
        raise ValueError(f"element {element} is not incident to edge {edge}")

    def boundary_polygon_length(self) -> float:
        return float(self.edge_lengths[self.boundary_edges].sum())


def build_structured_rect(nx: int, ny: int, rect=((0.0, 1.0), (0.0, 1.0))) -> Mesh:
    """Split an ``nx`` by ``ny`` grid of cells into ``2 nx ny`` triangles.

    Each cell is cut along its lower-left to upper-right diagonal. Cells
    are numbered row by row from the bottom; within a cell the lower-right
    triangle precedes the upper-left one.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive integers")
    (x0, x1), (y0, y1) = rect
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate rectangle")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return Mesh(vertices, triangles)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: every triangle is split into four similar children."""
    nv = mesh.n_vertices
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])
    a, b, c = mesh.triangles.T
    # element_edges[:, k] is opposite vertex k
    m_bc, m_ca, m_ab = (nv + mesh.element_edges).T
    children = np.stack(
        [
            np.column_stack([a, m_ab, m_ca]),
            np.column_stack([m_ab, b, m_bc]),
            np.column_stack([m_ca, m_bc, c]),
            np.column_stack([m_ab, m_bc, m_ca]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return Mesh(vertices, children)


def grid_for_triangle_count(n_triangles: int) -> tuple[int, int]:
    """Cell counts ``(nx, ny)`` of a structured unit-square mesh with the given size.

    Uses a square grid when ``n_triangles / 2`` is a perfect square and a
    2:1 grid (``nx = 2 ny``) otherwise, so 1024, 2048 and 4096 all work.
    """
    if n_triangles < 2 or n_triangles % 2:
        raise ValueError(f"cannot build a structured mesh with {n_triangles} triangles")
    cells = n_triangles // 2
    n = int(round(np.sqrt(cells)))
    if n * n == cells:
        return n, n
    n = int(round(np.sqrt(cells / 2)))
    if 2 * n * n == cells:
        return 2 * n, n
    raise ValueError(f"cannot build a structured mesh with {n_triangles} triangles")


def unit_square_with_triangles(n_triangles: int) -> Mesh:
    nx, ny = grid_for_triangle_count(n_triangles)
    return build_structured_rect(nx, ny)
