"""Broken polynomial spaces: Lagrange bases, traces, jumps and seminorms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import Mesh
from .quadrature import default_edge_degree, edge_rule, triangle_rule


def n_basis(q: int) -> int:
    return (q + 1) * (q + 2) // 2


@lru_cache(maxsize=None)
def lattice_nodes(q: int) -> np.ndarray:
    """Reference-coordinate nodes of the degree-``q`` Lagrange element.

    The first three nodes are the vertices (for q >= 1). Degree 0 uses the
    barycenter.
    """
    if q == 0:
        nodes = np.array([[1.0 / 3.0, 1.0 / 3.0]])
    else:
        verts = [(0, 0), (q, 0), (0, q)]
        rest = [
            (i, j)
            for j in range(q + 1)
            for i in range(q + 1 - j)
            if (i, j) not in verts
        ]
        nodes = np.array(verts + rest, dtype=float) / q
    nodes.setflags(write=False)
    return nodes


def _monomial_exponents(q: int):
    return [(a, b) for total in range(q + 1) for b in range(total + 1) for a in [total - b]]


def _monomials(points: np.ndarray, q: int) -> np.ndarray:
    x, y = points[..., 0], points[..., 1]
    return np.stack([x**a * y**b for a, b in _monomial_exponents(q)], axis=-1)


def _monomial_gradients(points: np.ndarray, q: int) -> np.ndarray:
    x, y = points[..., 0], points[..., 1]
    cols = []
    for a, b in _monomial_exponents(q):
        dx = a * x ** max(a - 1, 0) * y**b if a else np.zeros_like(x)
        dy = b * x**a * y ** max(b - 1, 0) if b else np.zeros_like(x)
        cols.append(np.stack([dx, dy], axis=-1))
    return np.stack(cols, axis=-2)


@lru_cache(maxsize=None)
def _basis_coefficients(q: int) -> np.ndarray:
    return np.linalg.inv(_monomials(lattice_nodes(q), q))


def basis_values(points: np.ndarray, q: int) -> np.ndarray:
    """Reference basis values, shape (..., n_basis(q))."""
    return _monomials(np.asarray(points, dtype=float), q) @ _basis_coefficients(q)


def basis_gradients(points: np.ndarray, q: int) -> np.ndarray:
    """Reference basis gradients, shape (..., n_basis(q), 2)."""
    g = _monomial_gradients(np.asarray(points, dtype=float), q)
    return np.einsum("...md,mb->...bd", g, _basis_coefficients(q))


@dataclass(eq=False)
class DGFunction:
    """Vector-valued broken polynomial field on a mesh.

    ``coeffs`` has shape (n_triangles, n_basis(q), N) and holds nodal values
    of the element-local Lagrange interpolant. Nothing couples neighbouring
    elements.
    """

    mesh: Mesh
    q: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.q < 1:
            raise ValueError("polynomial degree q must be >= 1")
        expected = (self.mesh.n_triangles, n_basis(self.q))
        if self.coeffs.ndim != 3 or self.coeffs.shape[:2] != expected:
            raise ValueError(
                f"coeffs must have shape {expected + ('N',)}, got {self.coeffs.shape}"
            )

    @property
    def n_components(self) -> int:
        return self.coeffs.shape[2]

    @property
    def size(self) -> int:
        return self.coeffs.size

    @classmethod
    def zeros(cls, mesh: Mesh, q: int = 1, n_components: int = 2) -> "DGFunction":
        return cls(mesh, q, np.zeros((mesh.n_triangles, n_basis(q), n_components)))

    @classmethod
    def from_vector(cls, mesh: Mesh, q: int, n_components: int, x) -> "DGFunction":
        return cls(mesh, q, np.asarray(x, dtype=float).reshape(mesh.n_triangles, n_basis(q), n_components))

    def ravel(self) -> np.ndarray:
        return self.coeffs.ravel()

    def copy(self) -> "DGFunction":
        return DGFunction(self.mesh, self.q, self.coeffs.copy())

    def __add__(self, other: "DGFunction") -> "DGFunction":
        return DGFunction(self.mesh, self.q, self.coeffs + other.coeffs)

    def __sub__(self, other: "DGFunction") -> "DGFunction":
        return DGFunction(self.mesh, self.q, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "DGFunction":
        return DGFunction(self.mesh, self.q, scalar * self.coeffs)

    __rmul__ = __mul__

    def values_at(self, ref_points: np.ndarray) -> np.ndarray:
        """Values at the same reference points on every element, (m, n_pts, N)."""
        phi = basis_values(ref_points, self.q)
        return np.einsum("pb,kbi->kpi", phi, self.coeffs)

    def gradients_at(self, ref_points: np.ndarray) -> np.ndarray:
        """Physical gradients at reference points, (m, n_pts, N, 2)."""
        dphi = element_basis_gradients(self.mesh, ref_points, self.q)
        return np.einsum("kpbd,kbi->kpid", dphi, self.coeffs)


def element_basis_gradients(mesh: Mesh, ref_points: np.ndarray, q: int) -> np.ndarray:
    """Physical basis gradients, shape (m, n_pts, n_basis, 2)."""
    dref = basis_gradients(ref_points, q)
    # grad_x phi = J^{-T} grad_ref phi
    return np.einsum("kec,pbe->kpbc", mesh.inverse_jacobians, dref)


@dataclass(eq=False)
class ElementField:
    """Per-element matrix-valued polynomial field of degree ``degree``.

    ``coeffs`` has shape (m, n_basis(degree), N, d) and holds nodal values on
    the degree-``degree`` lattice (the barycenter for degree 0).
    """

    mesh: Mesh
    degree: int
    coeffs: np.ndarray

    def values_at(self, ref_points: np.ndarray) -> np.ndarray:
        phi = basis_values(ref_points, self.degree)
        return np.einsum("pb,kbij->kpij", phi, self.coeffs)

    @property
    def constant_values(self) -> np.ndarray:
        """Values of a piecewise-constant field, shape (m, N, d)."""
        if self.degree != 0:
            raise ValueError("field is not piecewise constant")
        return self.coeffs[:, 0]

    def __sub__(self, other: "ElementField") -> "ElementField":
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return ElementField(self.mesh, self.degree, self.coeffs - other.coeffs)

    def __add__(self, other: "ElementField") -> "ElementField":
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        return ElementField(self.mesh, self.degree, self.coeffs + other.coeffs)


def _point_in_element(mesh: Mesh, element: int, point, tol=1e-12) -> np.ndarray:
    x0 = mesh.vertices[mesh.triangles[element, 0]]
    ref = mesh.inverse_jacobians[element] @ (np.asarray(point, dtype=float) - x0)
    lam = np.array([1.0 - ref.sum(), ref[0], ref[1]])
    if np.any(lam < -tol):
        raise ValueError(f"point {point} lies outside element {element}")
    return ref


def evaluate(u: DGFunction, element: int, point) -> np.ndarray:
    """One-sided value of ``u`` on ``element`` at a physical point."""
    ref = _point_in_element(u.mesh, element, point)
    return basis_values(ref, u.q) @ u.coeffs[element]


def broken_gradient(u: DGFunction) -> ElementField:
    """Elementwise gradient as a degree q-1 field."""
    nodes = lattice_nodes(u.q - 1)
    return ElementField(u.mesh, u.q - 1, u.gradients_at(nodes))


# -- edge traces ------------------------------------------------------------


def edge_reference_points(mesh: Mesh, s: np.ndarray):
    """Reference coordinates of edge points ``s`` seen from both sides.

    Returns ``(plus, minus)`` of shape (n_edges, n_s, 2). ``minus`` is NaN on
    boundary edges.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = []
    for side in (0, 1):
        elems = mesh.edge_elements[:, side]
        valid = elems >= 0
        ref = np.full((mesh.n_edges, len(s), 2), np.nan)
        tri = mesh.triangles[elems[valid]]
        e = mesh.edges[valid]
        lam = np.zeros((len(tri), len(s), 3))
        rows = np.arange(len(tri))
        lo = np.argmax(tri == e[:, [0]], axis=1)
        hi = np.argmax(tri == e[:, [1]], axis=1)
        lam[rows, :, lo] = 1.0 - s
        lam[rows, :, hi] = s
        ref[valid] = lam[..., 1:]
        out.append(ref)
    return out[0], out[1]


def edge_points(mesh: Mesh, s: np.ndarray) -> np.ndarray:
    """Physical points of edge parameters ``s``, shape (n_edges, n_s, 2)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    p0 = mesh.vertices[mesh.edges[:, 0]]
    p1 = mesh.vertices[mesh.edges[:, 1]]
    return p0[:, None, :] * (1.0 - s)[None, :, None] + p1[:, None, :] * s[None, :, None]


def _side_values(u: DGFunction, ref: np.ndarray, elems: np.ndarray) -> np.ndarray:
    phi = basis_values(ref, u.q)  # (E, S, B)
    return np.einsum("esb,ebi->esi", phi, u.coeffs[elems])


def traces(u: DGFunction, s: np.ndarray):
    """One-sided traces on all edges, ``(plus, minus)`` each (n_edges, n_s, N).

    ``minus`` is NaN on boundary edges.
    """
    mesh = u.mesh
    ref_p, ref_m = edge_reference_points(mesh, s)
    plus = _side_values(u, ref_p, mesh.edge_elements[:, 0])
    minus = np.full_like(plus, np.nan)
    interior = mesh.interior_edges
    minus[interior] = _side_values(u, ref_m[interior], mesh.edge_elements[interior, 1])
    return plus, minus


def trace_pair(u: DGFunction, edge: int, s: float):
    """Traces ``(u_plus, u_minus)`` on an interior edge at parameter ``s``."""
    mesh = u.mesh
    if mesh.edge_elements[edge, 1] < 0:
        raise ValueError(f"edge {edge} is a boundary edge; use boundary_jump")
    if not 0.0 <= s <= 1.0:
        raise ValueError("edge parameter must lie in [0, 1]")
    x = edge_points(mesh, [s])[edge, 0]
    kp, km = mesh.edge_elements[edge]
    return evaluate(u, kp, x), evaluate(u, km, x)


def tensor_jump(u_plus, u_minus, normal) -> np.ndarray:
    """``[[u (x) n]] = u+ (x) n+ + u- (x) n-`` with ``n- = -n+``."""
    return np.multiply.outer(np.asarray(u_plus) - np.asarray(u_minus), np.asarray(normal))


def boundary_jump(u: DGFunction, edge: int, s: float, u0) -> np.ndarray:
    """Trace minus Dirichlet datum on a boundary edge."""
    mesh = u.mesh
    if mesh.edge_elements[edge, 1] >= 0:
        raise ValueError(f"edge {edge} is an interior edge")
    x = edge_points(mesh, [s])[edge, 0]
    return evaluate(u, mesh.edge_elements[edge, 0], x) - np.asarray(u0(x), dtype=float)


def edge_jumps(u: DGFunction, s: np.ndarray, u0=None) -> np.ndarray:
    """Jumps on all edges, (n_edges, n_s, N).

    Interior edges get ``u+ - u-``. Boundary edges get ``u - u0``, or zero
    when ``u0`` is None and the boundary should be ignored.
    """
    plus, minus = traces(u, s)
    jumps = plus - minus
    b = u.mesh.boundary_edges
    if u0 is None:
        jumps[b] = 0.0
    else:
        pts = edge_points(u.mesh, s)[b]
        jumps[b] = plus[b] - np.asarray(u0(pts), dtype=float).reshape(plus[b].shape)
    return jumps


def jump_integrals(u: DGFunction, p: float, u0=None, edge_degree=None):
    """``h_e^{1-p} int_e |[[u]]|^p`` per edge, shape (n_edges,)."""
    mesh = u.mesh
    rule = edge_rule(edge_degree if edge_degree is not None else default_edge_degree(p, u.q))
    jumps = edge_jumps(u, rule.points, u0)
    mag = np.linalg.norm(jumps, axis=2) ** p
    h = mesh.edge_lengths
    return h ** (1.0 - p) * h * (mag @ rule.weights)


def gradient_power_integral(u: DGFunction, p: float, tri_degree=None) -> float:
    """``sum_K int_K |grad u|^p`` with the Frobenius norm."""
    if u.q == 1:
        g = u.gradients_at(lattice_nodes(0))[:, 0]
        return float(np.sum(u.mesh.areas * np.linalg.norm(g, axis=(1, 2)) ** p))
    rule = triangle_rule(tri_degree if tri_degree is not None else 10)
    g = u.gradients_at(rule.points)
    vals = np.linalg.norm(g, axis=(2, 3)) ** p
    return float(np.sum(2.0 * u.mesh.areas * (vals @ rule.weights)))


def broken_seminorm(u: DGFunction, p: float, u0=None, *, edge_degree=None, with_boundary=False):
    """Broken ``W^{1,p}`` seminorm over elements and interior edges.

    With ``with_boundary=True`` (requires ``u0``) returns the pair
    ``(seminorm, boundary_sum)`` where ``boundary_sum`` is
    ``sum_{boundary e} h_e^{1-p} int_e |u - u0|^p``; it is never folded
    into the seminorm.
    """
    if p <= 1:
        raise ValueError("exponent p must be > 1")
    bulk = gradient_power_integral(u, p)
    per_edge = jump_integrals(u, p, u0, edge_degree)
    mesh = u.mesh
    value = (bulk + per_edge[mesh.interior_edges].sum()) ** (1.0 / p)
    if with_boundary:
        if u0 is None:
            raise ValueError("boundary sum requires a boundary datum u0")
        return value, float(per_edge[mesh.boundary_edges].sum())
    return value


def interpolate(f, mesh: Mesh, q: int = 1, n_components=None) -> DGFunction:
    """Elementwise Lagrange interpolant of ``f``.

    ``f`` maps points of shape (..., 2) to values of shape (..., N).
    """
    nodes = lattice_nodes(q)
    x0 = mesh.vertices[mesh.triangles[:, 0]]
    pts = x0[:, None, :] + np.einsum("kij,pj->kpi", mesh.jacobians, nodes)
    vals = np.asarray(f(pts), dtype=float)
    if vals.ndim == 2:
        vals = vals[..., None]
    if n_components is not None and vals.shape[-1] != n_components:
        raise ValueError(f"f returned {vals.shape[-1]} components, expected {n_components}")
    return DGFunction(mesh, q, vals)


def affine_map(F, b=None):
    """Callable ``x -> F x + b`` acting on point arrays of shape (..., 2)."""
    F = np.asarray(F, dtype=float)
    b = np.zeros(F.shape[0]) if b is None else np.asarray(b, dtype=float)

    def f(x):
        return np.asarray(x) @ F.T + b

    return f


def side_gradients(u: DGFunction, ref: np.ndarray, elems: np.ndarray) -> np.ndarray:
    """Gradients of ``u`` restricted to ``elems`` at per-edge reference points.

    ``ref`` has shape (E, S, 2); the result has shape (E, S, N, 2).
    """
    dref = basis_gradients(ref, u.q)  # (E, S, B, 2)
    dphi = np.einsum("eba,esnb->esna", u.mesh.inverse_jacobians[elems], dref)
    return np.einsum("esnd,eni->esid", dphi, u.coeffs[elems])
