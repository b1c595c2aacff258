"""First variations of the discrete energies for piecewise-linear fields.

The gradient is taken with respect to every nodal coefficient and returned
in the layout of :attr:`DGFunction.coeffs` (shape (m, 3, N)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .energy import DiscreteEnergyConfig, PenaltyParts, energy, penalty_from_parts
from .mesh import Mesh
from .quadrature import edge_rule, triangle_rule
from .space import DGFunction, basis_values, edge_points, edge_reference_points, element_basis_gradients


@dataclass(frozen=True, eq=False)
class _P1Tables:
    dphi: np.ndarray  # (m, 3, 2) constant basis gradients
    s: np.ndarray  # edge rule points
    w: np.ndarray  # (E, S) edge rule weights times edge length
    phi_plus: np.ndarray  # (E, S, 3)
    phi_minus: np.ndarray  # (E, S, 3), zero on boundary edges
    points: np.ndarray  # (E, S, 2) physical edge points
    mass_plus: np.ndarray  # (E, 3) int_e phi_a ds from the plus side
    mass_minus: np.ndarray  # (E, 3)


@lru_cache(maxsize=8)
def _tables(mesh: Mesh, edge_degree: int) -> _P1Tables:
    rule = edge_rule(edge_degree)
    ref_p, ref_m = edge_reference_points(mesh, rule.points)
    phi_p = basis_values(ref_p, 1)
    phi_m = np.nan_to_num(basis_values(ref_m, 1), nan=0.0)
    dphi = element_basis_gradients(mesh, np.array([[1 / 3, 1 / 3]]), 1)[:, 0]
    w = rule.weights[None, :] * mesh.edge_lengths[:, None]
    return _P1Tables(
        dphi, rule.points, w, phi_p, phi_m, edge_points(mesh, rule.points),
        np.einsum("es,esa->ea", w, phi_p), np.einsum("es,esa->ea", w, phi_m),
    )


def _scatter_face(grad, mesh, edges, tables, T):
    """Add ``-int_e T : d[[u (x) n]]`` for stresses ``T`` of shape (E, N, d)."""
    Tn = np.einsum("eij,ej->ei", T, mesh.normals[edges])
    kp, km = mesh.edge_elements[edges, 0], mesh.edge_elements[edges, 1]
    np.add.at(grad, kp, -tables.mass_plus[edges][:, :, None] * Tn[:, None, :])
    inner = km >= 0
    if np.any(inner):
        np.add.at(grad, km[inner], tables.mass_minus[edges[inner]][:, :, None] * Tn[inner, None, :])


class P1Kernel:
    """Energy and gradient of one configuration on one mesh, for q = 1.

    Evaluates the same functionals as :mod:`dgvar.energy` from flat
    coefficient vectors, reusing the edge tables between calls. The solver
    runs on this; the energy module stays the general-degree reference.
    """

    def __init__(self, mesh: Mesh, cfg: DiscreteEnergyConfig, n_components: int = 2):
        if cfg.penalty == "pen2" and cfg.p < 2:
            raise ValueError("pen2 requires p >= 2")
        if cfg.formulation not in ("dg", "projected", "compact", "lifting"):
            raise ValueError(f"unknown formulation {cfg.formulation!r}")
        self.mesh = mesh
        self.cfg = cfg
        self.N = n_components
        self.tab = _tables(mesh, cfg.edge_degree_for(1))
        self.inner = mesh.interior_edges
        self.bnd = mesh.boundary_edges
        self.kp = mesh.edge_elements[self.inner, 0]
        self.km = mesh.edge_elements[self.inner, 1]
        pts = self.tab.points[self.bnd]
        self.u0_bnd = np.asarray(cfg.boundary_datum(n_components)(pts), dtype=float).reshape(
            pts.shape[:2] + (n_components,)
        )
        self.shape = (mesh.n_triangles, 3, n_components)
        if cfg.f is not None:
            rule = triangle_rule(3)
            x0 = mesh.vertices[mesh.triangles[:, 0]]
            qp = x0[:, None, :] + np.einsum("kij,pj->kpi", mesh.jacobians, rule.points)
            fv = np.asarray(cfg.f(qp), dtype=float).reshape(mesh.n_triangles, len(rule), -1)
            phi = basis_values(rule.points, 1)
            # -int f . phi_a e_i, so that the load term is <load, U>
            self.load = -2.0 * mesh.areas[:, None, None] * np.einsum("p,pa,kpi->kai", rule.weights, phi, fv)
        else:
            self.load = None

    def _state(self, U):
        tab, mesh = self.tab, self.mesh
        G = np.swapaxes(U, 1, 2) @ tab.dphi
        up = tab.phi_plus @ U[mesh.edge_elements[:, 0]]
        jump = up.copy()
        jump[self.inner] -= tab.phi_minus[self.inner] @ U[self.km]
        jump[self.bnd] -= self.u0_bnd
        mean = np.einsum("es,esi->ei", tab.w[self.inner], jump[self.inner])
        Jn = mean[:, :, None] * mesh.normals[self.inner][:, None, :]
        return G, up, jump, Jn

    def _lifted(self, up, Jn):
        mesh, tab = self.mesh, self.tab
        R = np.zeros((mesh.n_triangles, self.N, 2))
        np.add.at(R, self.kp, 0.5 * Jn)
        np.add.at(R, self.km, 0.5 * Jn)
        Jb = None
        if self.cfg.lift_boundary:
            mean = np.einsum("es,esi->ei", tab.w[self.bnd], up[self.bnd] - self.u0_bnd)
            Jb = mean[:, :, None] * mesh.normals[self.bnd][:, None, :]
            np.add.at(R, mesh.edge_elements[self.bnd, 0], Jb)
        return R / mesh.areas[:, None, None], Jb

    def _penalty_sums(self, G, jump):
        p = self.cfg.p
        h = self.mesh.edge_lengths
        mag = np.linalg.norm(jump, axis=2)
        per_edge = h ** (1.0 - p) * np.einsum("es,es->e", self.tab.w, mag**p)
        gnorm = np.linalg.norm(G, axis=(1, 2))
        bulk = float(np.sum(self.mesh.areas * gnorm**p))
        return PenaltyParts(bulk, float(per_edge[self.inner].sum()), float(per_edge.sum())), mag, gnorm

    def energy(self, x, regularized: bool = True) -> float:
        cfg = self.cfg
        W = cfg.density
        U = np.reshape(x, self.shape)
        G, up, jump, Jn = self._state(U)
        area = self.mesh.areas
        if cfg.formulation == "lifting":
            R, _ = self._lifted(up, Jn)
            value = float(np.sum(area * W(G - R)))
        else:
            value = float(np.sum(area * W(G)))
            if cfg.formulation == "dg":
                T = W.stress(0.5 * (G[self.kp] + G[self.km]))
            else:
                T = 0.5 * (W.stress(G[self.kp]) + W.stress(G[self.km]))
            value -= float(np.einsum("eij,eij->", T, Jn))
        if cfg.penalty != "none":
            parts, _, _ = self._penalty_sums(G, jump)
            eps = cfg.eps if regularized else 0.0
            value += cfg.alpha * penalty_from_parts(parts, cfg.p, cfg.penalty, eps)
        if self.load is not None:
            value += float(np.sum(self.load * U))
        return value

    def gradient(self, x, regularized: bool = True) -> np.ndarray:
        cfg = self.cfg
        mesh, tab = self.mesh, self.tab
        W = cfg.density
        U = np.reshape(x, self.shape)
        G, up, jump, Jn = self._state(U)
        area = mesh.areas
        kp, km, inner = self.kp, self.km, self.inner
        grad = np.zeros(self.shape)

        if cfg.formulation == "lifting":
            R, _ = self._lifted(up, Jn)
            Sd = W.stress(G - R)
            grad += area[:, None, None] * tab.dphi @ np.swapaxes(Sd, 1, 2)
            _scatter_face(grad, mesh, inner, tab, 0.5 * (Sd[kp] + Sd[km]))
            if cfg.lift_boundary:
                _scatter_face(grad, mesh, self.bnd, tab, Sd[mesh.edge_elements[self.bnd, 0]])
        else:
            grad += area[:, None, None] * tab.dphi @ np.swapaxes(W.stress(G), 1, 2)
            if cfg.formulation == "dg":
                A = 0.5 * (G[kp] + G[km])
                T = W.stress(A)
                Mp = Mm = W.tangent_apply(A, Jn)
            else:
                T = 0.5 * (W.stress(G[kp]) + W.stress(G[km]))
                Mp = W.tangent_apply(G[kp], Jn)
                Mm = W.tangent_apply(G[km], Jn)
            _scatter_face(grad, mesh, inner, tab, T)
            np.add.at(grad, kp, -0.5 * tab.dphi[kp] @ np.swapaxes(Mp, 1, 2))
            np.add.at(grad, km, -0.5 * tab.dphi[km] @ np.swapaxes(Mm, 1, 2))

        if cfg.penalty != "none":
            grad += cfg.alpha * self._penalty_gradient(G, jump, cfg.eps if regularized else 0.0)
        if self.load is not None:
            grad += self.load
        return grad

    def _penalty_gradient(self, G, jump, eps):
        cfg, mesh, tab = self.cfg, self.mesh, self.tab
        p = cfg.p
        parts, mag, gnorm = self._penalty_sums(G, jump)
        J_all = parts.all_jumps + eps
        if J_all == 0.0:
            # no jumps at all: zero is the minimal-norm subgradient choice
            return np.zeros(self.shape)
        s = parts.seminorm_p
        h = mesh.edge_lengths
        inner, bnd = self.inner, self.bnd

        coef = (h ** (1.0 - p))[:, None] * tab.w * p * mag ** (p - 2.0)
        dj = coef[:, :, None] * jump
        d_int = np.zeros(self.shape)
        d_bnd = np.zeros(self.shape)
        np.add.at(d_int, self.kp, np.swapaxes(tab.phi_plus[inner], 1, 2) @ dj[inner])
        np.add.at(d_int, self.km, -np.swapaxes(tab.phi_minus[inner], 1, 2) @ dj[inner])
        np.add.at(d_bnd, mesh.edge_elements[bnd, 0], np.swapaxes(tab.phi_plus[bnd], 1, 2) @ dj[bnd])
        d_bulk = (mesh.areas * p * gnorm ** (p - 2.0))[:, None, None] * (tab.dphi @ np.swapaxes(G, 1, 2))

        d_semi = d_bulk + d_int
        d_all = d_int + d_bnd
        if cfg.penalty == "pen1":
            a = (p - 1.0) / p * (1.0 + s) ** (-1.0 / p) * (J_all ** (1.0 / p) - eps ** (1.0 / p))
            b = (1.0 + s) ** ((p - 1.0) / p) * J_all ** (1.0 / p - 1.0) / p
            return a * d_semi + b * d_all
        b = (1.0 + (s + eps) ** ((p - 2.0) / p)) * (2.0 / p) * J_all ** (2.0 / p - 1.0)
        out = b * d_all
        if p != 2.0:
            a = (p - 2.0) / p * (s + eps) ** (-2.0 / p) * (J_all ** (2.0 / p) - eps ** (2.0 / p))
            out = out + a * d_semi
        return out


def gradient(u: DGFunction, cfg: DiscreteEnergyConfig, *, regularized: bool = False) -> np.ndarray:
    """Exact derivative of the configured (unregularized) energy, shape (m, 3, N).

    With ``regularized=True`` the derivative of the smoothed objective the
    solver minimizes is returned instead. The unregularized penalty is not
    differentiable when every jump vanishes; zero is returned for its part
    in that case.
    """
    if u.q != 1:
        raise ValueError("analytic variations are implemented for q = 1 only")
    return P1Kernel(u.mesh, cfg, u.n_components).gradient(u.coeffs, regularized=regularized)


def fd_gradient(u: DGFunction, cfg: DiscreteEnergyConfig, step: float = 1e-6) -> np.ndarray:
    """Central differences of the (unregularized) energy, coefficient by coefficient."""
    x = u.coeffs.ravel()
    out = np.empty_like(x)
    for i in range(len(x)):
        xp = x.copy()
        xp[i] += step
        xm = x.copy()
        xm[i] -= step
        ep = energy(DGFunction.from_vector(u.mesh, u.q, u.n_components, xp), cfg)
        em = energy(DGFunction.from_vector(u.mesh, u.q, u.n_components, xm), cfg)
        out[i] = (ep - em) / (2.0 * step)
    return out.reshape(u.coeffs.shape)


def fd_check(u: DGFunction, cfg: DiscreteEnergyConfig, step: float = 1e-6, floor: float = 1e-10) -> float:
    """Worst relative gap between :func:`gradient` and central differences.

    Entries where both sides are at most ``floor`` in magnitude are skipped;
    returns 0.0 when nothing is left to compare.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    g = gradient(u, cfg).ravel()
    fd = fd_gradient(u, cfg, step).ravel()
    scale = np.maximum(np.abs(g), np.abs(fd))
    keep = scale > floor
    if not np.any(keep):
        return 0.0
    return float(np.max(np.abs(g[keep] - fd[keep]) / scale[keep]))
