"""Energy densities and the discrete DG energy functionals.

Built-in densities and their growth constants (``|F|`` is the Frobenius
norm):

* ``power:p``  ``W = |F|^p``; ``|F|^p <= W <= 1 + |F|^p``.
* ``dirichlet`` ``W = |F|^2 / 2``, ``p = 2``; ``|F|^2 / 2 <= W <= 1 + |F|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lifting import discrete_gradient, lift, reference_mass
from .quadrature import default_edge_degree, default_triangle_degree, edge_rule, triangle_rule
from .space import (
    DGFunction,
    ElementField,
    basis_values,
    broken_gradient,
    edge_reference_points,
    gradient_power_integral,
    jump_integrals,
    side_gradients,
    traces,
)

FORMULATIONS = ("dg", "projected", "lifting", "compact")
PENALTIES = ("pen1", "pen2", "none")


class EnergyDensity:
    """Stored energy ``W`` with stress ``S = dW/dF`` and tangent ``dS/dF``.

    All methods act on arrays of matrices of shape (..., N, d).
    """

    name = "density"
    p: float = 2.0

    def __call__(self, F):
        raise NotImplementedError

    def stress(self, F):
        raise NotImplementedError

    def tangent(self, F):
        raise NotImplementedError

    def tangent_apply(self, F, H):
        """``dS/dF (F)[H]`` without forming the rank-4 tangent."""
        return np.einsum("...ijkl,...ij->...kl", self.tangent(F), H)

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


def _frob(F):
    return np.sqrt(np.einsum("...ij,...ij->...", F, F))


class PowerDensity(EnergyDensity):
    """``W(F) = |F|^p``, convex for ``p >= 1``; derivatives need ``p >= 2``."""

    def __init__(self, p: float):
        if p < 2:
            raise ValueError("power densities need p >= 2 for a C2 stored energy")
        self.p = float(p)
        self.name = f"power:{p:g}"

    def __call__(self, F):
        return _frob(F) ** self.p

    def stress(self, F):
        F = np.asarray(F, dtype=float)
        return self.p * (_frob(F) ** (self.p - 2.0))[..., None, None] * F

    def tangent(self, F):
        F = np.asarray(F, dtype=float)
        p = self.p
        r = _frob(F)
        N, d = F.shape[-2:]
        eye = np.eye(N * d).reshape(N, d, N, d)
        out = p * (r ** (p - 2.0))[..., None, None, None, None] * eye
        if p != 2.0:
            out = out + p * (p - 2.0) * (r ** (p - 4.0))[..., None, None, None, None] * np.einsum(
                "...ij,...kl->...ijkl", F, F
            )
        return out

    def tangent_apply(self, F, H):
        F = np.asarray(F, dtype=float)
        p = self.p
        r = _frob(F)
        out = p * (r ** (p - 2.0))[..., None, None] * H
        if p != 2.0:
            FH = np.einsum("...ij,...ij->...", F, H)
            out = out + (p * (p - 2.0) * r ** (p - 4.0) * FH)[..., None, None] * F
        return out


class DirichletDensity(EnergyDensity):
    """``W(F) = |F|^2 / 2``, the Laplace case."""

    name = "dirichlet"
    p = 2.0

    def __call__(self, F):
        return 0.5 * np.einsum("...ij,...ij->...", F, F)

    def stress(self, F):
        return np.array(F, dtype=float)

    def tangent(self, F):
        F = np.asarray(F, dtype=float)
        N, d = F.shape[-2:]
        eye = np.eye(N * d).reshape(N, d, N, d)
        return np.broadcast_to(eye, F.shape[:-2] + (N, d, N, d)).copy()

    def tangent_apply(self, F, H):
        return np.array(H, dtype=float)


def density_from_name(name: str) -> EnergyDensity:
    """Parse ``"power:4"``, ``"power:6"`` or ``"dirichlet"``."""
    key = name.strip().lower()
    if key == "dirichlet":
        return DirichletDensity()
    if key.startswith("power:"):
        try:
            p = float(key.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad power exponent in density name {name!r}") from None
        return PowerDensity(p)
    raise ValueError(f"unknown density {name!r}")


@dataclass
class DiscreteEnergyConfig:
    """Settings shared by all discrete energies.

    ``u0`` and ``f`` map points (..., 2) to values (..., N). A missing ``u0``
    means homogeneous Dirichlet data. ``smoothing`` is a jump size below
    which the fractional powers of the penalty are rounded off: the jump
    sum ``J`` (a p-th power) is shifted by ``eps = smoothing**p``, so the
    resulting bias on the jumps is of order ``smoothing`` for every ``p``.
    It only enters when ``regularized=True`` is requested (the solver
    does, reported energies do not).
    """

    density: EnergyDensity = field(default_factory=lambda: PowerDensity(4))
    formulation: str = "projected"
    penalty: str = "pen1"
    alpha: float = 20.0
    u0: Optional[Callable] = None
    f: Optional[Callable] = None
    tri_degree: Optional[int] = None
    edge_degree: Optional[int] = None
    smoothing: float = 3e-5
    lift_boundary: bool = False

    def __post_init__(self):
        if isinstance(self.density, str):
            self.density = density_from_name(self.density)
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}")
        if self.penalty != "none" and not self.alpha > 0:
            raise ValueError("alpha must be positive when a penalty is active")
        if self.penalty == "pen2" and self.p < 2:
            raise ValueError("pen2 requires p >= 2")
        if self.smoothing < 0:
            raise ValueError("smoothing must be non-negative")

    @property
    def p(self) -> float:
        return self.density.p

    @property
    def eps(self) -> float:
        """Shift applied to the jump sum ``J`` in the regularized penalty."""
        return self.smoothing**self.p

    def boundary_datum(self, n_components: int = 2) -> Callable:
        if self.u0 is not None:
            return self.u0
        return lambda x: np.zeros(np.shape(x)[:-1] + (n_components,))

    def edge_degree_for(self, q: int) -> int:
        return self.edge_degree if self.edge_degree is not None else default_edge_degree(self.p, q)

    def tri_degree_for(self, q: int) -> int:
        return self.tri_degree if self.tri_degree is not None else default_triangle_degree(self.p, q)


# -- penalty ------------------------------------------------------------------


@dataclass
class PenaltyParts:
    bulk: float  # sum_K int_K |grad u|^p
    interior_jumps: float  # sum over interior edges of h^{1-p} int |[[u]]|^p
    all_jumps: float  # same over all edges, boundary jumps taken against u0

    @property
    def seminorm_p(self) -> float:
        return self.bulk + self.interior_jumps


def penalty_parts(u: DGFunction, cfg: DiscreteEnergyConfig) -> PenaltyParts:
    p = cfg.p
    per_edge = jump_integrals(u, p, cfg.boundary_datum(u.n_components), cfg.edge_degree_for(u.q))
    return PenaltyParts(
        bulk=gradient_power_integral(u, p, cfg.tri_degree),
        interior_jumps=float(per_edge[u.mesh.interior_edges].sum()),
        all_jumps=float(per_edge.sum()),
    )


def penalty_from_parts(parts: PenaltyParts, p: float, variant: str, eps: float = 0.0) -> float:
    """Combine the penalty sums.

    With ``eps > 0`` the fractional powers of the jump sum are smoothed as
    ``(J + eps)^r - eps^r``, which keeps the value zero at vanishing jumps.
    """
    s = parts.seminorm_p
    J = parts.all_jumps
    if variant == "pen1":
        r = 1.0 / p
        return (1.0 + s) ** ((p - 1.0) / p) * ((J + eps) ** r - eps**r)
    if variant == "pen2":
        if p < 2:
            raise ValueError("pen2 requires p >= 2")
        r = 2.0 / p
        return (1.0 + (s + eps) ** ((p - 2.0) / p)) * ((J + eps) ** r - eps**r)
    if variant == "none":
        return 0.0
    raise ValueError(f"unknown penalty {variant!r}")


def penalty(u: DGFunction, cfg: DiscreteEnergyConfig, variant: str | None = None, *, eps: float = 0.0) -> float:
    """Unweighted penalty ``Pen(u)`` (the factor ``alpha`` is applied by the energies)."""
    variant = cfg.penalty if variant is None else variant
    if variant == "pen2" and cfg.p < 2:
        raise ValueError("pen2 requires p >= 2")
    if variant == "none":
        return 0.0
    return penalty_from_parts(penalty_parts(u, cfg), cfg.p, variant, eps)


# -- energy pieces ------------------------------------------------------------


def load_term(u: DGFunction, f, tri_degree: int | None = None) -> float:
    """``-int f . u`` by element quadrature; zero when ``f`` is None."""
    if f is None:
        return 0.0
    mesh = u.mesh
    rule = triangle_rule(tri_degree if tri_degree is not None else min(u.q + 2, 10))
    x0 = mesh.vertices[mesh.triangles[:, 0]]
    pts = x0[:, None, :] + np.einsum("kij,pj->kpi", mesh.jacobians, rule.points)
    fv = np.asarray(f(pts), dtype=float).reshape(mesh.n_triangles, len(rule), -1)
    uv = u.values_at(rule.points)
    return -float(np.sum(2.0 * mesh.areas * (np.einsum("kpi,kpi->kp", fv, uv) @ rule.weights)))


def _bulk(u: DGFunction, cfg: DiscreteEnergyConfig, field=None) -> float:
    """``sum_K int_K W(grad u)`` or of an ElementField ``field``."""
    mesh = u.mesh
    W = cfg.density
    if field is None and u.q == 1:
        field = broken_gradient(u)
    if field is not None and field.degree == 0:
        return float(np.sum(mesh.areas * W(field.constant_values)))
    rule = triangle_rule(cfg.tri_degree_for(u.q))
    vals = u.gradients_at(rule.points) if field is None else field.values_at(rule.points)
    return float(np.sum(2.0 * mesh.areas * (W(vals) @ rule.weights)))


def _interior_face_data(u: DGFunction, cfg: DiscreteEnergyConfig):
    """Edge rule, per-edge weights, tensor jumps and side gradients on interior edges."""
    mesh = u.mesh
    rule = edge_rule(cfg.edge_degree_for(u.q))
    inner = mesh.interior_edges
    plus, minus = traces(u, rule.points)
    jt = np.einsum("esi,ej->esij", plus[inner] - minus[inner], mesh.normals[inner])
    ref_p, ref_m = edge_reference_points(mesh, rule.points)
    weights = rule.weights[None, :] * mesh.edge_lengths[inner, None]
    return rule, inner, weights, jt, ref_p[inner], ref_m[inner]


def face_term(u: DGFunction, cfg: DiscreteEnergyConfig, variant: str = "dg") -> float:
    """``sum_{interior e} int_e T : [[u (x) n]]``.

    ``variant="dg"`` uses ``T = S({grad u})``; ``variant="projected"`` uses
    ``T = {P S(grad u)}`` with ``P`` the elementwise projection onto degree
    q-1 (the identity for q = 1).
    """
    mesh = u.mesh
    S = cfg.density.stress
    rule, inner, weights, jt, ref_p, ref_m = _interior_face_data(u, cfg)
    kp, km = mesh.edge_elements[inner, 0], mesh.edge_elements[inner, 1]
    if variant == "dg":
        avg = 0.5 * (side_gradients(u, ref_p, kp) + side_gradients(u, ref_m, km))
        T = S(avg)
    elif variant == "projected":
        PS = projected_stress(u, cfg)
        Tp = np.einsum("esa,eaij->esij", basis_values(ref_p, PS.degree), PS.coeffs[kp])
        Tm = np.einsum("esa,eaij->esij", basis_values(ref_m, PS.degree), PS.coeffs[km])
        T = 0.5 * (Tp + Tm)
    else:
        raise ValueError(f"unknown face variant {variant!r}")
    return float(np.einsum("es,esij,esij->", weights, T, jt))


def projected_stress(u: DGFunction, cfg: DiscreteEnergyConfig) -> ElementField:
    """``P S(grad_h u)`` as a degree q-1 ElementField."""
    if u.q == 1:
        # stress of a piecewise-constant gradient is already in the target space
        return ElementField(u.mesh, 0, cfg.density.stress(broken_gradient(u).coeffs))
    rule = triangle_rule(min(cfg.tri_degree_for(u.q) + u.q - 1, 10))
    phi = basis_values(rule.points, u.q - 1)
    vals = cfg.density.stress(u.gradients_at(rule.points))
    rhs = np.einsum("p,pa,kpij->kaij", rule.weights, phi, vals)
    coeffs = np.einsum("ab,kbij->kaij", np.linalg.inv(reference_mass(u.q - 1)), rhs)
    return ElementField(u.mesh, u.q - 1, coeffs)


def _penalty_energy(u, cfg, eps):
    if cfg.penalty == "none":
        return 0.0
    return cfg.alpha * penalty(u, cfg, eps=eps)


# -- the functionals ----------------------------------------------------------


def energy_dg(u: DGFunction, cfg: DiscreteEnergyConfig, *, regularized: bool = False) -> float:
    """Bulk energy minus the ``S({grad u})`` face term plus ``alpha Pen`` minus the load."""
    eps = cfg.eps if regularized else 0.0
    return (
        _bulk(u, cfg)
        - face_term(u, cfg, "dg")
        + _penalty_energy(u, cfg, eps)
        + load_term(u, cfg.f)
    )


def energy_projected(u: DGFunction, cfg: DiscreteEnergyConfig, *, regularized: bool = False) -> float:
    """Like :func:`energy_dg` with the face term built from ``{P S(grad u)}``."""
    eps = cfg.eps if regularized else 0.0
    return (
        _bulk(u, cfg)
        - face_term(u, cfg, "projected")
        + _penalty_energy(u, cfg, eps)
        + load_term(u, cfg.f)
    )


def energy_compact(u: DGFunction, cfg: DiscreteEnergyConfig, *, regularized: bool = False) -> float:
    """``int [W(grad_h u) - R_h(u) : DW(grad_h u)] + alpha Pen`` for q = 1."""
    if u.q != 1:
        raise ValueError("the compact form is implemented for q = 1")
    eps = cfg.eps if regularized else 0.0
    mesh = u.mesh
    G = broken_gradient(u).constant_values
    R = lift(u, edge_degree=cfg.edge_degree_for(u.q)).constant_values
    W = cfg.density
    bulk = np.sum(mesh.areas * (W(G) - np.einsum("kij,kij->k", R, W.stress(G))))
    return float(bulk) + _penalty_energy(u, cfg, eps) + load_term(u, cfg.f)


def energy_lifting(u: DGFunction, cfg: DiscreteEnergyConfig, *, regularized: bool = False) -> float:
    """``int W(G_h(u)) + alpha Pen`` with the discrete gradient ``G_h``."""
    eps = cfg.eps if regularized else 0.0
    G = discrete_gradient(u, cfg.boundary_datum(u.n_components), include_boundary=cfg.lift_boundary)
    return _bulk(u, cfg, G) + _penalty_energy(u, cfg, eps) + load_term(u, cfg.f)


_DISPATCH = {
    "dg": energy_dg,
    "projected": energy_projected,
    "compact": energy_compact,
    "lifting": energy_lifting,
}


def energy(u: DGFunction, cfg: DiscreteEnergyConfig, *, regularized: bool = False) -> float:
    """Evaluate the energy selected by ``cfg.formulation``."""
    return _DISPATCH[cfg.formulation](u, cfg, regularized=regularized)


def continuous_energy(grad, mesh, density: EnergyDensity, degree: int = 8) -> float:
    """``int W(grad u)`` of a smooth map, given its gradient ``grad(x) -> (..., N, d)``."""
    rule = triangle_rule(degree)
    x0 = mesh.vertices[mesh.triangles[:, 0]]
    pts = x0[:, None, :] + np.einsum("kij,pj->kpi", mesh.jacobians, rule.points)
    vals = density(np.asarray(grad(pts), dtype=float))
    return float(np.sum(2.0 * mesh.areas * (vals @ rule.weights)))

