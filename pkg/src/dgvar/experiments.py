"""Homogeneous-deformation studies: alpha sweeps, error norms, det diagnostics."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .energy import DiscreteEnergyConfig, continuous_energy, density_from_name, energy
from .mesh import Mesh, refine_uniform, unit_square_with_triangles, build_structured_rect
from .quadrature import edge_rule, triangle_rule
from .solver import SolveOptions, minimize
from .space import DGFunction, affine_map, broken_gradient, edge_jumps, interpolate
from .vtk import write_dg_field

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "alpha", "n_triangles", "converged", "iterations", "energy",
    "err_L1", "err_W11", "det_min", "det_max",
]

# values from the text plus an extrapolated doubling grid
DEFAULT_ALPHAS = (20.0, 40.0, 80.0, 160.0, 320.0)
DEFAULT_RESOLUTIONS = (1024, 2048, 4096)


def error_norms(u: DGFunction, exact: Callable, exact_grad: Optional[Callable] = None, *, degree: int = 6):
    """Broken ``L1`` and ``W11`` distances between ``u`` and a smooth map.

    ``exact`` maps points (..., 2) to (..., N). ``exact_grad`` returns
    (..., N, 2); when omitted it is approximated by central differences.
    Returns ``(L1, W11)`` with ``W11 = L1 + sum_K int |grad u - grad exact|
    + sum_{interior e} int_e |[[u]]|``.
    """
    mesh = u.mesh
    if exact_grad is None:
        exact_grad = _fd_gradient(exact)
    rule = triangle_rule(degree)
    x0 = mesh.vertices[mesh.triangles[:, 0]]
    pts = x0[:, None, :] + np.einsum("kij,pj->kpi", mesh.jacobians, rule.points)
    uv = u.values_at(rule.points)
    ev = np.asarray(exact(pts), dtype=float).reshape(uv.shape)
    l1 = float(np.sum(2.0 * mesh.areas * (np.linalg.norm(uv - ev, axis=2) @ rule.weights)))

    gu = u.gradients_at(rule.points)
    ge = np.asarray(exact_grad(pts), dtype=float).reshape(gu.shape)
    grad_term = float(np.sum(2.0 * mesh.areas * (np.linalg.norm(gu - ge, axis=(2, 3)) @ rule.weights)))

    erule = edge_rule(max(2 * u.q, 4))
    jumps = edge_jumps(u, erule.points)
    inner = mesh.interior_edges
    jump_term = float(np.sum(mesh.edge_lengths[inner] * (np.linalg.norm(jumps[inner], axis=2) @ erule.weights)))
    return l1, l1 + grad_term + jump_term


def _fd_gradient(f, h=1e-6):
    def grad(x):
        x = np.asarray(x, dtype=float)
        cols = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
        return np.stack(cols, axis=-1)

    return grad


def det_grad_field(u: DGFunction) -> np.ndarray:
    """Per-element ``det grad u`` of a piecewise-linear planar map."""
    if u.q != 1:
        raise ValueError("det field needs q = 1")
    if u.n_components != 2:
        raise ValueError("det field needs N = d = 2")
    return np.linalg.det(broken_gradient(u).constant_values)


@dataclass
class Scenario:
    """One homogeneous-deformation study with boundary datum ``F0 x``, ``F0 = diag(1, 1 + beta)``."""

    density: str = "power:4"
    beta: float = 0.1
    penalty: str = "pen1"
    alphas: list = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    resolutions: list = field(default_factory=lambda: list(DEFAULT_RESOLUTIONS))
    formulation: str = "projected"
    tol: float = 1e-5
    max_iter: int = 50000
    lbfgs_memory: int = 10
    preconditioner: str = "dg-laplacian"
    smoothing: float = 3e-5
    initial_guess: str = "zero"
    output_dir: Optional[str] = None
    write_vtk: bool = False
    p: Optional[float] = None

    def __post_init__(self):
        if self.beta == -1.0:
            raise ValueError("beta = -1 gives a degenerate boundary map")
        dens = density_from_name(self.density)
        if self.p is not None and float(self.p) != dens.p:
            raise ValueError(f"p = {self.p} disagrees with density {self.density!r}")
        self.p = dens.p
        for n in self.resolutions:
            unit_square_with_triangles(int(n))  # raises for unsupported counts

    @property
    def F0(self) -> np.ndarray:
        return np.diag([1.0, 1.0 + self.beta])

    def energy_config(self, alpha: float) -> DiscreteEnergyConfig:
        return DiscreteEnergyConfig(
            density=density_from_name(self.density),
            formulation=self.formulation,
            penalty=self.penalty,
            alpha=float(alpha),
            u0=affine_map(self.F0),
            smoothing=self.smoothing,
        )

    def solve_options(self) -> SolveOptions:
        return SolveOptions(
            max_iter=self.max_iter,
            tol=self.tol,
            lbfgs_memory=self.lbfgs_memory,
            preconditioner=self.preconditioner,
            initial_guess=self.initial_guess,
        )

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        if "alpha_tol" in data:
            data["tol"] = data.pop("alpha_tol")
        if "vtk" in data:
            data["write_vtk"] = data.pop("vtk")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RunRow:
    alpha: float
    n_triangles: int
    converged: bool
    iterations: int
    energy: float
    err_L1: float
    err_W11: float
    det_min: float
    det_max: float
    reason: str = ""
    det: Optional[np.ndarray] = field(default=None, repr=False)

    def csv_row(self) -> list:
        return [
            f"{self.alpha:g}", self.n_triangles, int(self.converged), self.iterations,
            f"{self.energy:.12e}", f"{self.err_L1:.6e}", f"{self.err_W11:.6e}",
            f"{self.det_min:.12f}", f"{self.det_max:.12f}",
        ]


@dataclass
class RunRecord:
    scenario: Scenario
    rows: list = field(default_factory=list)

    def row(self, alpha: float, n_triangles: int) -> RunRow:
        for r in self.rows:
            if r.alpha == alpha and r.n_triangles == n_triangles:
                return r
        raise KeyError((alpha, n_triangles))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow(r.csv_row())


def run_single(scenario: Scenario, alpha: float, n_triangles: int, mesh: Mesh | None = None):
    """Minimize one (alpha, mesh) case; returns ``(RunRow, SolveReport)``."""
    mesh = unit_square_with_triangles(int(n_triangles)) if mesh is None else mesh
    cfg = scenario.energy_config(alpha)
    report = minimize(None, cfg, scenario.solve_options(), mesh=mesh)
    u = report.u
    F0 = scenario.F0
    exact = affine_map(F0)
    finite = bool(np.all(np.isfinite(u.coeffs)))
    if finite:
        l1, w11 = error_norms(u, exact, lambda x: np.broadcast_to(F0, np.shape(x)[:-1] + (2, 2)))
        det = det_grad_field(u)
    else:
        l1 = w11 = np.nan
        det = np.full(mesh.n_triangles, np.nan)
    row = RunRow(
        alpha=float(alpha),
        n_triangles=mesh.n_triangles,
        converged=report.converged,
        iterations=report.iterations,
        energy=report.final_energy,
        err_L1=l1,
        err_W11=w11,
        det_min=float(np.min(det)),
        det_max=float(np.max(det)),
        reason=report.reason,
        det=det,
    )
    logger.info(
        "alpha=%g n_triangles=%d converged=%s iterations=%d err_L1=%.3e err_W11=%.3e det_min=%.6f det_max=%.6f",
        alpha, mesh.n_triangles, report.converged, report.iterations, l1, w11, row.det_min, row.det_max,
    )
    return row, report


def run_scenario(scenario: Scenario, alphas=None, resolutions=None) -> RunRecord:
    """Run the (alpha x mesh) grid in fixed order; failures become flagged rows."""
    alphas = scenario.alphas if alphas is None else alphas
    resolutions = scenario.resolutions if resolutions is None else resolutions
    record = RunRecord(scenario)
    out = Path(scenario.output_dir) if scenario.output_dir else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for n in resolutions:
        mesh = unit_square_with_triangles(int(n))
        for alpha in alphas:
            row, report = run_single(scenario, alpha, n, mesh)
            record.rows.append(row)
            if out is not None and scenario.write_vtk and np.all(np.isfinite(report.u.coeffs)):
                write_dg_field(out / f"run_a{alpha:g}_n{n}.vtk", report.u, {"detF": row.det})
    if out is not None:
        record.write_csv(out / "results.csv")
    return record


def limsup_study(u_exact, grad_exact, density: str = "power:4", alpha: float = 20.0, penalty: str = "pen1",
                 n_refinements: int = 4, base=(2, 2), formulation: str = "projected"):
    """Discrete energies of nodal interpolants on successively refined meshes.

    The boundary datum is ``u_exact`` itself. The continuous energy is
    integrated with a degree-8 rule on the finest mesh. Returns
    ``(n_triangles, discrete_energies, continuous_energy)``.
    """
    dens = density_from_name(density)
    cfg = DiscreteEnergyConfig(density=dens, formulation=formulation, penalty=penalty, alpha=alpha, u0=u_exact)
    mesh = build_structured_rect(*base)
    sizes, values = [], []
    for level in range(n_refinements + 1):
        if level:
            mesh = refine_uniform(mesh)
        u = interpolate(u_exact, mesh, 1, 2)
        sizes.append(mesh.n_triangles)
        values.append(energy(u, cfg))
    exact = continuous_energy(grad_exact, mesh, dens, degree=8)
    return sizes, values, exact
