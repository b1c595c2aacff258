"""Descent minimization of the discrete energies."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .energy import DiscreteEnergyConfig, energy
from .space import DGFunction, interpolate
from .mesh import Mesh
from .variation import P1Kernel, _tables

logger = logging.getLogger(__name__)

INITIAL_GUESSES = ("interpolated-boundary-datum", "zero", "given")
PRECONDITIONERS = ("none", "dg-laplacian")


@dataclass
class SolveOptions:
    """Iteration controls.

    ``lbfgs_memory = 0`` gives plain steepest descent with Armijo
    backtracking; a positive value enables the limited-memory BFGS
    direction with the same line search. ``preconditioner="dg-laplacian"``
    scales the directions with the inverse of a broken interior-penalty
    Laplacian, which removes the mesh-size dependence of the bulk part.
    """

    max_iter: int = 20000
    tol: float = 1e-5
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 60
    lbfgs_memory: int = 0
    preconditioner: str = "none"
    initial_guess: str = "interpolated-boundary-datum"
    log_every: int = 0
    divergence_bound: float = 1e8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.initial_guess not in INITIAL_GUESSES:
            raise ValueError(f"initial_guess must be one of {INITIAL_GUESSES}")
        if self.lbfgs_memory < 0:
            raise ValueError("lbfgs_memory must be >= 0")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"preconditioner must be one of {PRECONDITIONERS}")


@dataclass
class SolveReport:
    """Outcome of :func:`minimize`.

    ``energies`` is the history of the regularized objective; ``final_energy``
    is the unregularized energy of the returned field.
    """

    u: DGFunction
    iterations: int
    energies: list = field(default_factory=list)
    grad_norm: float = np.inf
    converged: bool = False
    reason: str = ""
    final_energy: float = np.nan


def initial_guess(mesh, cfg: DiscreteEnergyConfig, policy: str, n_components: int = 2, q: int = 1) -> DGFunction:
    if policy == "zero":
        return DGFunction.zeros(mesh, q, n_components)
    if policy == "interpolated-boundary-datum":
        return interpolate(cfg.boundary_datum(n_components), mesh, q, n_components)
    raise ValueError(f"cannot build an initial guess for policy {policy!r}")


def dg_laplacian(mesh: Mesh) -> sparse.csc_matrix:
    """Scalar P1 DG matrix: broken stiffness plus ``1/h_e`` jump penalty on all edges."""
    tab = _tables(mesh, 2)
    m = mesh.n_triangles
    dofs = np.arange(3 * m).reshape(m, 3)
    K = mesh.areas[:, None, None] * np.einsum("kad,kbd->kab", tab.dphi, tab.dphi)
    rows = [np.repeat(dofs, 3, axis=1).ravel()]
    cols = [np.tile(dofs, (1, 3)).ravel()]
    vals = [K.ravel()]
    scale = 1.0 / mesh.edge_lengths
    kp = mesh.edge_elements[:, 0]
    km = mesh.edge_elements[:, 1]
    # jump basis on each edge: plus-side functions then minus-side ones with a sign flip
    phi = np.concatenate([tab.phi_plus, -tab.phi_minus], axis=2)  # (E, S, 6)
    B = scale[:, None, None] * np.einsum("es,esa,esb->eab", tab.w, phi, phi)
    edofs = np.concatenate([dofs[kp], dofs[np.maximum(km, 0)]], axis=1)
    keep = np.ones((mesh.n_edges, 6), dtype=bool)
    keep[km < 0, 3:] = False
    mask = keep[:, :, None] & keep[:, None, :]
    rows.append(np.broadcast_to(edofs[:, :, None], B.shape)[mask])
    cols.append(np.broadcast_to(edofs[:, None, :], B.shape)[mask])
    vals.append(B[mask])
    A = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(3 * m, 3 * m)
    )
    return A.tocsc()


class _Preconditioner:
    def __init__(self, mesh: Mesh, n_components: int):
        self.lu = splu(dg_laplacian(mesh))
        self.N = n_components

    def __call__(self, v):
        return self.lu.solve(v.reshape(-1, self.N)).ravel()


def _two_loop(g, s_hist, y_hist, precond=None):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append((rho, a))
    if precond is None:
        r = q
        if s_hist:
            s, y = s_hist[-1], y_hist[-1]
            r = q * (np.dot(s, y) / np.dot(y, y))
    else:
        r = precond(q)
        if s_hist:
            s, y = s_hist[-1], y_hist[-1]
            r *= np.dot(s, y) / np.dot(y, precond(y))
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * np.dot(y, r)
        r += (a - b) * s
    return -r


def minimize(u_init: Optional[DGFunction], cfg: DiscreteEnergyConfig, opts: SolveOptions | None = None, *, mesh=None) -> SolveReport:
    """Minimize the configured energy over all DG coefficients.

    Stops when the largest entry of the assembled energy gradient drops
    below ``opts.tol``. Divergence (non-finite values, or a coefficient
    beyond ``opts.divergence_bound``) and line-search
    failure end the run with ``converged=False`` and a reason; they do not
    raise.
    """
    opts = SolveOptions() if opts is None else opts
    if u_init is None:
        if mesh is None:
            raise ValueError("need an initial field or a mesh")
        u_init = initial_guess(mesh, cfg, opts.initial_guess)
    if u_init.q != 1:
        raise ValueError("the solver supports q = 1 only")
    mesh, q, N = u_init.mesh, u_init.q, u_init.n_components

    def wrap(x):
        return DGFunction.from_vector(mesh, q, N, x)

    kernel = P1Kernel(mesh, cfg, N)
    precond = _Preconditioner(mesh, N) if opts.preconditioner != "none" else None

    # overflow during trial steps is expected; non-finite values are handled below
    def fun(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return kernel.energy(x, regularized=True)

    def jac(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return kernel.gradient(x).ravel()

    x = u_init.coeffs.ravel().copy()
    f = fun(x)
    g = jac(x)
    energies = [f]
    s_hist: deque = deque(maxlen=max(opts.lbfgs_memory, 1))
    y_hist: deque = deque(maxlen=max(opts.lbfgs_memory, 1))
    step = opts.initial_step
    reason = "max-iter"
    converged = False
    it = 0
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0

    while True:
        if not (np.isfinite(f) and np.all(np.isfinite(g))) or np.max(np.abs(x)) > opts.divergence_bound:
            reason = "diverged"
            break
        gnorm = float(np.max(np.abs(g)))
        if gnorm < opts.tol:
            converged = True
            reason = "tolerance"
            break
        if it >= opts.max_iter:
            break

        if opts.lbfgs_memory > 0 and s_hist:
            d = _two_loop(g, list(s_hist), list(y_hist), precond)
            t = 1.0
        else:
            d = -g if precond is None else -precond(g)
            t = step if opts.lbfgs_memory == 0 else min(1.0, 1.0 / max(np.max(np.abs(d)), 1e-300))
        slope = float(np.dot(g, d))
        if slope >= 0.0:
            s_hist.clear()
            y_hist.clear()
            d = -g
            slope = -float(np.dot(g, g))
            t = min(1.0, 1.0 / gnorm)

        for _ in range(opts.max_backtracks):
            x_new = x + t * d
            f_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f + opts.armijo * t * slope:
                break
            t *= opts.backtrack
        else:
            reason = "stalled"
            break

        g_new = jac(x_new)
        if opts.lbfgs_memory > 0:
            s_vec = x_new - x
            y_vec = g_new - g
            if np.dot(s_vec, y_vec) > 1e-12 * np.dot(y_vec, y_vec):
                s_hist.append(s_vec)
                y_hist.append(y_vec)
        else:
            step = t / opts.backtrack
        x, f, g = x_new, f_new, g_new
        energies.append(f)
        it += 1
        if opts.log_every and it % opts.log_every == 0:
            logger.info(
                "iteration=%d energy=%.12e grad_max=%.3e step=%.3e",
                it, f, float(np.max(np.abs(g))), t,
            )

    u = wrap(x)
    with np.errstate(over="ignore", invalid="ignore"):
        final = energy(u, cfg) if np.all(np.isfinite(x)) else np.nan
    logger.info(
        "done iterations=%d energy=%.12e grad_max=%.3e converged=%s reason=%s",
        it, final, gnorm, converged, reason,
    )
    return SolveReport(u, it, energies, gnorm, converged, reason, final)
