import numpy as np
import pytest

from dgvar.energy import DiscreteEnergyConfig, energy
from dgvar.mesh import build_structured_rect, unit_square_with_triangles
from dgvar.solver import SolveOptions, dg_laplacian, initial_guess, minimize
from dgvar.space import DGFunction, affine_map, interpolate
from dgvar.variation import gradient

F0 = np.diag([1.0, 1.1])


def quadratic_minimizer(mesh, cfg):
    """Direct solve of the stationarity system of a quadratic energy."""
    zero = DGFunction.zeros(mesh)
    g0 = gradient(zero, cfg).ravel()
    n = g0.size
    A = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        A[:, i] = gradient(DGFunction.from_vector(mesh, 1, 2, e), cfg).ravel() - g0
    return np.linalg.solve(A, -g0)


@pytest.mark.parametrize("memory,precond,tol,atol", [
    (0, "none", 1e-6, 1e-4), (10, "none", 1e-9, 1e-7), (10, "dg-laplacian", 1e-9, 1e-7),
])
def test_quadratic_problem_matches_direct_solve(memory, precond, tol, atol):
    mesh = build_structured_rect(3, 3)
    u0 = lambda x: np.stack([np.sin(x[..., 0]), x[..., 0] * x[..., 1]], axis=-1)
    cfg = DiscreteEnergyConfig(density="dirichlet", formulation="dg", penalty="pen2", alpha=5.0, u0=u0, smoothing=0.0)
    x_star = quadratic_minimizer(mesh, cfg)
    opts = SolveOptions(tol=tol, max_iter=50000, lbfgs_memory=memory, preconditioner=precond, initial_guess="zero")
    rep = minimize(None, cfg, opts, mesh=mesh)
    assert rep.converged and rep.reason == "tolerance"
    np.testing.assert_allclose(rep.u.ravel(), x_star, atol=atol)
    assert np.all(np.diff(rep.energies) <= 1e-12 * np.abs(rep.energies[:-1]))


def test_patch_start_stays_put():
    # the interpolant of the datum is a minimizer of the unsmoothed energy; smoothing moves it only slightly
    mesh = unit_square_with_triangles(128)
    cfg = DiscreteEnergyConfig(density="power:4", u0=affine_map(F0))
    u = interpolate(affine_map(F0), mesh, 1, 2)
    rep = minimize(u, cfg, SolveOptions(lbfgs_memory=10, preconditioner="dg-laplacian"))
    assert rep.converged
    assert np.max(np.abs(rep.u.coeffs - u.coeffs)) < 1e-4
    assert rep.final_energy == pytest.approx(4.8841, abs=1e-3)


def test_divergence_is_reported_not_raised():
    mesh = unit_square_with_triangles(128)
    cfg = DiscreteEnergyConfig(density="power:6", penalty="pen2", alpha=20.0, u0=affine_map(np.diag([1.0, 0.9])))
    rep = minimize(None, cfg, SolveOptions(lbfgs_memory=10, preconditioner="dg-laplacian"), mesh=mesh)
    assert not rep.converged
    assert rep.reason in ("diverged", "stalled")


def test_max_iter_flag():
    mesh = build_structured_rect(4, 4)
    cfg = DiscreteEnergyConfig(density="power:4", u0=affine_map(F0))
    rep = minimize(None, cfg, SolveOptions(max_iter=3, initial_guess="zero"), mesh=mesh)
    assert rep.iterations == 3 and not rep.converged and rep.reason == "max-iter"
    assert rep.final_energy == pytest.approx(energy(rep.u, cfg))


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(tol=0.0)
    with pytest.raises(ValueError):
        SolveOptions(backtrack=1.0)
    with pytest.raises(ValueError):
        SolveOptions(initial_guess="random")
    with pytest.raises(ValueError):
        SolveOptions(preconditioner="ilu")
    with pytest.raises(ValueError):
        minimize(None, DiscreteEnergyConfig())


def test_initial_guess_policies(square8):
    cfg = DiscreteEnergyConfig(u0=affine_map(F0))
    np.testing.assert_allclose(initial_guess(square8, cfg, "zero").coeffs, 0.0)
    np.testing.assert_allclose(initial_guess(square8, cfg, "interpolated-boundary-datum").coeffs,
                               interpolate(affine_map(F0), square8, 1, 2).coeffs)
    with pytest.raises(ValueError):
        initial_guess(square8, cfg, "given")


def test_dg_laplacian_is_spd(square8):
    A = dg_laplacian(square8).toarray()
    np.testing.assert_allclose(A, A.T, atol=1e-13)
    assert np.linalg.eigvalsh(A).min() > 0
