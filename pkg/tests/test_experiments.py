
import numpy as np
import pytest

from dgvar.experiments import CSV_COLUMNS, Scenario, det_grad_field, error_norms, limsup_study, run_scenario
from dgvar.space import affine_map, interpolate

from conftest import step_field

F0 = np.diag([1.0, 1.1])


def const_grad(F):
    return lambda x: np.broadcast_to(F, np.shape(x)[:-1] + F.shape)


def test_error_norm_examples(square8):
    u = interpolate(affine_map(F0), square8, 1, 2)
    l1, w11 = error_norms(u, affine_map(F0), const_grad(F0))
    assert l1 == pytest.approx(0.0, abs=1e-15) and w11 == pytest.approx(0.0, abs=1e-14)
    shifted = interpolate(affine_map(F0, [0.3, 0.0]), square8, 1, 2)
    l1, w11 = error_norms(shifted, affine_map(F0), const_grad(F0))
    assert l1 == pytest.approx(0.3, rel=1e-13) and w11 == pytest.approx(0.3, rel=1e-13)


def test_error_norms_step_field(square2):
    zero = lambda x: np.zeros(np.shape(x)[:-1] + (1,))
    l1, w11 = error_norms(step_field(square2), zero, lambda x: np.zeros(np.shape(x)[:-1] + (1, 2)))
    assert l1 == pytest.approx(0.5, rel=1e-14)
    assert w11 == pytest.approx(0.5 + np.sqrt(2.0), rel=1e-14)


def test_error_norms_fd_gradient_fallback(square8):
    f = lambda x: np.stack([x[..., 0] ** 2, x[..., 1]], axis=-1)
    u = interpolate(f, square8, 1, 2)
    exact_grad = lambda x: np.stack([np.stack([2 * x[..., 0], 0 * x[..., 0]], -1),
                                     np.stack([0 * x[..., 0], 1 + 0 * x[..., 0]], -1)], -2)
    a = error_norms(u, f, exact_grad)
    b = error_norms(u, f)
    np.testing.assert_allclose(a, b, rtol=1e-7)


def test_det_field(square8):
    assert np.allclose(det_grad_field(interpolate(affine_map(F0), square8, 1, 2)), 1.1)
    assert np.allclose(det_grad_field(interpolate(lambda x: x, square8, 1, 2)), 1.0)
    assert np.allclose(det_grad_field(interpolate(lambda x: x[..., ::-1], square8, 1, 2)), -1.0)
    with pytest.raises(ValueError):
        det_grad_field(step_field())


def test_scenario_from_dict():
    sc = Scenario.from_dict({"density": "power:6", "p": 6, "beta": -0.1, "alpha_tol": 1e-6,
                             "alphas": [20], "resolutions": [8], "formulation": "projected",
                             "output_dir": None, "penalty": "pen2"})
    assert sc.tol == 1e-6 and sc.p == 6.0
    np.testing.assert_allclose(sc.F0, np.diag([1.0, 0.9]))
    with pytest.raises(ValueError):
        Scenario.from_dict({"density": "power:4", "p": 6})
    with pytest.raises(ValueError):
        Scenario.from_dict({"beta": -1.0})
    with pytest.raises(ValueError):
        Scenario.from_dict({"resolutions": [2034]})
    with pytest.raises(ValueError):
        Scenario.from_dict({"colour": "red"})


def small_scenario(tmp_path, **kw):
    base = dict(alphas=[20.0, 160.0], resolutions=[8, 32], output_dir=str(tmp_path), penalty="pen2",
                initial_guess="interpolated-boundary-datum")
    base.update(kw)
    return Scenario(**base)


def test_run_scenario_grid_and_csv(tmp_path):
    sc = small_scenario(tmp_path / "a")
    rec = run_scenario(sc)
    assert [(r.n_triangles, r.alpha) for r in rec.rows] == [(8, 20.0), (8, 160.0), (32, 20.0), (32, 160.0)]
    lines = (tmp_path / "a" / "results.csv").read_text().splitlines()
    assert lines[0].split(",") == CSV_COLUMNS
    assert len(lines) == 5


def test_csv_is_deterministic(tmp_path):
    for name in ("a", "b"):
        run_scenario(small_scenario(tmp_path / name))
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_nonconvergence_is_a_row(tmp_path):
    sc = small_scenario(tmp_path, density="power:6", beta=-0.1, alphas=[20.0], resolutions=[128])
    rec = run_scenario(sc)
    row = rec.rows[0]
    assert not row.converged
    assert (tmp_path / "results.csv").exists()


def test_vtk_written(tmp_path):
    sc = small_scenario(tmp_path, alphas=[160.0], resolutions=[8], write_vtk=True)
    run_scenario(sc)
    text = (tmp_path / "run_a160_n8.vtk").read_text()
    assert "SCALARS detF double 1" in text and "VECTORS displacement double" in text


def test_limsup_decreasing():
    u = lambda x: np.stack([x[..., 0] + 0.1 * x[..., 0] ** 2, x[..., 1] + 0.1 * x[..., 1] ** 2], axis=-1)

    def g(x):
        out = np.zeros(np.shape(x)[:-1] + (2, 2))
        out[..., 0, 0] = 1 + 0.2 * x[..., 0]
        out[..., 1, 1] = 1 + 0.2 * x[..., 1]
        return out

    sizes, values, exact = limsup_study(u, g, n_refinements=3)
    assert sizes == [8, 32, 128, 512]
    errs = np.abs(np.array(values) - exact)
    assert np.all(np.diff(errs) < 0)
