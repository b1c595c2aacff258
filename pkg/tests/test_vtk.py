import numpy as np

from dgvar.space import affine_map, interpolate
from dgvar.vtk import write_dg_field, write_mesh


def parse_sections(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0" and lines[2] == "ASCII"
    return lines


def test_mesh_file(tmp_path, square8):
    write_mesh(tmp_path / "m.vtk", square8, {"area": square8.areas})
    lines = parse_sections(tmp_path / "m.vtk")
    assert "POINTS 9 double" in lines
    assert "CELLS 8 32" in lines and "CELL_TYPES 8" in lines
    i = lines.index("SCALARS area double 1")
    np.testing.assert_allclose([float(v) for v in lines[i + 2:i + 10]], square8.areas)


def test_dg_field_file(tmp_path, square8):
    F = np.diag([1.0, 1.1])
    u = interpolate(affine_map(F), square8, 1, 2)
    det = np.full(8, 1.1)
    write_dg_field(tmp_path / "u.vtk", u, {"detF": det})
    lines = parse_sections(tmp_path / "u.vtk")
    assert "POINTS 24 double" in lines and "CELL_DATA 8" in lines
    i = lines.index("SCALARS detF double 1")
    np.testing.assert_allclose([float(v) for v in lines[i + 2:i + 10]], det)
    i = lines.index("VECTORS displacement double")
    disp = np.array([[float(t) for t in row.split()] for row in lines[i + 1:i + 9]])
    # displacement at the centroid is (F - I) x_c
    np.testing.assert_allclose(disp[:, :2], square8.centroids @ (F - np.eye(2)).T, atol=1e-14)
    np.testing.assert_allclose(disp[:, 2], 0.0)
    assert "POINT_DATA 24" in lines
