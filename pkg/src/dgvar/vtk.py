"""Legacy-VTK ASCII output for meshes and piecewise-linear DG fields."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh
from .space import DGFunction

VTK_TRIANGLE = 5


def _fmt(values) -> str:
    return "\n".join(" ".join(f"{v:.16g}" for v in np.atleast_1d(row)) for row in values)


def write_mesh(path, mesh: Mesh, cell_data: dict | None = None) -> None:
    """Write the mesh as an unstructured grid of triangles."""
    pts = np.column_stack([mesh.vertices, np.zeros(mesh.n_vertices)])
    _write(path, pts, mesh.triangles, cell_data or {}, {}, {})


def _pad3(values: np.ndarray) -> np.ndarray:
    out = np.zeros((len(values), 3))
    out[:, : min(values.shape[1], 3)] = values[:, :3]
    return out


def write_dg_field(path, u: DGFunction, cell_data: dict | None = None) -> None:
    """Write a DG field with duplicated vertices so every element keeps its own values.

    Cell data holds the per-element vector ``displacement`` (field minus
    the identity map at the centroid, zero-padded to 3D), the constant
    gradient ``grad_u`` and any extra scalars such as ``detF``. Point data
    ``corner_displacement`` holds the same quantity at the element corners.
    """
    mesh = u.mesh
    corners = mesh.vertices[mesh.triangles].reshape(-1, 2)
    pts = np.column_stack([corners, np.zeros(len(corners))])
    corner_vals = u.values_at(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).reshape(-1, u.n_components)
    centroid_vals = u.values_at(np.array([[1 / 3, 1 / 3]]))[:, 0]
    corner_disp = _pad3(corner_vals)
    cell_disp = _pad3(centroid_vals)
    if u.n_components == 2:
        corner_disp[:, :2] -= corners
        cell_disp[:, :2] -= mesh.centroids
    cells = np.arange(3 * mesh.n_triangles).reshape(-1, 3)
    grads = u.gradients_at(np.array([[1 / 3, 1 / 3]]))[:, 0]
    data = {"grad_u": grads.reshape(mesh.n_triangles, -1)}
    data.update(cell_data or {})
    _write(path, pts, cells, data, {"displacement": cell_disp}, {"corner_displacement": corner_disp})


def _write(path, points, cells, cell_data: dict, cell_vectors: dict, point_vectors: dict) -> None:
    n_cells = len(cells)
    lines = [
        "# vtk DataFile Version 3.0",
        "dgvar output",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(points)} double",
        _fmt(points),
        f"CELLS {n_cells} {4 * n_cells}",
        "\n".join(f"3 {a} {b} {c}" for a, b, c in cells),
        f"CELL_TYPES {n_cells}",
        "\n".join([str(VTK_TRIANGLE)] * n_cells),
    ]
    if cell_data or cell_vectors:
        lines.append(f"CELL_DATA {n_cells}")
        for name, values in cell_data.items():
            values = np.asarray(values, dtype=float).reshape(n_cells, -1)
            ncomp = values.shape[1]
            if ncomp > 4:
                # legacy SCALARS allow at most 4 components
                lines.append("FIELD FieldData 1")
                lines.append(f"{name} {ncomp} {n_cells} double")
            else:
                lines.append(f"SCALARS {name} double {ncomp}")
                lines.append("LOOKUP_TABLE default")
            lines.append(_fmt(values))
        for name, values in cell_vectors.items():
            lines.append(f"VECTORS {name} double")
            lines.append(_fmt(values))
    if point_vectors:
        lines.append(f"POINT_DATA {len(points)}")
        for name, values in point_vectors.items():
            lines.append(f"VECTORS {name} double")
            lines.append(_fmt(values))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
