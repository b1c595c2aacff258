import os

# the runtime criterion is stated for a single thread
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from dgvar.mesh import build_structured_rect  # noqa: E402
from dgvar.space import DGFunction, interpolate  # noqa: E402

ACCEPTANCE = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


def step_field(mesh=None):
    """Scalar P1 field: 1 on the lower-right triangle, 0 on the upper-left one."""
    mesh = build_structured_rect(1, 1) if mesh is None else mesh
    coeffs = np.zeros((2, 3, 1))
    coeffs[0] = 1.0
    return DGFunction(mesh, 1, coeffs)


def random_field(mesh, rng, n_components=2, amplitude=1.0, around_identity=False):
    base = np.zeros((mesh.n_triangles, 3, n_components))
    if around_identity:
        base = interpolate(lambda x: x, mesh, 1, 2).coeffs
    return DGFunction(mesh, 1, base + amplitude * rng.standard_normal(base.shape))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def square2():
    return build_structured_rect(1, 1)


@pytest.fixture
def square8():
    return build_structured_rect(2, 2)
