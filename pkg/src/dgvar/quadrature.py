"""Gauss rules on the reference triangle and the unit interval."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_TRIANGLE_DEGREE = 10
MAX_EDGE_DEGREE = 12


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points and weights of a reference rule.

    For triangle rules ``points`` has shape (n, 2) in reference coordinates
    of {x, y >= 0, x + y <= 1} and the weights sum to 1/2. For edge rules
    ``points`` has shape (n,) on [0, 1] and the weights sum to 1.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)

    @property
    def barycentric(self) -> np.ndarray:
        """Barycentric coordinates (n, 3) of a triangle rule."""
        x, y = self.points[:, 0], self.points[:, 1]
        return np.column_stack([1.0 - x - y, x, y])


def _gauss_legendre_01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials up to ``degree``."""
    if int(degree) != degree or not 0 <= degree <= MAX_EDGE_DEGREE:
        raise ValueError(f"edge rule degree must be in [0, {MAX_EDGE_DEGREE}], got {degree}")
    n = int(degree) // 2 + 1
    s, w = _gauss_legendre_01(n)
    s.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(s, w, int(degree))


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss product rule exact up to ``degree``.

    The square [0, 1]^2 is mapped onto the triangle by x = u, y = v (1 - u).
    The Jacobian adds one degree in ``u``, so that direction takes one more
    point when needed. All weights are positive.
    """
    if int(degree) != degree or not 0 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(
            f"triangle rule degree must be in [0, {MAX_TRIANGLE_DEGREE}], got {degree}"
        )
    degree = int(degree)
    if degree <= 1:
        pts = np.array([[1.0 / 3.0, 1.0 / 3.0]])
        wts = np.array([0.5])
    else:
        nu = (degree + 1) // 2 + 1
        nv = degree // 2 + 1
        u, wu = _gauss_legendre_01(nu)
        v, wv = _gauss_legendre_01(nv)
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
        wts = (np.outer(wu * (1.0 - u), wv)).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)


def default_edge_degree(p: float, q: int = 1) -> int:
    """Edge rule degree for integrands like ``|[[u]]|^p`` with degree-``q`` traces.

    Exact for even integer ``p``; otherwise a fixed degree-10 rule is used,
    which is only approximate.
    """
    if float(p).is_integer() and int(p) % 2 == 0:
        return min(max(2 * q, int(p) * q), MAX_EDGE_DEGREE)
    return 10


def default_triangle_degree(p: float, q: int = 1) -> int:
    if q == 1:
        return 2
    if float(p).is_integer() and int(p) % 2 == 0:
        return min(max(2, int(p) * (q - 1)), MAX_TRIANGLE_DEGREE)
    return MAX_TRIANGLE_DEGREE
