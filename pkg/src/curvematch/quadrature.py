"""Quadrature rules on the reference triangle and the unit interval.

The triangle rule is a conical product: Gauss-Legendre along the collapsed
direction times Gauss-Jacobi with weight (1 - v), so an n x n rule integrates
total degree 2n - 1 exactly. No hardcoded point tables.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights; ``points`` is (n, 2) on the triangle, (n,) on [0, 1]."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def npoints(self) -> int:
        return self.weights.shape[0]


@lru_cache(maxsize=None)
def triangle_rule(n: int = 5) -> QuadratureRule:
    """Conical product rule on {x >= 0, y >= 0, x + y <= 1}, exact to degree 2n - 1.

    The default n = 5 (25 points) integrates degree 9, which covers the
    degree-8 products arising from the sixth-order bilinear form.
    """
    xu, wu = roots_legendre(n)
    xv, wv = roots_jacobi(n, 1.0, 0.0)
    u = (xu + 1.0) / 2.0
    v = (xv + 1.0) / 2.0
    # x = u (1 - v), y = v; |d(x, y)/d(u, v)| = 1 - v is absorbed by the Jacobi weight
    uu, vv = np.meshgrid(u, v, indexing="ij")
    pts = np.column_stack([(uu * (1.0 - vv)).ravel(), vv.ravel()])
    w = ((wu / 2.0)[:, None] * (wv / 4.0)[None, :]).ravel()
    return QuadratureRule(points=pts, weights=w)


@lru_cache(maxsize=None)
def edge_rule(n: int = 4) -> QuadratureRule:
    """Gauss-Legendre on [0, 1]; weights sum to 1, exact to degree 2n - 1."""
    x, w = roots_legendre(n)
    return QuadratureRule(points=(x + 1.0) / 2.0, weights=w / 2.0)
