"""Facet momenta: synthetic families, the weighted norm, and CSV io.

A momentum is one scalar per curve facet, interpreted as the normal
component of the initial covector density on the template curve. The
synthetic families are evaluated at template facet midpoints.
"""

import numpy as np

from .errors import ShapeMismatch
from .mesh import CurveLoop


def facet_midpoints(loop: CurveLoop, coords: np.ndarray) -> np.ndarray:
    a = coords[loop.vertex_ids]
    b = coords[np.roll(loop.vertex_ids, -1)]
    return 0.5 * (a + b)


def _contract(pts):
    return np.full(len(pts), -1.38 * np.pi)


def _squeeze(pts):
    x, y = pts[:, 0], pts[:, 1]
    left = 0.83 * np.pi * np.exp(-(y**2) / 5.0)
    right = (5.0 / 3.0) * np.pi * np.sin(x / 5.0) * np.abs(y)
    return np.where(x < -0.3, left, right)


def _star(pts):
    return 2.6 * np.pi * np.cos(2.0 * np.pi * pts[:, 0] / 5.0)


def _teardrop(pts):
    x, y = pts[:, 0], pts[:, 1]
    return np.where(y < 0.0, -3.0 * np.pi * np.sign(y), 3.0 * np.pi * np.exp(-(x**2) / 5.0))


SYNTHETIC = {
    "contract": _contract,
    "squeeze": _squeeze,
    "star": _star,
    "teardrop": _teardrop,
}


def synthetic_momentum(name: str, loop: CurveLoop, coords: np.ndarray) -> np.ndarray:
    """Evaluate a named synthetic family at the template facet midpoints."""
    try:
        fn = SYNTHETIC[name]
    except KeyError:
        raise ValueError(f"unknown momentum family {name!r}; choose from {sorted(SYNTHETIC)}") from None
    return fn(facet_midpoints(loop, coords))


def momentum_norm(loop: CurveLoop, p: np.ndarray) -> float:
    """Discrete curve norm sqrt(sum_f L0_f p_f^2)."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (loop.num_facets,):
        raise ShapeMismatch(f"momentum needs {loop.num_facets} facet values")
    return float(np.sqrt(np.sum(loop.lengths0 * p * p)))


def write_momentum_csv(path: str, p: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("facet,p\n")
        for i, v in enumerate(p):
            fh.write(f"{i},{float(v)!r}\n")


def read_momentum_csv(path: str) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "facet,p":
            raise ValueError(f"unexpected momentum header {header!r}")
        vals = [float(line.split(",")[1]) for line in fh if line.strip()]
    return np.array(vals, dtype=np.float64)
