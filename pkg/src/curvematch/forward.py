"""Geodesic shooting: velocity solves on the moving mesh drive the curve.

The template momentum stays fixed; its transport to the current
configuration is carried in closed form by the inverse-transpose
deformation gradient inside the curve load assembly. The drift diagnostic
re-integrates the transported covector with explicit Euler per cell and
reports the worst relative gap against the closed form, which shrinks
linearly with the step size.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import DofMap, assemble_curve_rhs, assemble_operator, solve_spd
from .errors import ShapeMismatch
from .mesh import CurveLoop, Mesh, curve_polygon, deformation_gradient, displace
from .raster import RasterField, RasterSpec, rasterize, smooth


@dataclass(frozen=True)
class ShootResult:
    coords: np.ndarray
    polygons: list
    kinetic: np.ndarray
    drift: float


@dataclass(frozen=True)
class Scenario:
    """Everything a forward evaluation needs besides the momentum."""

    mesh: Mesh
    loop: CurveLoop
    dofmap: DofMap
    alpha: float
    steps: int
    spec: RasterSpec


def vertex_velocities(dofmap: DofMap, x: np.ndarray) -> np.ndarray:
    """Velocity at the mesh vertices, read off the vertex value dofs."""
    ids = 6 * np.arange(dofmap.num_vertices)
    return np.column_stack([x[ids], x[ids + 1]])


def _cell_velocity_gradient(mesh: Mesh, coords: np.ndarray, v: np.ndarray, cell: int) -> np.ndarray:
    tri = mesh.cells[cell]
    Et = np.column_stack([coords[tri[1]] - coords[tri[0]], coords[tri[2]] - coords[tri[0]]])
    dU = np.column_stack([v[tri[1]] - v[tri[0]], v[tri[2]] - v[tri[0]]])
    return dU @ np.linalg.inv(Et)


def shoot(
    mesh: Mesh,
    loop: CurveLoop,
    dofmap: DofMap,
    p0: np.ndarray,
    alpha: float,
    steps: int,
    with_drift: bool = False,
) -> ShootResult:
    """Integrate the curve forward over unit time with explicit Euler."""
    p0 = np.asarray(p0, dtype=np.float64)
    if p0.shape != (loop.num_facets,):
        raise ShapeMismatch(f"momentum needs {loop.num_facets} facet values")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    dt = 1.0 / steps
    coords = mesh.vertices.copy()
    polygons = [curve_polygon(loop, coords)]
    kinetic = np.empty(steps)

    adj = mesh.edge_cells[loop.edge_ids]
    if with_drift:
        euler = (loop.normals0 * p0[:, None])[:, None, :].repeat(2, axis=1).copy()

    for k in range(steps):
        op = assemble_operator(mesh, coords, dofmap, alpha)
        b = assemble_curve_rhs(mesh, coords, loop, p0, dofmap)
        x = solve_spd(op, b)
        kinetic[k] = op.energy(x)
        v = vertex_velocities(dofmap, x)
        if with_drift:
            for f in range(loop.num_facets):
                for s in range(2):
                    Gu = _cell_velocity_gradient(mesh, coords, v, int(adj[f, s]))
                    euler[f, s] -= dt * (Gu.T @ euler[f, s])
        coords = displace(mesh, coords, v, dt)
        polygons.append(curve_polygon(loop, coords))

    drift = float("nan")
    if with_drift:
        worst = 0.0
        for f in range(loop.num_facets):
            closed = np.zeros(2)
            for s in range(2):
                F = deformation_gradient(mesh, coords, int(adj[f, s]))
                closed += 0.5 * np.linalg.solve(F.T, loop.normals0[f] * p0[f])
            approx = euler[f].mean(axis=0)
            rel = np.linalg.norm(closed - approx) / max(np.linalg.norm(closed), 1.0e-30)
            worst = max(worst, rel)
        drift = float(worst)

    return ShootResult(coords=coords, polygons=polygons, kinetic=kinetic, drift=drift)


def forward_operator(p0: np.ndarray, scenario: Scenario) -> RasterField:
    """Momentum to smoothed indicator of the final curve; pure in its inputs."""
    res = shoot(scenario.mesh, scenario.loop, scenario.dofmap, p0, scenario.alpha, scenario.steps)
    return smooth(rasterize(res.polygons[-1], scenario.spec))
