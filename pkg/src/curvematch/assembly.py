"""Global operator assembly and linear solves on the moving mesh.

The two velocity components decouple in the bilinear form, so the scalar
operator is assembled once per configuration and the vector system is two
solves against one factorization. Boundary conditions clamp every degree of
freedom attached to the outer square (values, gradients, edge moments, both
components) by zeroing rows/columns and putting ones on the diagonal.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._backend import get_backend
from .element import reference_element
from .errors import NotConverged, NotPositiveDefinite, ShapeMismatch
from .mesh import CurveLoop, Mesh, deformation_gradient
from .quadrature import edge_rule, triangle_rule


@dataclass(frozen=True)
class DofMap:
    """Scalar dof layout: per vertex (value, d/dx, d/dy), then one per edge."""

    num_vertices: int
    num_scalar: int
    num_vector: int
    cell_dofs: np.ndarray
    boundary_scalar: np.ndarray

    def vector_boundary(self) -> np.ndarray:
        out = np.empty(self.num_vector, dtype=bool)
        out[0::2] = self.boundary_scalar
        out[1::2] = self.boundary_scalar
        return out


def build_dofmap(mesh: Mesh) -> DofMap:
    nv, ne, nc = mesh.num_vertices, mesh.num_edges, mesh.num_cells
    ns = 3 * nv + ne
    cd = np.empty((nc, 12), dtype=np.int64)
    for k in range(3):
        cd[:, 3 * k : 3 * k + 3] = 3 * mesh.cells[:, k, None] + np.arange(3)
    cd[:, 9:12] = 3 * nv + mesh.cell_edges
    bnd = np.zeros(ns, dtype=bool)
    bv = np.flatnonzero(mesh.vertex_on_boundary)
    for j in range(3):
        bnd[3 * bv + j] = True
    bnd[3 * nv + np.flatnonzero(mesh.edge_on_boundary)] = True
    return DofMap(
        num_vertices=nv,
        num_scalar=ns,
        num_vector=2 * ns,
        cell_dofs=cd,
        boundary_scalar=bnd,
    )


@lru_cache(maxsize=2)
def _ref_tables(nq: int = 5):
    """Stacked reference derivative tables at the triangle rule points."""
    ref = reference_element(False)
    rule = triangle_rule(nq)
    t = ref.tabulate(rule.points, max_order=3)
    val = t[(0, 0)]
    grad = np.stack([t[(1, 0)], t[(0, 1)]])
    hess = np.empty((2, 2) + val.shape)
    hess[0, 0], hess[0, 1] = t[(2, 0)], t[(1, 1)]
    hess[1, 0], hess[1, 1] = t[(1, 1)], t[(0, 2)]
    third = np.empty((2, 2, 2) + val.shape)
    third[0, 0, 0] = t[(3, 0)]
    third[0, 0, 1] = third[0, 1, 0] = third[1, 0, 0] = t[(2, 1)]
    third[0, 1, 1] = third[1, 0, 1] = third[1, 1, 0] = t[(1, 2)]
    third[1, 1, 1] = t[(0, 3)]
    return val, grad, hess, third, rule.weights


@dataclass
class SparseOperator:
    """Assembled operator with boundary conditions applied.

    ``scalar`` acts on one velocity component; ``matrix`` is the interleaved
    two-component operator (built on demand).
    """

    scalar: sp.csr_matrix
    dofmap: DofMap
    alpha: float
    _vector: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def matrix(self) -> sp.csr_matrix:
        if self._vector is None:
            self._vector = sp.kron(self.scalar, sp.identity(2, format="csr"), format="csr")
        return self._vector

    def energy(self, x: np.ndarray) -> float:
        """Quadratic form 0.5 x^T A x for an interleaved vector field."""
        if x.shape != (self.dofmap.num_vector,):
            raise ShapeMismatch(f"expected {self.dofmap.num_vector} vector dofs")
        xe, xo = x[0::2], x[1::2]
        return 0.5 * float(xe @ (self.scalar @ xe) + xo @ (self.scalar @ xo))

    def write_coo(self, path: str) -> None:
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write("row,col,value\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r},{c},{float(v)!r}\n")


def assemble_operator(
    mesh: Mesh,
    coords: np.ndarray,
    dofmap: DofMap,
    alpha: float,
    clamp_boundary: bool = True,
) -> SparseOperator:
    """Assemble the scalar sixth-order operator in the given configuration."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    backend = get_backend()
    cell_coords = np.ascontiguousarray(coords[mesh.cells])
    M, Jinv, detJ = backend.cell_transforms(cell_coords)
    val, grad, hess, third, qw = _ref_tables()
    A = backend.element_matrices(M, Jinv, detJ, float(alpha), val, grad, hess, third, qw)

    rows = np.repeat(dofmap.cell_dofs, 12, axis=1).ravel()
    cols = np.tile(dofmap.cell_dofs, (1, 12)).ravel()
    mat = sp.coo_matrix((A.ravel(), (rows, cols)), shape=(dofmap.num_scalar,) * 2).tocsr()

    if clamp_boundary:
        free = (~dofmap.boundary_scalar).astype(np.float64)
        Df = sp.diags(free)
        Db = sp.diags(dofmap.boundary_scalar.astype(np.float64))
        mat = (Df @ mat @ Df + Db).tocsr()
    mat.sort_indices()
    return SparseOperator(scalar=mat, dofmap=dofmap, alpha=float(alpha))


@lru_cache(maxsize=1)
def _facet_value_tables():
    """Reference basis values along each directed local edge, keyed by
    the ordered local vertex pair."""
    ref = reference_element(False)
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    rule = edge_rule(4)
    tables = {}
    for la in range(3):
        for lb in range(3):
            if la == lb:
                continue
            pts = (1.0 - rule.points)[:, None] * verts[la] + rule.points[:, None] * verts[lb]
            tables[(la, lb)] = ref.tabulate(pts, max_order=0)[(0, 0)]
    return tables, rule.weights


def assemble_curve_rhs(
    mesh: Mesh,
    coords_t: np.ndarray,
    loop: CurveLoop,
    momentum: np.ndarray,
    dofmap: DofMap,
) -> np.ndarray:
    """Load vector of the curve momentum against the velocity test space.

    Per facet the density is constant: the averaged inverse-transpose
    deformation gradient of the two adjacent cells applied to the template
    normal, scaled by the facet momentum, integrated with the template
    facet length. Each adjacent cell receives half the load; the element
    traces are single-valued across the facet, so the total is exact.
    """
    momentum = np.asarray(momentum, dtype=np.float64)
    if momentum.shape != (loop.num_facets,):
        raise ShapeMismatch(f"momentum needs {loop.num_facets} facet values")
    backend = get_backend()
    tables, wq = _facet_value_tables()

    adj = mesh.edge_cells[loop.edge_ids]
    cells_needed = np.unique(adj.ravel())
    M, _, _ = backend.cell_transforms(np.ascontiguousarray(coords_t[mesh.cells[cells_needed]]))
    cell_index = {int(c): k for k, c in enumerate(cells_needed)}

    b = np.zeros(dofmap.num_vector)
    nf = loop.num_facets
    for f in range(nf):
        va = int(loop.vertex_ids[f])
        vb = int(loop.vertex_ids[(f + 1) % nf])
        F1 = deformation_gradient(mesh, coords_t, int(adj[f, 0]))
        F2 = deformation_gradient(mesh, coords_t, int(adj[f, 1]))
        Fbar = 0.5 * (F1 + F2)
        g = np.linalg.solve(Fbar.T, loop.normals0[f]) * momentum[f]
        w = 0.5 * loop.lengths0[f] * wq
        for side in (0, 1):
            K = int(adj[f, side])
            tri = list(mesh.cells[K])
            la, lb = tri.index(va), tri.index(vb)
            vals = M[cell_index[K]] @ tables[(la, lb)]
            contrib = vals @ w
            dofs = dofmap.cell_dofs[K]
            b[2 * dofs] += g[0] * contrib
            b[2 * dofs + 1] += g[1] * contrib
    b[dofmap.vector_boundary()] = 0.0
    return b


def solve_spd(op: SparseOperator, b: np.ndarray, rtol: float = 1.0e-12) -> np.ndarray:
    """Direct solve of the interleaved vector system.

    The convergence contract is normwise backward error
    ||r|| / (||A|| ||x|| + ||b||) <= rtol; one refinement pass is applied
    if the first solve misses it.
    """
    if b.shape != (op.dofmap.num_vector,):
        raise ShapeMismatch(f"rhs needs {op.dofmap.num_vector} entries")
    bnd = op.dofmap.boundary_scalar
    rhs = np.column_stack([b[0::2], b[1::2]])
    rhs[bnd] = 0.0
    bnorm = np.sqrt((rhs**2).sum())
    if bnorm == 0.0:
        return np.zeros_like(b)
    try:
        factor = spla.splu(op.scalar.tocsc())
        sol = factor.solve(rhs)
    except RuntimeError as exc:
        raise NotPositiveDefinite(f"factorization failed: {exc}") from exc
    if not np.isfinite(sol).all():
        raise NotPositiveDefinite("factorization produced non-finite values")
    anorm = np.abs(op.scalar).sum(axis=1).max()
    err = np.inf
    for _ in range(4):
        resid = rhs - op.scalar @ sol
        xnorm = np.sqrt((sol**2).sum())
        err = np.sqrt((resid**2).sum()) / (anorm * xnorm + bnorm)
        if err <= rtol:
            break
        sol = sol + factor.solve(resid)
    if err > rtol:
        raise NotConverged(f"backward error {err:.3e} exceeds {rtol:.1e}")
    x = np.empty_like(b)
    x[0::2] = sol[:, 0]
    x[1::2] = sol[:, 1]
    return x


# --- interpolation helpers (used by tests and diagnostics) -----------------


def interpolate_scalar(mesh: Mesh, coords: np.ndarray, dofmap: DofMap, value, grad, hess) -> np.ndarray:
    """Scalar dof vector of a smooth function given batched callables."""
    out = np.zeros(dofmap.num_scalar)
    out[0 : 3 * dofmap.num_vertices : 3] = value(coords)
    g = grad(coords)
    out[1 : 3 * dofmap.num_vertices : 3] = g[:, 0]
    out[2 : 3 * dofmap.num_vertices : 3] = g[:, 1]

    rule = edge_rule(4)
    pa = coords[mesh.edges[:, 0]]
    pb = coords[mesh.edges[:, 1]]
    d = pb - pa
    elen = np.hypot(d[:, 0], d[:, 1])
    t = d / elen[:, None]
    n = np.column_stack([t[:, 1], -t[:, 0]])
    pts = pa[:, None, :] * (1.0 - rule.points)[None, :, None] + pb[:, None, :] * rule.points[None, :, None]
    H = hess(pts.reshape(-1, 2)).reshape(mesh.num_edges, rule.npoints, 2, 2)
    hnn = (
        n[:, None, 0] * n[:, None, 0] * H[:, :, 0, 0]
        + 2.0 * n[:, None, 0] * n[:, None, 1] * H[:, :, 0, 1]
        + n[:, None, 1] * n[:, None, 1] * H[:, :, 1, 1]
    )
    out[3 * dofmap.num_vertices :] = (hnn @ rule.weights) * elen
    return out


def interpolate_vector(mesh: Mesh, coords: np.ndarray, dofmap: DofMap, comps) -> np.ndarray:
    """Interleaved vector dof array from two (value, grad, hess) triples."""
    out = np.empty(dofmap.num_vector)
    for c, (value, grad, hess) in enumerate(comps):
        out[c::2] = interpolate_scalar(mesh, coords, dofmap, value, grad, hess)
    return out
