"""Nonconforming triangular element for sixth-order operators.

The local space is cubics enriched with two bubble-times-linear functions
(12 degrees of freedom: vertex values, vertex gradients, and one averaged
second normal moment per edge). The robust variant adds bubble-squared
enrichment and first normal moments (15 degrees of freedom).

The element is not affine-equivalent: mapping reference basis functions
through the geometry does not reproduce the physical node set, so each cell
carries a correction matrix ``V`` (and ``M = V.T``) built from the edge
frames. ``transform`` assembles ``V`` from its three published factors and
``verify_duality`` checks ``n_i(psi_j) = delta_ij`` directly.

Conventions used throughout: reference vertices (0,0), (1,0), (0,1); local
edge ``i`` is opposite vertex ``i`` and runs between the canonical vertex
pair ``EDGE_VERTICES[i]``; ``J`` is the reference-to-physical Jacobian with
the vertex-difference vectors as columns; normals are tangents rotated
clockwise (``n = (t_y, -t_x)``).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DualityFailure, IllConditioned, PointOutsideCell, SingularCell
from .quadrature import edge_rule

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# local edge i sits opposite local vertex i
EDGE_VERTICES = ((1, 2), (0, 2), (0, 1))

_COND_LIMIT = 1.0e12

# derivative multi-indices grouped by order
DERIV_ORDERS = {
    0: ((0, 0),),
    1: ((1, 0), (0, 1)),
    2: ((2, 0), (1, 1), (0, 2)),
    3: ((3, 0), (2, 1), (1, 2), (0, 3)),
}


# --- small dense polynomial helpers (coefficient arrays c[i, j] x^i y^j) --


def _pmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i, j in zip(*np.nonzero(a)):
        out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
    return out


def _padd(a: np.ndarray, b: np.ndarray, sb: float = 1.0) -> np.ndarray:
    """a + sb * b with zero padding (plain numpy broadcasting would be wrong)."""
    out = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])))
    out[: a.shape[0], : a.shape[1]] = a
    out[: b.shape[0], : b.shape[1]] += sb * b
    return out


def _pdiff(c: np.ndarray, ix: int, iy: int) -> np.ndarray:
    for _ in range(ix):
        c = c[1:, :] * np.arange(1, c.shape[0])[:, None]
    for _ in range(iy):
        c = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
    if c.size == 0:
        c = np.zeros((1, 1))
    return c


def _mono(i: int, j: int) -> np.ndarray:
    c = np.zeros((i + 1, j + 1))
    c[i, j] = 1.0
    return c


def _peval_stack(coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Evaluate a stack (k, dx, dy) of coefficient arrays at pts (n, 2)."""
    dx, dy = coeffs.shape[1], coeffs.shape[2]
    px = pts[:, 0][None, :] ** np.arange(dx)[:, None]
    py = pts[:, 1][None, :] ** np.arange(dy)[:, None]
    return np.einsum("kab,an,bn->kn", coeffs, px, py)


def edge_frames(coords: np.ndarray, signs=None):
    """Edge lengths, unit tangents, unit normals for a vertex triple (3, 2).

    Tangents follow the canonical vertex pairs; ``signs`` (three of +-1)
    flips individual edge frames, which must not change any assembled
    quantity for the standard element.
    """
    lengths = np.empty(3)
    tangents = np.empty((3, 2))
    for i, (a, b) in enumerate(EDGE_VERTICES):
        d = coords[b] - coords[a]
        lengths[i] = np.hypot(d[0], d[1])
        tangents[i] = d / lengths[i]
    if signs is not None:
        tangents = tangents * np.asarray(signs, dtype=float)[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    return lengths, tangents, normals


_REF_EDGE_LEN, _REF_EDGE_TAN, _REF_EDGE_NRM = edge_frames(REF_VERTICES)


class ReferenceElement:
    """Basis on the reference triangle, dual to the averaged node set.

    Parameters
    ----------
    robust : bool
        If True, build the 15-dof variant with first normal moments and
        bubble-squared enrichment.
    """

    def __init__(self, robust: bool = False):
        self.robust = robust
        x, y = _mono(1, 0), _mono(0, 1)
        bubble = _pmul(_pmul(_padd(_padd(_mono(0, 0), x, -1.0), y, -1.0), x), y)
        span = [
            _mono(0, 0), x, y,
            _mono(2, 0), _mono(1, 1), _mono(0, 2),
            _mono(3, 0), _mono(2, 1), _mono(1, 2), _mono(0, 3),
            _pmul(bubble, x), _pmul(bubble, y),
        ]
        if robust:
            b2 = _pmul(bubble, bubble)
            span += [b2, _pmul(b2, x), _pmul(b2, y)]
        self.ndof = len(span)
        deg = max(max(c.shape) for c in span)
        padded = np.zeros((self.ndof, deg, deg))
        for k, c in enumerate(span):
            padded[k, : c.shape[0], : c.shape[1]] = c

        B = np.array([self._apply_ref_nodes(padded[k]) for k in range(self.ndof)]).T
        cond = np.linalg.cond(B)
        if cond > _COND_LIMIT:
            raise IllConditioned(f"reference node matrix condition {cond:.3e}")
        C = np.linalg.inv(B)
        self.coeffs = np.einsum("jk,jab->kab", C, padded)
        self._deriv_cache: dict[tuple[int, int], np.ndarray] = {}

    def _apply_ref_nodes(self, c: np.ndarray) -> np.ndarray:
        """All reference node functionals applied to one polynomial."""
        rule = edge_rule(4)
        cx, cy = _pdiff(c, 1, 0), _pdiff(c, 0, 1)
        cxx, cxy, cyy = _pdiff(c, 2, 0), _pdiff(c, 1, 1), _pdiff(c, 0, 2)

        def ev(cc, pts):
            return _peval_stack(cc[None], pts)[0]

        out = []
        for v in REF_VERTICES:
            p = v[None, :]
            out += [ev(c, p)[0], ev(cx, p)[0], ev(cy, p)[0]]
        moment1, moment2 = [], []
        for i, (a, b) in enumerate(EDGE_VERTICES):
            pts = (1.0 - rule.points)[:, None] * REF_VERTICES[a] + rule.points[:, None] * REF_VERTICES[b]
            n = _REF_EDGE_NRM[i]
            # averaged moments: weights already sum to one along the edge
            hnn = (
                n[0] * n[0] * ev(cxx, pts)
                + 2.0 * n[0] * n[1] * ev(cxy, pts)
                + n[1] * n[1] * ev(cyy, pts)
            )
            moment2.append(float(rule.weights @ hnn))
            if self.robust:
                gn = n[0] * ev(cx, pts) + n[1] * ev(cy, pts)
                moment1.append(float(rule.weights @ gn))
        return np.array(out + moment1 + moment2)

    def tabulate(self, points: np.ndarray, max_order: int = 0) -> dict:
        """Derivative tables {(ix, iy): (ndof, npts)} up to ``max_order``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tables = {}
        for order in range(max_order + 1):
            for ix, iy in DERIV_ORDERS[order]:
                cc = self._deriv_cache.get((ix, iy))
                if cc is None:
                    cc = np.stack([_pdiff(self.coeffs[k], ix, iy) for k in range(self.ndof)])
                    self._deriv_cache[(ix, iy)] = cc
                tables[(ix, iy)] = _peval_stack(cc, points)
        return tables


@lru_cache(maxsize=4)
def reference_element(robust: bool = False) -> ReferenceElement:
    return ReferenceElement(robust=robust)


@dataclass(frozen=True)
class CellGeometry:
    """Affine geometry of one triangle plus its edge frames.

    ``edge_signs`` records whether each frame follows the canonical vertex
    order (+1) or its reverse (-1); endpoint-difference formulas depend on it.
    """

    coords: np.ndarray
    J: np.ndarray
    Jinv: np.ndarray
    detJ: float
    edge_len: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    edge_signs: np.ndarray

    @property
    def area(self) -> float:
        return 0.5 * self.detJ


def cell_geometry(coords: np.ndarray, edge_signs=None) -> CellGeometry:
    """Build CellGeometry from vertex coordinates (3, 2), CCW order required."""
    coords = np.asarray(coords, dtype=float)
    J = np.column_stack([coords[1] - coords[0], coords[2] - coords[0]])
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    scale = max(np.abs(J).max(), 1.0e-300) ** 2
    if det <= 1.0e-14 * scale:
        raise SingularCell(f"cell Jacobian determinant {det:.3e}")
    Jinv = np.array([[J[1, 1], -J[0, 1]], [-J[1, 0], J[0, 0]]]) / det
    lengths, tangents, normals = edge_frames(coords, edge_signs)
    signs = np.ones(3) if edge_signs is None else np.asarray(edge_signs, dtype=float)
    return CellGeometry(
        coords=coords, J=J, Jinv=Jinv, detJ=det,
        edge_len=lengths, tangents=tangents, normals=normals, edge_signs=signs,
    )


@dataclass(frozen=True)
class TransformMatrices:
    """Factors of the node-matching map for one cell.

    ``V`` maps pulled-back physical nodes to reference nodes; ``M = V.T``
    gives the physical basis as combinations of mapped reference functions.
    ``V = E @ VC @ D``: ``D`` completes the physical node set along edges,
    ``VC`` converts completed physical nodes to completed reference nodes,
    ``E`` selects the actual reference nodes.
    """

    V: np.ndarray
    M: np.ndarray
    D: np.ndarray
    VC: np.ndarray
    E: np.ndarray
    B1: np.ndarray | None
    B2: np.ndarray


def _sym2(A: np.ndarray) -> np.ndarray:
    """3x3 action on stacked symmetric 2x2 entries: Sym2(A) vec(H) = vec(A^T H A)
    with vec(H) = (H11, H12, H22)."""
    a, b = A[0, 0], A[0, 1]
    c, d = A[1, 0], A[1, 1]
    return np.array(
        [
            [a * a, 2.0 * a * c, c * c],
            [a * b, a * d + c * b, c * d],
            [b * b, 2.0 * b * d, d * d],
        ]
    )


def transform(ref: ReferenceElement, geom: CellGeometry) -> TransformMatrices:
    """Node-matching matrices for one cell."""
    nd = ref.ndof
    robust = ref.robust
    ncomp = 24 if robust else 18
    JT = geom.J.T

    # B2[i]: averaged reference second moments of edge i in terms of the
    # cell's un-averaged physical moment triple (nn, nt, tt)
    B2 = np.empty((3, 3, 3))
    B1 = np.empty((3, 2, 2)) if robust else None
    for i in range(3):
        G = np.vstack([geom.normals[i], geom.tangents[i]])
        Ghat = np.vstack([_REF_EDGE_NRM[i], _REF_EDGE_TAN[i]])
        B2[i] = _sym2(G @ geom.J @ Ghat.T) / geom.edge_len[i]
        if robust:
            B1[i] = Ghat @ JT @ G.T / geom.edge_len[i]

    # D: completed physical nodes out of the actual ones (edge integrals of
    # tangential derivatives collapse to endpoint differences)
    # endpoint pairs ordered along each edge's +t direction
    ends = [(a, b) if geom.edge_signs[i] > 0 else (b, a) for i, (a, b) in enumerate(EDGE_VERTICES)]

    D = np.zeros((ncomp, nd))
    D[:9, :9] = np.eye(9)
    row = 9
    if robust:
        for i, (a, b) in enumerate(ends):
            D[row, 9 + i] = 1.0  # first normal moment is a real dof
            D[row + 1, 3 * b] = 1.0
            D[row + 1, 3 * a] = -1.0
            row += 2
    m2_col = 12 if robust else 9
    for i, (a, b) in enumerate(ends):
        n, t = geom.normals[i], geom.tangents[i]
        D[row, m2_col + i] = 1.0
        D[row + 1, 3 * b + 1 : 3 * b + 3] = n
        D[row + 1, 3 * a + 1 : 3 * a + 3] = -n
        D[row + 2, 3 * b + 1 : 3 * b + 3] = t
        D[row + 2, 3 * a + 1 : 3 * a + 3] = -t
        row += 3

    VC = np.zeros((ncomp, ncomp))
    for k in range(3):
        VC[3 * k, 3 * k] = 1.0
        VC[3 * k + 1 : 3 * k + 3, 3 * k + 1 : 3 * k + 3] = JT
    pos = 9
    if robust:
        for i in range(3):
            VC[pos : pos + 2, pos : pos + 2] = B1[i]
            pos += 2
    for i in range(3):
        VC[pos : pos + 3, pos : pos + 3] = B2[i]
        pos += 3

    E = np.zeros((nd, ncomp))
    E[:9, :9] = np.eye(9)
    if robust:
        for i in range(3):
            E[9 + i, 9 + 2 * i] = 1.0
            E[12 + i, 15 + 3 * i] = 1.0
    else:
        for i in range(3):
            E[9 + i, 9 + 3 * i] = 1.0

    V = E @ VC @ D
    return TransformMatrices(V=V, M=V.T, D=D, VC=VC, E=E, B1=B1, B2=B2)


def locate(geom: CellGeometry, points: np.ndarray, tol: float = 1.0e-10) -> np.ndarray:
    """Map physical points (n, 2) to reference coordinates; error if outside."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    ref = (points - geom.coords[0]) @ geom.Jinv.T
    lam = np.column_stack([1.0 - ref.sum(axis=1), ref])
    if (lam < -tol).any():
        raise PointOutsideCell(f"barycentric minimum {lam.min():.3e}")
    return ref


def physical_tabulate(
    ref: ReferenceElement,
    geom: CellGeometry,
    M: np.ndarray,
    points: np.ndarray,
    max_order: int = 0,
    on_reference: bool = False,
) -> dict:
    """Derivative tables of the physical basis at physical points.

    Set ``on_reference`` when ``points`` are already reference coordinates.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rpts = pts if on_reference else locate(geom, pts)
    rt = ref.tabulate(rpts, max_order=max_order)
    Ji = geom.Jinv  # Jinv[p, a] = d ref_p / d phys_a

    out = {(0, 0): M @ rt[(0, 0)]}
    if max_order >= 1:
        g = np.stack([rt[(1, 0)], rt[(0, 1)]])  # (p, ndof, n)
        gp = np.einsum("pa,pkn->akn", Ji, g)
        out[(1, 0)], out[(0, 1)] = M @ gp[0], M @ gp[1]
    if max_order >= 2:
        H = np.empty((2, 2) + rt[(2, 0)].shape)
        H[0, 0], H[0, 1], H[1, 0], H[1, 1] = rt[(2, 0)], rt[(1, 1)], rt[(1, 1)], rt[(0, 2)]
        Hp = np.einsum("pa,qb,pqkn->abkn", Ji, Ji, H)
        out[(2, 0)], out[(1, 1)], out[(0, 2)] = M @ Hp[0, 0], M @ Hp[0, 1], M @ Hp[1, 1]
    if max_order >= 3:
        T = np.empty((2, 2, 2) + rt[(3, 0)].shape)
        T[0, 0, 0] = rt[(3, 0)]
        T[0, 0, 1] = T[0, 1, 0] = T[1, 0, 0] = rt[(2, 1)]
        T[0, 1, 1] = T[1, 0, 1] = T[1, 1, 0] = rt[(1, 2)]
        T[1, 1, 1] = rt[(0, 3)]
        Tp = np.einsum("pa,qb,rc,pqrkn->abckn", Ji, Ji, Ji, T)
        out[(3, 0)], out[(2, 1)] = M @ Tp[0, 0, 0], M @ Tp[0, 0, 1]
        out[(1, 2)], out[(0, 3)] = M @ Tp[0, 1, 1], M @ Tp[1, 1, 1]
    return out


def apply_physical_nodes(ref: ReferenceElement, geom: CellGeometry, tm: TransformMatrices) -> np.ndarray:
    """Matrix N[i, j] = (physical node i)(physical basis j); identity when dual.

    Physical edge moments are not averaged, matching the node set the
    transform targets.
    """
    rule = edge_rule(4)
    nd = ref.ndof
    N = np.empty((nd, nd))
    vt = physical_tabulate(ref, geom, tm.M, REF_VERTICES, max_order=1, on_reference=True)
    for k in range(3):
        N[3 * k] = vt[(0, 0)][:, k]
        N[3 * k + 1] = vt[(1, 0)][:, k]
        N[3 * k + 2] = vt[(0, 1)][:, k]
    row1 = 9
    row2 = 12 if ref.robust else 9
    for i, (a, b) in enumerate(EDGE_VERTICES):
        rpts = (1.0 - rule.points)[:, None] * REF_VERTICES[a] + rule.points[:, None] * REF_VERTICES[b]
        et = physical_tabulate(ref, geom, tm.M, rpts, max_order=2, on_reference=True)
        n = geom.normals[i]
        w = rule.weights * geom.edge_len[i]  # un-averaged physical integral
        hnn = (
            n[0] * n[0] * et[(2, 0)] + 2.0 * n[0] * n[1] * et[(1, 1)] + n[1] * n[1] * et[(0, 2)]
        )
        N[row2 + i] = hnn @ w
        if ref.robust:
            N[row1 + i] = (n[0] * et[(1, 0)] + n[1] * et[(0, 1)]) @ w
    return N


def verify_duality(ref: ReferenceElement, geom: CellGeometry, tm: TransformMatrices, tol: float = 1.0e-9) -> float:
    """Max deviation of the physical node matrix from identity; raise if over tol."""
    dev = float(np.abs(apply_physical_nodes(ref, geom, tm) - np.eye(ref.ndof)).max())
    if dev > tol:
        raise DualityFailure(f"duality deviation {dev:.3e} exceeds {tol:.1e}")
    return dev


def interpolate(ref: ReferenceElement, geom: CellGeometry, value, grad, hess) -> np.ndarray:
    """Physical node values of a smooth function (callables take (n, 2) points)."""
    rule = edge_rule(4)
    out = np.empty(ref.ndof)
    vals = value(geom.coords)
    grads = grad(geom.coords)
    for k in range(3):
        out[3 * k] = vals[k]
        out[3 * k + 1 : 3 * k + 3] = grads[k]
    row1 = 9
    row2 = 12 if ref.robust else 9
    for i, (a, b) in enumerate(EDGE_VERTICES):
        pts = (1.0 - rule.points)[:, None] * geom.coords[a] + rule.points[:, None] * geom.coords[b]
        n = geom.normals[i]
        w = rule.weights * geom.edge_len[i]
        H = hess(pts)
        out[row2 + i] = w @ (H[:, 0, 0] * n[0] * n[0] + 2.0 * H[:, 0, 1] * n[0] * n[1] + H[:, 1, 1] * n[1] * n[1])
        if ref.robust:
            out[row1 + i] = w @ (grad(pts) @ n)
    return out


def write_transform_csv(path: str, matrices) -> None:
    """Debug dump: rows cell,row,col,value for each cell's V matrix."""
    with open(path, "w") as fh:
        fh.write("cell,row,col,value\n")
        for c, tm in enumerate(matrices):
            V = tm.V if hasattr(tm, "V") else tm
            for r in range(V.shape[0]):
                for s in range(V.shape[1]):
                    fh.write(f"{c},{r},{s},{V[r, s]!r}\n")
