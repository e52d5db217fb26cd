"""NumPy implementations of the per-cell hot kernels.

These are the reference semantics for the compiled core; the two backends
must agree to machine precision (see tests/test_backends.py). All kernels
are vectorized over cells.
"""

import numpy as np

from .errors import SingularCell

name = "python"

# canonical local edge i is opposite vertex i
_EDGE_A = np.array([1, 0, 0])
_EDGE_B = np.array([2, 2, 1])
# reference edge frames for vertices (0,0), (1,0), (0,1)
_S = 1.0 / np.sqrt(2.0)
_REF_NRM = np.array([[_S, _S], [1.0, 0.0], [0.0, -1.0]])
_REF_TAN = np.array([[-_S, _S], [0.0, 1.0], [1.0, 0.0]])


def cell_transforms(coords: np.ndarray):
    """Per-cell basis correction M = V^T, inverse Jacobians, determinants.

    coords: (nc, 3, 2) current vertex positions per cell.
    Returns (M (nc, 12, 12), Jinv (nc, 2, 2), detJ (nc,)).
    """
    nc = coords.shape[0]
    J = np.empty((nc, 2, 2))
    J[:, :, 0] = coords[:, 1] - coords[:, 0]
    J[:, :, 1] = coords[:, 2] - coords[:, 0]
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    scale = np.abs(J).reshape(nc, 4).max(axis=1) ** 2
    bad = detJ <= 1.0e-14 * scale
    if bad.any():
        raise SingularCell(f"degenerate cell (first index {int(np.argmax(bad))})")
    Jinv = np.empty_like(J)
    Jinv[:, 0, 0] = J[:, 1, 1] / detJ
    Jinv[:, 0, 1] = -J[:, 0, 1] / detJ
    Jinv[:, 1, 0] = -J[:, 1, 0] / detJ
    Jinv[:, 1, 1] = J[:, 0, 0] / detJ

    V = np.zeros((nc, 12, 12))
    V[:, 0, 0] = V[:, 3, 3] = V[:, 6, 6] = 1.0
    JT = J.transpose(0, 2, 1)
    for k in range(3):
        V[:, 3 * k + 1 : 3 * k + 3, 3 * k + 1 : 3 * k + 3] = JT

    for i in range(3):
        a, b = _EDGE_A[i], _EDGE_B[i]
        d = coords[:, b] - coords[:, a]
        elen = np.hypot(d[:, 0], d[:, 1])
        tx, ty = d[:, 0] / elen, d[:, 1] / elen
        nx, ny = ty, -tx
        # first column of G J Ghat^T: frame components of J @ nhat
        jn = np.einsum("cab,b->ca", J, _REF_NRM[i])
        w1 = nx * jn[:, 0] + ny * jn[:, 1]
        w2 = tx * jn[:, 0] + ty * jn[:, 1]
        V[:, 9 + i, 9 + i] = w1 * w1 / elen
        gb = (2.0 * w1 * w2)[:, None] * np.column_stack([nx, ny]) + (w2 * w2)[:, None] * np.column_stack([tx, ty])
        gb /= elen[:, None]
        V[:, 9 + i, 3 * b + 1 : 3 * b + 3] = gb
        V[:, 9 + i, 3 * a + 1 : 3 * a + 3] = -gb

    return V.transpose(0, 2, 1).copy(), Jinv, detJ


def element_matrices(
    M: np.ndarray,
    Jinv: np.ndarray,
    detJ: np.ndarray,
    alpha: float,
    val: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    third: np.ndarray,
    qw: np.ndarray,
) -> np.ndarray:
    """Element matrices of the scalar sixth-order form, (nc, 12, 12).

    The form is value + 3a grad + 3a^2 laplacian + a^3 grad-laplacian,
    evaluated from reference tables: val (nd, nq), grad (2, nd, nq),
    hess (2, 2, nd, nq), third (2, 2, 2, nd, nq).
    """
    w = qw
    B = np.einsum("kq,lq,q->kl", val, val, w)[None, :, :] * np.ones_like(detJ)[:, None, None]

    if alpha != 0.0:
        gp = np.einsum("cpa,pkq->cakq", Jinv, grad)
        B = B + 3.0 * alpha * np.einsum("cakq,calq,q->ckl", gp, gp, w)

        S = np.einsum("cpa,cra->cpr", Jinv, Jinv)
        lap = np.einsum("cpr,prkq->ckq", S, hess)
        B = B + 3.0 * alpha * alpha * np.einsum("ckq,clq,q->ckl", lap, lap, w)

        gl = np.einsum("cpa,cmr,pmrkq->cakq", Jinv, S, third)
        B = B + alpha**3 * np.einsum("cakq,calq,q->ckl", gl, gl, w)

    B *= detJ[:, None, None]
    return np.einsum("cik,ckl,cjl->cij", M, B, M, optimize=True)


def winding_number_grid(polygon: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Winding numbers of grid centers (ny, nx) about a closed polygon.

    Nonzero winding means inside; orientation does not matter for the
    indicator. Crossing rule: half-open in y, so points exactly level with
    a vertex are counted once.
    """
    X = xs[None, :, None]
    Y = ys[:, None, None]
    x1, y1 = polygon[:, 0][None, None, :], polygon[:, 1][None, None, :]
    nxt = np.roll(polygon, -1, axis=0)
    x2, y2 = nxt[:, 0][None, None, :], nxt[:, 1][None, None, :]
    cross = (x2 - x1) * (Y - y1) - (y2 - y1) * (X - x1)
    up = (y1 <= Y) & (y2 > Y) & (cross > 0)
    dn = (y1 > Y) & (y2 <= Y) & (cross < 0)
    return (up.sum(axis=2) - dn.sum(axis=2)).astype(np.int64)
