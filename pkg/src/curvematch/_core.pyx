# cython: boundscheck=False, wraparound=False, cdivision=True
"""Typed per-cell kernels; semantics mirror _kernels_py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot, sqrt

from .errors import SingularCell

cnp.import_array()

name = "compiled"

cdef int[3] EDGE_A = [1, 0, 0]
cdef int[3] EDGE_B = [2, 2, 1]
cdef double S_ = 1.0 / sqrt(2.0)
cdef double[3][2] REF_NRM = [[S_, S_], [1.0, 0.0], [0.0, -1.0]]


def cell_transforms(coords_in):
    """Per-cell basis correction M = V^T, inverse Jacobians, determinants."""
    cdef double[:, :, ::1] coords = np.ascontiguousarray(coords_in, dtype=np.float64)
    cdef Py_ssize_t nc = coords.shape[0]
    M_np = np.zeros((nc, 12, 12))
    Jinv_np = np.empty((nc, 2, 2))
    detJ_np = np.empty(nc)
    cdef double[:, :, ::1] M = M_np
    cdef double[:, :, ::1] Jinv = Jinv_np
    cdef double[::1] detJ = detJ_np

    cdef Py_ssize_t c, i, k, r, s, a, b
    cdef double j00, j01, j10, j11, det, scale, m
    cdef double dx, dy, elen, tx, ty, nx, ny, jn0, jn1, w1, w2, gb0, gb1

    for c in range(nc):
        j00 = coords[c, 1, 0] - coords[c, 0, 0]
        j10 = coords[c, 1, 1] - coords[c, 0, 1]
        j01 = coords[c, 2, 0] - coords[c, 0, 0]
        j11 = coords[c, 2, 1] - coords[c, 0, 1]
        det = j00 * j11 - j01 * j10
        scale = 0.0
        m = j00 if j00 >= 0.0 else -j00
        if m > scale:
            scale = m
        m = j01 if j01 >= 0.0 else -j01
        if m > scale:
            scale = m
        m = j10 if j10 >= 0.0 else -j10
        if m > scale:
            scale = m
        m = j11 if j11 >= 0.0 else -j11
        if m > scale:
            scale = m
        if det <= 1.0e-14 * scale * scale:
            raise SingularCell(f"degenerate cell (first index {c})")
        detJ[c] = det
        Jinv[c, 0, 0] = j11 / det
        Jinv[c, 0, 1] = -j01 / det
        Jinv[c, 1, 0] = -j10 / det
        Jinv[c, 1, 1] = j00 / det

        # write V transposed straight into M: M[c, col, row] = V[row, col]
        M[c, 0, 0] = 1.0
        M[c, 3, 3] = 1.0
        M[c, 6, 6] = 1.0
        for k in range(3):
            # V[3k+1+r, 3k+1+s] = J[s, r]
            M[c, 3 * k + 1, 3 * k + 1] = j00
            M[c, 3 * k + 2, 3 * k + 1] = j10
            M[c, 3 * k + 1, 3 * k + 2] = j01
            M[c, 3 * k + 2, 3 * k + 2] = j11

        for i in range(3):
            a = EDGE_A[i]
            b = EDGE_B[i]
            dx = coords[c, b, 0] - coords[c, a, 0]
            dy = coords[c, b, 1] - coords[c, a, 1]
            elen = hypot(dx, dy)
            tx = dx / elen
            ty = dy / elen
            nx = ty
            ny = -tx
            jn0 = j00 * REF_NRM[i][0] + j01 * REF_NRM[i][1]
            jn1 = j10 * REF_NRM[i][0] + j11 * REF_NRM[i][1]
            w1 = nx * jn0 + ny * jn1
            w2 = tx * jn0 + ty * jn1
            M[c, 9 + i, 9 + i] = w1 * w1 / elen
            gb0 = (2.0 * w1 * w2 * nx + w2 * w2 * tx) / elen
            gb1 = (2.0 * w1 * w2 * ny + w2 * w2 * ty) / elen
            M[c, 3 * b + 1, 9 + i] = gb0
            M[c, 3 * b + 2, 9 + i] = gb1
            M[c, 3 * a + 1, 9 + i] = -gb0
            M[c, 3 * a + 2, 9 + i] = -gb1

    return M_np, Jinv_np, detJ_np


def element_matrices(M_in, Jinv_in, detJ_in, double alpha,
                     val_in, grad_in, hess_in, third_in, qw_in):
    """Element matrices of the scalar sixth-order form, (nc, 12, 12)."""
    cdef double[:, :, ::1] M = np.ascontiguousarray(M_in, dtype=np.float64)
    cdef double[:, :, ::1] Jinv = np.ascontiguousarray(Jinv_in, dtype=np.float64)
    cdef double[::1] detJ = np.ascontiguousarray(detJ_in, dtype=np.float64)
    cdef double[:, ::1] val = np.ascontiguousarray(val_in, dtype=np.float64)
    cdef double[:, :, ::1] grad = np.ascontiguousarray(grad_in, dtype=np.float64)
    cdef double[:, :, :, ::1] hess = np.ascontiguousarray(hess_in, dtype=np.float64)
    cdef double[:, :, :, :, ::1] third = np.ascontiguousarray(third_in, dtype=np.float64)
    cdef double[::1] qw = np.ascontiguousarray(qw_in, dtype=np.float64)

    cdef Py_ssize_t nc = M.shape[0]
    cdef Py_ssize_t nq = qw.shape[0]
    A_np = np.empty((nc, 12, 12))
    cdef double[:, :, ::1] A = A_np

    cdef double[12][12] vb
    cdef Py_ssize_t c, k, l, q, a, p, r, mm, i, j
    cdef double acc, a2 = alpha * alpha, a3 = alpha * alpha * alpha
    cdef double s00, s01, s11, det
    # per-cell scratch, widest case nq = 25
    cdef double[2][12][25] gp
    cdef double[12][25] lap
    cdef double[2][12][25] gl
    cdef double[12][12] B
    cdef double[12][12] MB

    if nq > 25:
        raise ValueError("quadrature scratch supports at most 25 points")

    for k in range(12):
        for l in range(12):
            acc = 0.0
            for q in range(nq):
                acc += val[k, q] * val[l, q] * qw[q]
            vb[k][l] = acc

    for c in range(nc):
        for k in range(12):
            for l in range(12):
                B[k][l] = vb[k][l]

        if alpha != 0.0:
            for a in range(2):
                for k in range(12):
                    for q in range(nq):
                        gp[a][k][q] = Jinv[c, 0, a] * grad[0, k, q] + Jinv[c, 1, a] * grad[1, k, q]
            s00 = Jinv[c, 0, 0] * Jinv[c, 0, 0] + Jinv[c, 0, 1] * Jinv[c, 0, 1]
            s01 = Jinv[c, 0, 0] * Jinv[c, 1, 0] + Jinv[c, 0, 1] * Jinv[c, 1, 1]
            s11 = Jinv[c, 1, 0] * Jinv[c, 1, 0] + Jinv[c, 1, 1] * Jinv[c, 1, 1]
            for k in range(12):
                for q in range(nq):
                    lap[k][q] = (s00 * hess[0, 0, k, q] + s01 * (hess[0, 1, k, q] + hess[1, 0, k, q])
                                 + s11 * hess[1, 1, k, q])
            for a in range(2):
                for k in range(12):
                    for q in range(nq):
                        acc = 0.0
                        for p in range(2):
                            acc += Jinv[c, p, a] * (s00 * third[p, 0, 0, k, q]
                                                    + s01 * (third[p, 0, 1, k, q] + third[p, 1, 0, k, q])
                                                    + s11 * third[p, 1, 1, k, q])
                        gl[a][k][q] = acc
            for k in range(12):
                for l in range(k, 12):
                    acc = 0.0
                    for q in range(nq):
                        acc += qw[q] * (3.0 * alpha * (gp[0][k][q] * gp[0][l][q] + gp[1][k][q] * gp[1][l][q])
                                        + 3.0 * a2 * lap[k][q] * lap[l][q]
                                        + a3 * (gl[0][k][q] * gl[0][l][q] + gl[1][k][q] * gl[1][l][q]))
                    B[k][l] += acc
                    if l != k:
                        B[l][k] += acc

        det = detJ[c]
        for k in range(12):
            for l in range(12):
                B[k][l] *= det

        # A = M B M^T
        for i in range(12):
            for l in range(12):
                acc = 0.0
                for k in range(12):
                    acc += M[c, i, k] * B[k][l]
                MB[i][l] = acc
        for i in range(12):
            for j in range(12):
                acc = 0.0
                for l in range(12):
                    acc += MB[i][l] * M[c, j, l]
                A[c, i, j] = acc

    return A_np


def winding_number_grid(polygon_in, xs_in, ys_in):
    """Winding numbers of grid points (ny, nx) about a closed polygon."""
    cdef double[:, ::1] poly = np.ascontiguousarray(polygon_in, dtype=np.float64)
    cdef double[::1] xs = np.ascontiguousarray(xs_in, dtype=np.float64)
    cdef double[::1] ys = np.ascontiguousarray(ys_in, dtype=np.float64)
    cdef Py_ssize_t ne = poly.shape[0]
    cdef Py_ssize_t nx = xs.shape[0]
    cdef Py_ssize_t ny = ys.shape[0]
    wn_np = np.zeros((ny, nx), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] wn = wn_np

    cdef Py_ssize_t e, iy, ix
    cdef double x1, y1, x2, y2, Y, cross, ex, ey
    cdef bint up_row, dn_row

    for e in range(ne):
        x1 = poly[e, 0]
        y1 = poly[e, 1]
        x2 = poly[(e + 1) % ne, 0]
        y2 = poly[(e + 1) % ne, 1]
        ex = x2 - x1
        ey = y2 - y1
        for iy in range(ny):
            Y = ys[iy]
            up_row = y1 <= Y and y2 > Y
            dn_row = y1 > Y and y2 <= Y
            if not (up_row or dn_row):
                continue
            for ix in range(nx):
                cross = ex * (Y - y1) - ey * (xs[ix] - x1)
                if up_row:
                    if cross > 0.0:
                        wn[iy, ix] += 1
                elif cross < 0.0:
                    wn[iy, ix] -= 1

    return wn_np
