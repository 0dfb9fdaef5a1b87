# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: triangle/incidence maps, pair scatter ops, l1 pivot.

Signatures mirror _pykern exactly; see that module for the reference
semantics. Triangle and incidence indices are computed on the fly, so no
index arrays are materialized.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "c"


def pair_index(Py_ssize_t m, Py_ssize_t i, Py_ssize_t j):
    return j * m - (j * (j + 1)) // 2 + (i - j - 1)


cdef inline Py_ssize_t _pidx(Py_ssize_t m, Py_ssize_t i, Py_ssize_t j) noexcept:
    return j * m - (j * (j + 1)) // 2 + (i - j - 1)


def triangle_apply(Py_ssize_t m, double[::1] x):
    cdef Py_ssize_t n3 = m * (m - 1) * (m - 2) // 6
    out_arr = np.empty(3 * n3, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k, e_kj, e_ij, e_ik, r = 0
    cdef double a, b, c
    for j in range(m):
        for k in range(j + 1, m):
            e_kj = _pidx(m, k, j)
            a = x[e_kj]
            for i in range(k + 1, m):
                e_ij = _pidx(m, i, j)
                e_ik = _pidx(m, i, k)
                b = x[e_ij]
                c = x[e_ik]
                out[r] = a - b - c
                out[r + 1] = b - a - c
                out[r + 2] = c - a - b
                r += 3
    return out_arr


def triangle_apply_transpose(Py_ssize_t m, double[::1] y):
    cdef Py_ssize_t p = m * (m - 1) // 2
    out_arr = np.zeros(p, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k, e_kj, e_ij, e_ik, r = 0
    cdef double y0, y1, y2
    for j in range(m):
        for k in range(j + 1, m):
            e_kj = _pidx(m, k, j)
            for i in range(k + 1, m):
                e_ij = _pidx(m, i, j)
                e_ik = _pidx(m, i, k)
                y0 = y[r]
                y1 = y[r + 1]
                y2 = y[r + 2]
                out[e_kj] += y0 - y1 - y2
                out[e_ij] += y1 - y0 - y2
                out[e_ik] += y2 - y0 - y1
                r += 3
    return out_arr


def incidence_apply(Py_ssize_t m, double[::1] v):
    cdef Py_ssize_t p = m * (m - 1) // 2
    out_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, r = 0
    for j in range(m):
        for i in range(j + 1, m):
            out[r] = v[i] + v[j]
            r += 1
    return out_arr


def incidence_apply_transpose(Py_ssize_t m, double[::1] w):
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, r = 0
    for j in range(m):
        for i in range(j + 1, m):
            out[i] += w[r]
            out[j] += w[r]
            r += 1
    return out_arr


def pair_diff_apply(double[:, ::1] U, cnp.intp_t[::1] I, cnp.intp_t[::1] J,
                    double[::1] w):
    # U: one row per node (m, d); result: one row per pair (P, d)
    cdef Py_ssize_t d = U.shape[1], P = I.shape[0]
    out_arr = np.empty((P, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t l, r, a, b
    cdef double wl
    for l in range(P):
        wl = w[l]
        a = I[l]
        b = J[l]
        for r in range(d):
            out[l, r] = wl * (U[a, r] - U[b, r])
    return out_arr


def pair_diff_apply_transpose(double[:, ::1] V, cnp.intp_t[::1] I,
                              cnp.intp_t[::1] J, double[::1] w, Py_ssize_t m):
    cdef Py_ssize_t d = V.shape[1], P = I.shape[0]
    out_arr = np.zeros((m, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t l, r, a, b
    cdef double wv
    for l in range(P):
        a = I[l]
        b = J[l]
        for r in range(d):
            wv = w[l] * V[l, r]
            out[a, r] += wv
            out[b, r] -= wv
    return out_arr


cdef inline double _median3(double x, double y, double z) noexcept:
    cdef double t
    if x > y:
        t = x; x = y; y = t
    if z < x:
        return x
    if z > y:
        return y
    return z


def l1_ball_threshold(double[::1] mag, double radius):
    """Pivot-partition search for the soft-threshold level; see _pykern."""
    work_arr = np.array(mag, dtype=np.float64, copy=True)
    cdef double[::1] work = work_arr
    cdef Py_ssize_t lo = 0, hi = work.shape[0], p, q
    cdef Py_ssize_t rho = 0, dr
    cdef double s = 0.0, ds, xi, t
    cdef bint dropped
    while hi > lo:
        xi = _median3(work[lo], work[lo + (hi - lo) // 2], work[hi - 1])
        # partition [lo, hi) so that values >= xi come first
        p = lo
        q = hi - 1
        ds = 0.0
        dr = 0
        while p <= q:
            if work[p] >= xi:
                ds += work[p]
                dr += 1
                p += 1
            else:
                t = work[p]; work[p] = work[q]; work[q] = t
                q -= 1
        if (s + ds) - (rho + dr) * xi < radius:
            s += ds
            rho += dr
            lo = p
        else:
            # keep the >= block minus one pivot instance
            hi = p
            for q in range(lo, hi):
                if work[q] == xi:
                    t = work[q]; work[q] = work[hi - 1]; work[hi - 1] = t
                    break
            hi -= 1
    return (s - radius) / rho
