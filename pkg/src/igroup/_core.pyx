# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: DTW dynamic programming and leave-one-out sweeps.

Semantics match ``igroup._core_py`` exactly; see that module for the
reference implementation. Kernel family codes: 0 gaussian,
1 epanechnikov, 2 boxcar.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport NAN, exp, fabs, sqrt

cnp.import_array()

cdef double _GAUSS_NORM = 0.3989422804014327
cdef double _INF = float("inf")


cdef inline double _kval(double t, int family) nogil:
    if family == 0:
        return _GAUSS_NORM * exp(-0.5 * t * t)
    if family == 1:
        if fabs(t) <= 1.0:
            return 0.75 * (1.0 - t * t)
        return 0.0
    if fabs(t) <= 1.0:
        return 0.5
    return 0.0


def dtw_cost_len(a, b, int window=-1):
    """Boundary-anchored DTW cost and minimal optimal-path length."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0], m = bv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pc_arr = np.full(m, _INF)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cc_arr = np.full(m, _INF)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pl_arr = np.full(m, _INF)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cl_arr = np.full(m, _INF)
    cdef double[::1] prev_cost = pc_arr, cur_cost = cc_arr
    cdef double[::1] prev_len = pl_arr, cur_len = cl_arr
    cdef double[::1] tmp
    cdef Py_ssize_t i, j, jlo, jhi
    cdef double dx, dy, c, diag, up, left, best, blen
    with nogil:
        for i in range(n):
            if window >= 0:
                jlo = i - window if i - window > 0 else 0
                jhi = i + window if i + window < m - 1 else m - 1
            else:
                jlo = 0
                jhi = m - 1
            for j in range(m):
                cur_cost[j] = _INF
                cur_len[j] = _INF
            for j in range(jlo, jhi + 1):
                dx = av[i, 0] - bv[j, 0]
                dy = av[i, 1] - bv[j, 1]
                c = sqrt(dx * dx + dy * dy)
                if i == 0 and j == 0:
                    cur_cost[0] = c
                    cur_len[0] = 1.0
                    continue
                diag = prev_cost[j - 1] if (i > 0 and j > 0) else _INF
                up = prev_cost[j] if i > 0 else _INF
                left = cur_cost[j - 1] if j > 0 else _INF
                best = diag
                if up < best:
                    best = up
                if left < best:
                    best = left
                if best == _INF:
                    continue
                blen = _INF
                if diag == best:
                    blen = prev_len[j - 1]
                if up == best and (i > 0) and prev_len[j] < blen:
                    blen = prev_len[j]
                if left == best and (j > 0) and cur_len[j - 1] < blen:
                    blen = cur_len[j - 1]
                cur_cost[j] = c + best
                cur_len[j] = blen + 1.0
            tmp = prev_cost
            prev_cost = cur_cost
            cur_cost = tmp
            tmp = prev_len
            prev_len = cur_len
            cur_len = tmp
    return float(prev_cost[m - 1]), float(prev_len[m - 1])


def loo_cv_error(dist, values, double b, int family, base=None, mask=None):
    """Mean squared leave-one-out error of the kernel-weighted mean."""
    cdef double[:, ::1] dv = np.ascontiguousarray(dist, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t p = dv.shape[0]
    cdef bint has_base = base is not None
    cdef double[:, ::1] bsv
    if has_base:
        bsv = np.ascontiguousarray(base, dtype=np.float64)
    else:
        bsv = dv  # unused
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] msk
    if mask is None:
        msk = np.ones(p, dtype=np.uint8)
    else:
        msk = np.asarray(mask, dtype=np.uint8)
    cdef unsigned char[::1] mv = msk
    cdef Py_ssize_t t, k, cnt = 0
    cdef double num, den, w, resid, acc = 0.0
    cdef bint empty = False
    with nogil:
        for t in range(p):
            if mv[t] == 0:
                continue
            cnt += 1
            num = 0.0
            den = 0.0
            for k in range(p):
                if k == t:
                    continue
                w = _kval(dv[t, k] / b, family)
                if has_base:
                    w *= bsv[t, k]
                num += w * vv[k]
                den += w
            if den <= 1e-12:
                empty = True
                break
            resid = num / den - vv[t]
            acc += resid * resid
    if empty or cnt == 0:
        return _INF
    return acc / cnt


def nw_estimates(dist, values, double b, int family, base=None):
    """Kernel-weighted means (self included) for every target row."""
    cdef double[:, ::1] dv = np.ascontiguousarray(dist, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t p = dv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(p)
    cdef double[::1] ov = out
    cdef bint has_base = base is not None
    cdef double[:, ::1] bsv
    if has_base:
        bsv = np.ascontiguousarray(base, dtype=np.float64)
    else:
        bsv = dv  # unused
    cdef Py_ssize_t t, k
    cdef double num, den, w
    with nogil:
        for t in range(p):
            num = 0.0
            den = 0.0
            for k in range(p):
                w = _kval(dv[t, k] / b, family)
                if has_base:
                    w *= bsv[t, k]
                num += w * vv[k]
                den += w
            if den > 1e-12:
                ov[t] = num / den
            else:
                ov[t] = NAN
    return out
