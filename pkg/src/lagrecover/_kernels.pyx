# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled PEV inner-problem kernels (see _pykernels for the reference semantics)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs, isfinite
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double ENERGY_TOL = 1e-9
cdef double TIE_RTOL = 1e-12


cdef inline double _threshold(double best) noexcept nogil:
    if isfinite(best):
        return best - TIE_RTOL * (1.0 + fabs(best))
    return INFINITY


def greedy_charge_batch(prices, kmin, kmax):
    cdef const double[:, ::1] p = np.ascontiguousarray(prices, dtype=np.float64)
    cdef const long long[::1] lo = np.ascontiguousarray(kmin, dtype=np.int64)
    cdef const long long[::1] hi = np.ascontiguousarray(kmax, dtype=np.int64)
    cdef Py_ssize_t n = p.shape[0], N = p.shape[1]
    out = np.zeros((n, N), dtype=np.uint8)
    cdef unsigned char[:, ::1] u = out
    cdef Py_ssize_t r, i, j, t
    cdef long long key
    cdef long long *order
    if N == 0:
        return out
    order = <long long *> malloc(N * sizeof(long long))
    if order == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(n):
                # stable insertion sort of slot indices by price
                for i in range(N):
                    key = i
                    j = i - 1
                    while j >= 0 and p[r, order[j]] > p[r, key]:
                        order[j + 1] = order[j]
                        j -= 1
                    order[j + 1] = key
                for t in range(N):
                    if t < lo[r] or (t < hi[r] and p[r, order[t]] < 0.0):
                        u[r, order[t]] = 1
    finally:
        free(order)
    return out


def dp_v2g_batch(charge, discharge, e_init, e_min, e_max, e_ref, up, down, allow_discharge=True):
    cdef const double[:, ::1] cp = np.ascontiguousarray(charge, dtype=np.float64)
    cdef const double[:, ::1] dp = np.ascontiguousarray(discharge, dtype=np.float64)
    cdef const double[::1] e0 = np.ascontiguousarray(e_init, dtype=np.float64)
    cdef const double[::1] elo = np.ascontiguousarray(e_min, dtype=np.float64)
    cdef const double[::1] ehi = np.ascontiguousarray(e_max, dtype=np.float64)
    cdef const double[::1] eref = np.ascontiguousarray(e_ref, dtype=np.float64)
    cdef const double[::1] dup = np.ascontiguousarray(up, dtype=np.float64)
    cdef const double[::1] ddn = np.ascontiguousarray(down, dtype=np.float64)
    cdef bint allow = bool(allow_discharge)
    cdef Py_ssize_t n = cp.shape[0], N = cp.shape[1]
    cdef Py_ssize_t W = N + 2
    u_out = np.zeros((n, N), dtype=np.uint8)
    v_out = np.zeros((n, N), dtype=np.uint8)
    ok_out = np.zeros(n, dtype=np.bool_)
    cdef unsigned char[:, ::1] u = u_out
    cdef unsigned char[:, ::1] v = v_out
    cdef cnp.npy_bool[::1] ok = ok_out

    cdef double *Vn = <double *> malloc(W * W * sizeof(double))
    cdef double *Vc = <double *> malloc(W * W * sizeof(double))
    cdef unsigned char *dec = <unsigned char *> malloc((N + 1) * W * W * sizeof(unsigned char))
    if Vn == NULL or Vc == NULL or dec == NULL:
        free(Vn); free(Vc); free(dec)
        raise MemoryError()

    cdef Py_ssize_t r, k, a, b, idx, bmax
    cdef double e, best, cand, thr
    cdef double *tmp
    cdef unsigned char d

    try:
        with nogil:
            for r in range(n):
                for idx in range(W * W):
                    Vn[idx] = INFINITY
                    Vc[idx] = INFINITY
                # terminal values at step N
                for a in range(N + 1):
                    bmax = N - a if allow else 0
                    for b in range(bmax + 1):
                        e = e0[r] + a * dup[r] - b * ddn[r]
                        if e >= elo[r] - ENERGY_TOL and e <= ehi[r] + ENERGY_TOL and e >= eref[r] - ENERGY_TOL:
                            Vn[a * W + b] = 0.0
                for k in range(N - 1, -1, -1):
                    for idx in range(W * W):
                        Vc[idx] = INFINITY
                    for a in range(k + 1):
                        bmax = k - a if allow else 0
                        for b in range(bmax + 1):
                            e = e0[r] + a * dup[r] - b * ddn[r]
                            if e < elo[r] - ENERGY_TOL or e > ehi[r] + ENERGY_TOL:
                                dec[k * W * W + a * W + b] = 0
                                continue
                            best = Vn[a * W + b]
                            d = 0
                            cand = cp[r, k] + Vn[(a + 1) * W + b]
                            if isfinite(cand) and cand < _threshold(best):
                                best = cand
                                d = 1
                            if allow:
                                cand = -dp[r, k] + Vn[a * W + b + 1]
                                if isfinite(cand) and cand < _threshold(best):
                                    best = cand
                                    d = 2
                            Vc[a * W + b] = best
                            dec[k * W * W + a * W + b] = d
                    tmp = Vn
                    Vn = Vc
                    Vc = tmp
                if isfinite(Vn[0]):
                    ok[r] = 1
                    a = 0
                    b = 0
                    for k in range(N):
                        d = dec[k * W * W + a * W + b]
                        if d == 1:
                            u[r, k] = 1
                            a += 1
                        elif d == 2:
                            v[r, k] = 1
                            b += 1
    finally:
        free(Vn)
        free(Vc)
        free(dec)
    return u_out, v_out, ok_out
