# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled frame-level kernels; same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def binary_median(active, Py_ssize_t omega):
    cdef const cnp.uint8_t[:, ::1] a = np.ascontiguousarray(active, dtype=np.uint8)
    cdef Py_ssize_t T = a.shape[0], C = a.shape[1]
    cdef Py_ssize_t half = omega // 2
    out_arr = np.zeros((T, C), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t c, t, lo, hi, count
    with nogil:
        for c in range(C):
            count = 0
            # running count over [t - half, t + half] clipped to [0, T)
            hi = half + 1 if half + 1 < T else T
            for t in range(hi):
                count += a[t, c]
            for t in range(T):
                lo = t - half if t > half else 0
                hi = t + half + 1 if t + half + 1 < T else T
                if 2 * count > hi - lo or (2 * count == hi - lo and a[t, c]):
                    out[t, c] = 1
                if t + half + 1 < T:
                    count += a[t + half + 1, c]
                if t - half >= 0:
                    count -= a[t - half, c]
    return out_arr


def hysteresis(probs, double low, double high):
    cdef const double[:, ::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t T = p.shape[0], C = p.shape[1]
    out_arr = np.zeros((T, C), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t c, t, start, u
    cdef bint seeded
    with nogil:
        for c in range(C):
            t = 0
            while t < T:
                if p[t, c] > low:
                    start = t
                    seeded = False
                    while t < T and p[t, c] > low:
                        if p[t, c] > high:
                            seeded = True
                        t += 1
                    if seeded:
                        for u in range(start, t):
                            out[u, c] = 1
                else:
                    t += 1
    return out_arr


def bridge_gaps(mask, Py_ssize_t omega):
    cdef cnp.uint8_t[:, ::1] out = np.array(mask, dtype=np.uint8, order="C", copy=True)
    cdef Py_ssize_t T = out.shape[0], C = out.shape[1]
    cdef Py_ssize_t c, t, last_end, u
    if omega > 1:
        with nogil:
            for c in range(C):
                last_end = -1
                t = 0
                while t < T:
                    if out[t, c]:
                        if last_end >= 0 and t - last_end < omega:
                            for u in range(last_end, t):
                                out[u, c] = 1
                        while t < T and out[t, c]:
                            t += 1
                        last_end = t
                    else:
                        t += 1
    return np.asarray(out)


def runs(col):
    cdef const cnp.uint8_t[::1] m = np.ascontiguousarray(np.asarray(col) != 0, dtype=np.uint8)
    cdef Py_ssize_t T = m.shape[0], t = 0, start
    result = []
    while t < T:
        if m[t]:
            start = t
            while t < T and m[t]:
                t += 1
            result.append((start, t))
        else:
            t += 1
    return result
