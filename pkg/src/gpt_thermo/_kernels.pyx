# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the entropy optimisers and grid oracles.

Every function here has a numpy twin in :mod:`gpt_thermo._kernels_py` with
identical semantics; :mod:`gpt_thermo.kernels` picks one at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


cdef inline double _xlogx(double p) nogil:
    if p <= 0.0:
        return 0.0
    return p * log(p)


def shannon_rows(const double[:, ::1] dist):
    """Shannon entropy (nats) of every row; entries <= 0 contribute nothing."""
    cdef Py_ssize_t n = dist.shape[0], m = dist.shape[1], i, j
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc -= _xlogx(dist[i, j])
            res[i] = acc
    return out


def mutual_information_rows(const double[:, ::1] weights,
                            const double[:, ::1] channel):
    """Mutual information I(X:Y) for each row of input weights.

    ``weights`` has shape (n_points, n_inputs); ``channel[x, y]`` is p(y|x).
    """
    cdef Py_ssize_t n = weights.shape[0], nx = weights.shape[1]
    cdef Py_ssize_t ny = channel.shape[1], i, x, y
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    cdef double[::1] q = np.empty(ny, dtype=np.float64)
    cdef double[::1] cond = np.empty(nx, dtype=np.float64)
    cdef double acc, w, hq

    for x in range(nx):
        acc = 0.0
        for y in range(ny):
            acc += _xlogx(channel[x, y])
        cond[x] = acc

    with nogil:
        for i in range(n):
            for y in range(ny):
                q[y] = 0.0
            acc = 0.0
            for x in range(nx):
                w = weights[i, x]
                if w <= 0.0:
                    continue
                acc += w * cond[x]
                for y in range(ny):
                    q[y] += w * channel[x, y]
            hq = 0.0
            for y in range(ny):
                hq -= _xlogx(q[y])
            res[i] = hq + acc
    return out
