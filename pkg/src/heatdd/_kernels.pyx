# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled loops for mesh assembly and boundary double sums.

Must stay numerically interchangeable with ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs

cnp.import_array()


def p1_triplets(double[:, ::1] points, long[:, ::1] elements):
    cdef Py_ssize_t n_el = elements.shape[0]
    cdef Py_ssize_t nv = elements.shape[1]
    cdef Py_ssize_t dim = points.shape[1]
    cdef Py_ssize_t nloc = nv * nv
    rows_a = np.empty(n_el * nloc, dtype=np.int64)
    cols_a = np.empty(n_el * nloc, dtype=np.int64)
    k_a = np.empty(n_el * nloc, dtype=np.float64)
    m_a = np.empty(n_el * nloc, dtype=np.float64)
    cdef long[::1] rows = rows_a
    cdef long[::1] cols = cols_a
    cdef double[::1] kv = k_a
    cdef double[::1] mv = m_a
    cdef Py_ssize_t e, a, b, pos
    cdef double h, x0, y0, x1, y1, x2, y2, det, area
    cdef double gx[3]
    cdef double gy[3]
    if dim != nv - 1 or (dim != 1 and dim != 2):
        raise ValueError("elements must be segments in 1D or triangles in 2D")
    pos = 0
    for e in range(n_el):
        if dim == 1:
            h = fabs(points[elements[e, 1], 0] - points[elements[e, 0], 0])
            if h <= 0.0:
                raise ValueError("degenerate element")
            for a in range(2):
                for b in range(2):
                    rows[pos] = elements[e, a]
                    cols[pos] = elements[e, b]
                    kv[pos] = (1.0 if a == b else -1.0) / h
                    mv[pos] = h * (2.0 if a == b else 1.0) / 6.0
                    pos += 1
        else:
            x0 = points[elements[e, 0], 0]; y0 = points[elements[e, 0], 1]
            x1 = points[elements[e, 1], 0]; y1 = points[elements[e, 1], 1]
            x2 = points[elements[e, 2], 0]; y2 = points[elements[e, 2], 1]
            det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
            if det <= 0.0:
                raise ValueError("element with non-positive orientation")
            area = 0.5 * det
            gx[0] = (y1 - y2) / det; gy[0] = (x2 - x1) / det
            gx[1] = (y2 - y0) / det; gy[1] = (x0 - x2) / det
            gx[2] = (y0 - y1) / det; gy[2] = (x1 - x0) / det
            for a in range(3):
                for b in range(3):
                    rows[pos] = elements[e, a]
                    cols[pos] = elements[e, b]
                    kv[pos] = area * (gx[a] * gx[b] + gy[a] * gy[b])
                    mv[pos] = area * (2.0 if a == b else 1.0) / 12.0
                    pos += 1
    return rows_a, cols_a, k_a, m_a


def slobodetskii_weights(double[::1] px, double[::1] py, double[::1] lengths,
                         double exponent):
    cdef Py_ssize_t n = px.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] w = out
    cdef Py_ssize_t a, b
    cdef double dx, dy, r2, la, xa, ya
    cdef double half = 0.5 * exponent
    cdef bint square = half == 1.0
    # full rows rather than a mirrored triangle: contiguous stores win at large n
    for a in range(n):
        la = lengths[a]
        xa = px[a]
        ya = py[a]
        if square:
            for b in range(n):
                dx = xa - px[b]
                dy = ya - py[b]
                r2 = dx * dx + dy * dy
                w[a, b] = la * lengths[b] / r2 if b != a else 0.0
        else:
            for b in range(n):
                dx = xa - px[b]
                dy = ya - py[b]
                r2 = dx * dx + dy * dy
                w[a, b] = la * lengths[b] / pow(r2, half) if b != a else 0.0
    return out
