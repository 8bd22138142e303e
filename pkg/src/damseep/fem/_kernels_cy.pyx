# cython: language_level=3
"""Compiled kernels, same contract as the reference module.

Loops are written out per element; the reference implementation stays the
source of truth for semantics and the parity tests hold both to it.
"""

import numpy as np

cimport cython
cimport numpy as cnp

from scipy.sparse import csc_matrix, csr_matrix
from scipy.sparse.linalg import spilu

from ..errors import SolverError

cnp.import_array()

NAME = "cython"


def _as_f64(arr):
    return np.ascontiguousarray(arr, dtype=np.float64)


def _as_i64(arr):
    return np.ascontiguousarray(arr, dtype=np.int64)


@cython.boundscheck(False)
@cython.wraparound(False)
def element_geometry(nodes, elements):
    """Shape-function constants per triangle; see the reference module."""
    cdef double[:, ::1] xy = _as_f64(nodes)
    cdef cnp.int64_t[:, ::1] tri = _as_i64(elements)
    cdef Py_ssize_t m = tri.shape[0]
    b_arr = np.empty((m, 3), dtype=np.float64)
    c_arr = np.empty((m, 3), dtype=np.float64)
    a_arr = np.empty(m, dtype=np.float64)
    cdef double[:, ::1] b = b_arr
    cdef double[:, ::1] c = c_arr
    cdef double[::1] area = a_arr
    cdef Py_ssize_t e, i0, i1, i2
    cdef double x0, y0, x1, y1, x2, y2, a
    cdef bint bad = False
    for e in range(m):
        i0 = tri[e, 0]; i1 = tri[e, 1]; i2 = tri[e, 2]
        x0 = xy[i0, 0]; y0 = xy[i0, 1]
        x1 = xy[i1, 0]; y1 = xy[i1, 1]
        x2 = xy[i2, 0]; y2 = xy[i2, 1]
        b[e, 0] = y1 - y2; b[e, 1] = y2 - y0; b[e, 2] = y0 - y1
        c[e, 0] = x2 - x1; c[e, 1] = x0 - x2; c[e, 2] = x1 - x0
        a = 0.5 * (b[e, 0] * c[e, 1] - b[e, 1] * c[e, 0])
        area[e] = a
        if a <= 0.0:
            bad = True
    if bad:
        raise SolverError("degenerate or inverted element in mesh")
    return b_arr, c_arr, a_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def unit_stiffness(nodes, elements):
    """Per-element stiffness for unit conductivity, shape (m, 3, 3)."""
    b_arr, c_arr, a_arr = element_geometry(nodes, elements)
    cdef double[:, ::1] b = b_arr
    cdef double[:, ::1] c = c_arr
    cdef double[::1] area = a_arr
    cdef Py_ssize_t m = b.shape[0]
    ke_arr = np.empty((m, 3, 3), dtype=np.float64)
    cdef double[:, :, ::1] ke = ke_arr
    cdef Py_ssize_t e, i, j
    cdef double inv4a
    for e in range(m):
        inv4a = 1.0 / (4.0 * area[e])
        for i in range(3):
            for j in range(3):
                ke[e, i, j] = (b[e, i] * b[e, j] + c[e, i] * c[e, j]) * inv4a
    return ke_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def stiffness_data(unit_ke, coef):
    """Scale unit element matrices by per-element conductivity, flat (m*9,)."""
    cdef double[:, :, ::1] ke = _as_f64(unit_ke)
    cdef double[::1] k = _as_f64(coef)
    cdef Py_ssize_t m = ke.shape[0]
    out_arr = np.empty(m * 9, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t e, i, j, pos = 0
    cdef double ce
    for e in range(m):
        ce = k[e]
        for i in range(3):
            for j in range(3):
                out[pos] = ke[e, i, j] * ce
                pos += 1
    return out_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def kr_curve(pressure, double kr_min, double p_transition):
    """Relative permeability vs pressure head; C2 quintic smoothstep blend."""
    p_arr = _as_f64(pressure)
    flat = p_arr.ravel()
    cdef double[::1] p = flat
    cdef Py_ssize_t n = p.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double s, sm, span = 1.0 - kr_min
    for i in range(n):
        s = (p[i] + p_transition) / p_transition
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
        sm = s * s * s * (s * (6.0 * s - 15.0) + 10.0)
        if sm > 1.0:  # one-ulp overshoot just below saturation
            sm = 1.0
        out[i] = kr_min + span * sm
    return out_arr.reshape(p_arr.shape)


@cython.boundscheck(False)
@cython.wraparound(False)
def head_gradients(nodes, elements, head):
    """Per-element gradient of the nodal field, shape (m, 2)."""
    b_arr, c_arr, a_arr = element_geometry(nodes, elements)
    cdef double[:, ::1] b = b_arr
    cdef double[:, ::1] c = c_arr
    cdef double[::1] area = a_arr
    cdef cnp.int64_t[:, ::1] tri = _as_i64(elements)
    cdef double[::1] h = _as_f64(head)
    cdef Py_ssize_t m = tri.shape[0]
    g_arr = np.empty((m, 2), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    cdef Py_ssize_t e
    cdef double h0, h1, h2, inv2a
    for e in range(m):
        h0 = h[tri[e, 0]]; h1 = h[tri[e, 1]]; h2 = h[tri[e, 2]]
        inv2a = 1.0 / (2.0 * area[e])
        g[e, 0] = (b[e, 0] * h0 + b[e, 1] * h1 + b[e, 2] * h2) * inv2a
        g[e, 1] = (c[e, 0] * h0 + c[e, 1] * h1 + c[e, 2] * h2) * inv2a
    return g_arr


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _csr_matvec(double[::1] data, cnp.int32_t[::1] indices,
                      cnp.int32_t[::1] indptr, double[::1] x,
                      double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(out.shape[0]):
        acc = 0.0
        for j in range(indptr[i], indptr[i + 1]):
            acc += data[j] * x[indices[j]]
        out[i] = acc


def linear_solve(A, rhs, x0=None, rtol=1e-10, maxiter=None):
    """Preconditioned CG, same semantics as the reference implementation."""
    cdef Py_ssize_t n = len(rhs)
    if maxiter is None:
        maxiter = max(10 * n, 200)
    b = _as_f64(rhs)
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros(n), 0
    Ac = csr_matrix(A)
    Ac.sort_indices()
    data = _as_f64(Ac.data)
    indices = np.ascontiguousarray(Ac.indices, dtype=np.int32)
    indptr = np.ascontiguousarray(Ac.indptr, dtype=np.int32)
    try:
        ilu = spilu(csc_matrix(A), drop_tol=1e-8, fill_factor=20.0)
    except RuntimeError as exc:
        raise SolverError(f"preconditioner failed: {exc}") from exc
    x = np.zeros(n) if x0 is None else _as_f64(x0).copy()
    tmp = np.empty(n, dtype=np.float64)
    _csr_matvec(data, indices, indptr, x, tmp)
    r = b - tmp
    if np.linalg.norm(r) <= rtol * norm_b:
        return x, 0
    z = ilu.solve(r)
    p = z.copy()
    rz = float(r @ z)
    cdef int it
    for it in range(1, maxiter + 1):
        _csr_matvec(data, indices, indptr, p, tmp)
        pAp = float(p @ tmp)
        if pAp <= 0.0:
            raise SolverError("matrix lost positive definiteness")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * tmp
        if np.linalg.norm(r) <= rtol * norm_b:
            return x, it
        z = ilu.solve(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"linear solver stalled after {maxiter} iterations")
