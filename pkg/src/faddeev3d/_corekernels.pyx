# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel-assembly core (Yamaguchi form factors).

Computes the same angular reduction as _kernels_py.block_bare_yamaguchi;
the python module documents the formula.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def block_bare_yamaguchi(
    double[::1] q_row,
    double[::1] q_col,
    double[::1] x_nodes,
    double[::1] x_weights,
    double cf,
    double cg,
    double beta_i,
    double beta_j,
    double coef_a,
    double coef_b,
    double coef_c,
    double energy,
):
    cdef Py_ssize_t nm = q_row.shape[0]
    cdef Py_ssize_t nn = q_col.shape[0]
    cdef Py_ssize_t nx = x_nodes.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((nm, nn), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef Py_ssize_t m, n, k
    cdef double qm, qn, x, f_sq, g_sq, green, acc
    cdef double bi2 = beta_i * beta_i
    cdef double bj2 = beta_j * beta_j
    cdef double cf2 = cf * cf
    cdef double cg2 = cg * cg

    with nogil:
        for m in range(nm):
            qm = q_row[m]
            for n in range(nn):
                qn = q_col[n]
                acc = 0.0
                for k in range(nx):
                    x = x_nodes[k]
                    f_sq = cf2 * qm * qm + qn * qn + 2.0 * cf * qm * qn * x
                    g_sq = qm * qm + cg2 * qn * qn + 2.0 * cg * qm * qn * x
                    green = energy - coef_a * qm * qm - coef_b * qn * qn - coef_c * qm * qn * x
                    acc += x_weights[k] / ((f_sq + bi2) * (g_sq + bj2) * green)
                res[m, n] = acc
    return out
