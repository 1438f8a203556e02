# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython backend for the radial spectral-integrand kernel.

Compiled twin of kernels.pure.eval_rows; see that module for the row
definitions and the stability rewrites.  Selected automatically at import
when the extension was built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, log1p, sqrt

cnp.import_array()

NROWS = 4


def eval_rows(r, lam, double beta, double inv_2m, double foff, double habs):
    """Kernel rows at radii r with profile values lam; returns shape (4, n)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rv = \
        np.ascontiguousarray(r, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lv = \
        np.ascontiguousarray(lam, dtype=np.float64).ravel()
    cdef Py_ssize_t n = rv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = \
        np.empty((4, n), dtype=np.float64)
    cdef Py_ssize_t i
    cdef double f, h, E, x, emx, nb, h2, efp, fe
    with nogil:
        for i in range(n):
            f = inv_2m * rv[i] * rv[i] + foff
            h = habs * lv[i]
            E = sqrt((f - h) * (f + h))
            x = beta * E
            if x < 700.0:
                emx = exp(-x)
                nb = 1.0 / expm1(x)
            else:
                emx = exp(-700.0)
                nb = emx
            h2 = h * h
            efp = E + f
            fe = f / E
            out[0, i] = -log1p(-emx) / beta + 0.5 * h2 / efp
            out[1, i] = nb * fe + 0.5 * h2 / (E * efp)
            out[2, i] = lv[i] * lv[i] * (nb + 0.5) / E
            out[3, i] = beta * nb * (nb + 1.0) * fe * fe \
                + (nb + 0.5) * h2 / (E * E * E)
    return out
