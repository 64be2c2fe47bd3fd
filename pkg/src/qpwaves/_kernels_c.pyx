# Fused array kernels for the spectral core.
#
# These are the small, frequently-called pieces that surround the FFTs:
# layout packing between the coefficient box and the padded spectrum,
# diagonal multiplier application, integrator stage combinations, and the
# pointwise chord reciprocal with its fused minimum reduction. The numpy
# fallback `_kernels_py` implements the same signatures.

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

IMPL = "compiled"


def pack(cnp.ndarray dst, cnp.ndarray src, cnp.ndarray idx):
    cdef double complex[::1] d = dst.reshape(-1)
    cdef double complex[::1] s = src.reshape(-1)
    cdef long[::1] ix = idx
    cdef Py_ssize_t i, n = d.shape[0], m = s.shape[0]
    for i in range(n):
        d[i] = 0.0
    for i in range(m):
        d[ix[i]] = s[i]


def gather_scaled(cnp.ndarray src, cnp.ndarray idx, double scale, cnp.ndarray out):
    cdef double complex[::1] s = src.reshape(-1)
    cdef double complex[::1] o = out.reshape(-1)
    cdef long[::1] ix = idx
    cdef Py_ssize_t i, m = o.shape[0]
    for i in range(m):
        o[i] = s[ix[i]] * scale


def apply_diag(cnp.ndarray a, cnp.ndarray diag, cnp.ndarray out):
    cdef double complex[::1] x = a.reshape(-1)
    cdef double complex[::1] o = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double complex[::1] dc
    cdef double[::1] dr
    if diag.dtype == np.complex128:
        dc = diag.reshape(-1)
        for i in range(n):
            o[i] = x[i] * dc[i]
    else:
        dr = diag.reshape(-1)
        for i in range(n):
            o[i] = x[i] * dr[i]


def axpy(cnp.ndarray y, double c, cnp.ndarray k, cnp.ndarray out):
    cdef double complex[::1] a = y.reshape(-1)
    cdef double complex[::1] b = k.reshape(-1)
    cdef double complex[::1] o = out.reshape(-1)
    cdef Py_ssize_t i, n = a.shape[0]
    for i in range(n):
        o[i] = a[i] + c * b[i]


def rk4_combine(cnp.ndarray y, cnp.ndarray k1, cnp.ndarray k2, cnp.ndarray k3,
                cnp.ndarray k4, double dt, cnp.ndarray out):
    cdef double complex[::1] a = y.reshape(-1)
    cdef double complex[::1] b1 = k1.reshape(-1)
    cdef double complex[::1] b2 = k2.reshape(-1)
    cdef double complex[::1] b3 = k3.reshape(-1)
    cdef double complex[::1] b4 = k4.reshape(-1)
    cdef double complex[::1] o = out.reshape(-1)
    cdef double h = dt / 6.0
    cdef Py_ssize_t i, n = a.shape[0]
    for i in range(n):
        o[i] = a[i] + h * (b1[i] + 2.0 * b2[i] + 2.0 * b3[i] + b4[i])


def recip_one_plus(cnp.ndarray w, cnp.ndarray out):
    """out = 1/(1+w) pointwise; returns min |1+w| over the grid."""
    cdef double complex[::1] x = w.reshape(-1)
    cdef double complex[::1] o = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double re, im, mag2, m2 = -1.0
    cdef double complex z
    for i in range(n):
        z = 1.0 + x[i]
        re = z.real
        im = z.imag
        mag2 = re * re + im * im
        if m2 < 0.0 or mag2 < m2:
            m2 = mag2
        o[i] = z
    cdef double m = sqrt(m2) if m2 > 0.0 else 0.0
    if m > 0.0:
        for i in range(n):
            o[i] = 1.0 / o[i]
    return m


def weighted_norm_sq(cnp.ndarray c, cnp.ndarray wgt):
    cdef double complex[::1] x = c.reshape(-1)
    cdef double[::1] w = wgt.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double acc = 0.0, re, im
    for i in range(n):
        re = x[i].real
        im = x[i].imag
        acc += w[i] * (re * re + im * im)
    return acc


def conj_flip(cnp.ndarray c, cnp.ndarray out):
    cdef double complex[::1] x = c.reshape(-1)
    cdef double complex[::1] o = out.reshape(-1)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double complex z
    for i in range(n):
        z = x[n - 1 - i]
        o[i] = z.real - 1j * z.imag
