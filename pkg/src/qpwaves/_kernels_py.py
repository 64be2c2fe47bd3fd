"""Pure-numpy fallback for the fused array kernels.

Same call signatures as the compiled module `_kernels_c`. Everything here
operates on C-contiguous arrays; callers guarantee dtype and layout.
"""

import numpy as np

IMPL = "python"


def pack(dst, src, idx):
    # scatter box coefficients into a zeroed padded spectrum
    d = dst.reshape(-1)
    d[:] = 0.0
    d[idx] = src.reshape(-1)


def gather_scaled(src, idx, scale, out):
    # gather box coefficients back out of a padded spectrum
    o = out.reshape(-1)
    np.multiply(src.reshape(-1)[idx], scale, out=o)


def apply_diag(a, diag, out):
    np.multiply(a, diag, out=out)


def axpy(y, c, k, out):
    # out = y + c*k
    np.multiply(k, c, out=out)
    out += y


def rk4_combine(y, k1, k2, k3, k4, dt, out):
    # out = y + dt/6 * (k1 + 2 k2 + 2 k3 + k4)
    np.add(k2, k3, out=out)
    out *= 2.0
    out += k1
    out += k4
    out *= dt / 6.0
    out += y


def recip_one_plus(w, out):
    """out = 1/(1+w) pointwise; returns min |1+w| over the grid."""
    np.add(w, 1.0, out=out)
    m = float(np.min(np.abs(out)))
    if m > 0.0:
        np.divide(1.0, out, out=out)
    return m


def weighted_norm_sq(c, wgt):
    # sum(wgt * |c|^2) without forming |c|^2 as a named temporary
    a = c.reshape(-1)
    return float(np.real(np.dot(wgt.reshape(-1) * a, np.conj(a))))


def conj_flip(c, out):
    # out[j] = conj(c[-j]) for a centered coefficient box
    np.conjugate(c[(slice(None, None, -1),) * c.ndim], out=out)
