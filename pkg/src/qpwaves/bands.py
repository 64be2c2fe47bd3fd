"""Dyadic decomposition along the line direction and paraproducts.

The cutoffs act on the directional frequency xi_alpha = <j, k>, not on the
lattice norm |j|, so each band is a slab of lattice modes. Band 0 is the
low block chi(xi); band l >= 1 is the shell chi(2^-l xi) - chi(2^-l+1 xi).
Summing bands 0..L telescopes exactly to the lowpass at level L, which is
the identity on the box once 2^-L xi_max <= 1.
"""

import numpy as np

from .fields import QPFunction, multiply, norm, qp_zero
from .fields import _cached_table, _diag_apply


def smooth_cutoff(x):
    """C-infinity bump: 1 on |x|<=1, 0 on |x|>=2, exp-smooth between."""
    t = np.abs(np.asarray(x, dtype=float))
    out = np.zeros(t.shape)
    out[t <= 1.0] = 1.0
    mid = (t > 1.0) & (t < 2.0)
    if np.any(mid):
        tm = t[mid]
        with np.errstate(over="ignore"):
            qa = np.exp(-1.0 / (2.0 - tm))
            qb = np.exp(-1.0 / (tm - 1.0))
        out[mid] = qa / (qa + qb)
    return out if out.ndim else float(out)


def band_count(lattice):
    """Highest band index L needed to cover the lattice box."""
    if lattice.xi_max <= 1.0:
        return 0
    L = int(np.ceil(np.log2(lattice.xi_max)))
    while lattice.xi_max > 2.0 ** L:
        L += 1
    return L


def _lowpass_table(lattice, l):
    return _cached_table(
        lattice,
        ("lp_low", int(l)),
        lambda: smooth_cutoff(lattice.xi_box / 2.0 ** l) + 0j,
    )


def _band_table(lattice, l):
    def build():
        if l == 0:
            return smooth_cutoff(lattice.xi_box) + 0j
        return (
            smooth_cutoff(lattice.xi_box / 2.0 ** l)
            - smooth_cutoff(lattice.xi_box / 2.0 ** (l - 1))
        ) + 0j
    return _cached_table(lattice, ("lp_band", int(l)), build)


def lp_lowpass(u, l):
    """Smooth cutoff of |xi_alpha| at scale 2^l."""
    if l < 0:
        return qp_zero(u.lattice)
    return _diag_apply(u, _lowpass_table(u.lattice, l))


def lp_project(u, l):
    """Dyadic band of u at scale 2^l (band 0 is the low block)."""
    if l < 0:
        raise ValueError("band index must be >= 0")
    return _diag_apply(u, _band_table(u.lattice, l))


def band_split(u):
    """All bands 0..band_count; their sum reconstructs u."""
    return [lp_project(u, l) for l in range(band_count(u.lattice) + 1)]


def band_norms(u, s=0.0, theta=0.0):
    """Per-band Sobolev norms, handy for envelope and equivalence checks."""
    return np.array([norm(b, s, theta) for b in band_split(u)])


def dyadic_norm_sq(u, s):
    """sum_l 2^(2ls) ||P_l u||^2, the dyadic side of the norm equivalence."""
    total = 0.0
    for l, b in enumerate(band_split(u)):
        total += 4.0 ** (l * s) * norm(b) ** 2
    return total


def paraproduct(f, g):
    """Split the product fg into (T_f g, T_g f, resonant part).

    T_f g collects pairs where the g band sits more than four dyadic steps
    above the f band; the resonant part keeps |band gap| <= 4. The three
    pieces sum to the dealiased product exactly, by bilinearity.
    """
    lat = f.lattice
    L = band_count(lat)
    tfg = qp_zero(lat)
    tgf = qp_zero(lat)
    res = qp_zero(lat)
    for kband in range(L + 1):
        gk = lp_project(g, kband)
        fk = lp_project(f, kband)
        if kband >= 5:
            tfg = tfg + multiply(lp_lowpass(f, kband - 5), gk)
            tgf = tgf + multiply(lp_lowpass(g, kband - 5), fk)
        # block of f within four bands of kband
        block = lp_lowpass(f, kband + 4) - lp_lowpass(f, kband - 5)
        res = res + multiply(block, gk)
    return tfg, tgf, res


def paraproduct_low_high(f, g):
    """Just T_f g, for the paradifferential pieces of evolution equations."""
    lat = f.lattice
    L = band_count(lat)
    out = qp_zero(lat)
    for kband in range(5, L + 1):
        out = out + multiply(lp_lowpass(f, kband - 5), lp_project(g, kband))
    return out
