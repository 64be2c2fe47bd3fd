"""Frequency lattice for quasiperiodic torus functions.

A function u(k_1 alpha, ..., k_d alpha) is represented by the Fourier
coefficients of its periodic parent on the d-torus, truncated to the box
|j_i| <= N. Every lattice index j carries the directional frequency
xi_alpha(j) = <j, k>, which is the symbol of -i d/dalpha and drives the
Hilbert transform, the holomorphic projections and the dyadic band cutoffs.

Coefficient arrays are stored centered: axis position m corresponds to
j = m - N. Nonlinear operations go through a padded grid of odd length
M = 4N + 3 per dimension (ratio > 2), on which quadratic products of
box-limited fields are exactly alias-free.
"""

import numpy as np

from .errors import RationalDependence


class FrequencyLattice:
    """Truncated frequency lattice with cached multiplier tables.

    Attributes
    ----------
    d : int
        Number of base frequencies.
    k : ndarray of float, shape (d,)
        Base wave numbers; rationally independent within the box.
    N : int
        Per-dimension truncation radius.
    delta_min : float
        min |<j,k>| over nonzero j in the box.
    """

    def __init__(self, k, N, tol=1e-12):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if k.ndim != 1 or k.size < 1:
            raise ValueError("k must be a nonempty 1-d vector")
        if N < 1:
            raise ValueError("N must be >= 1")
        if np.any(k == 0.0):
            raise ValueError("all base wave numbers must be nonzero")
        self.k = k
        self.d = int(k.size)
        self.N = int(N)
        self.tol = float(tol)

        self.shape_box = (2 * self.N + 1,) * self.d
        self.M = 4 * self.N + 3
        self.shape_pad = (self.M,) * self.d
        self.size_box = (2 * self.N + 1) ** self.d
        self.size_pad = self.M ** self.d

        j1 = np.arange(-self.N, self.N + 1)
        self.xi_box = self._frequency_table(j1)
        jsq = sum(
            np.reshape(j1 ** 2, (-1,) + (1,) * (self.d - 1 - ax))
            for ax in range(self.d)
        )
        self.jsq_box = jsq.astype(float)

        self._scan_independence()

        # padded tables in wrapped (FFT) layout; M odd so frequencies are
        # the symmetric integers -(M-1)/2 .. (M-1)/2
        jp = np.fft.fftfreq(self.M, d=1.0 / self.M).round().astype(int)
        self.xi_pad = self._frequency_table(jp)

        self.sgn_box = np.sign(self.xi_box)
        self.sgn_pad = np.sign(self.xi_pad)

        # scatter/gather map between the centered box and the padded spectrum
        wrapped = [(j1 % self.M) for _ in range(self.d)]
        mesh = np.meshgrid(*wrapped, indexing="ij")
        self.pack_index = np.ravel_multi_index(
            [m.reshape(-1) for m in mesh], self.shape_pad
        ).astype(np.int64)

        self.xi_max = float(np.max(np.abs(self.xi_box)))

    def _frequency_table(self, j1):
        n = j1.size
        xi = np.zeros((n,) * self.d)
        for ax in range(self.d):
            xi = xi + self.k[ax] * np.reshape(j1, (-1,) + (1,) * (self.d - 1 - ax))
        # enforce exact odd symmetry xi(-j) = -xi(j); with 0-centered index
        # sets the flip is an index negation in both layouts used here
        if j1[0] == -j1[-1]:
            flipped = xi[(slice(None, None, -1),) * self.d]
        else:
            neg = (-np.arange(n)) % n
            flipped = xi[np.ix_(*([neg] * self.d))]
        return 0.5 * (xi - flipped)

    def _scan_independence(self):
        absxi = np.abs(self.xi_box).reshape(-1)
        center = self.size_box // 2
        absxi[center] = np.inf
        arg = int(np.argmin(absxi))
        val = float(absxi[arg])
        if val <= self.tol:
            # among all offenders name the primitive relation: the one
            # with the smallest |j|^2 (multiples of it fail too)
            bad = np.flatnonzero(absxi <= self.tol)
            idx = np.indices(self.shape_box).reshape(self.d, -1) - self.N
            arg = int(bad[np.argmin(np.sum(idx[:, bad] ** 2, axis=0))])
            j = np.unravel_index(arg, self.shape_box)
            j = tuple(int(m) - self.N for m in j)
            signed = float(self.xi_box.reshape(-1)[arg])
            # report the +/- pair by its representative with leading entry > 0
            lead = next((x for x in j if x != 0), 0)
            if lead < 0:
                j = tuple(-x for x in j)
                signed = -signed
            raise RationalDependence(j, signed + 0.0, self.tol)
        self.delta_min = val

    def index_of(self, j):
        """Array position of lattice index j in the centered box."""
        j = tuple(int(x) for x in np.atleast_1d(j))
        if len(j) != self.d:
            raise ValueError("index has wrong dimension")
        if any(abs(x) > self.N for x in j):
            raise ValueError("index outside truncation box")
        return tuple(x + self.N for x in j)

    def xi_of(self, j):
        """Directional frequency <j, k>."""
        return float(self.xi_box[self.index_of(j)])

    def compatible(self, other):
        return (
            self.d == other.d
            and self.N == other.N
            and np.array_equal(self.k, other.k)
        )

    def same_direction(self, other):
        return self.d == other.d and np.array_equal(self.k, other.k)

    def __repr__(self):
        return "FrequencyLattice(d=%d, k=%s, N=%d, delta_min=%.6g)" % (
            self.d,
            np.array2string(self.k, separator=", "),
            self.N,
            self.delta_min,
        )


def validate_lattice(k, N, tol=1e-12):
    """Build a lattice, rejecting numerically rationally dependent k.

    Raises RationalDependence naming the offending index when some nonzero
    j in the box has |<j,k>| <= tol.
    """
    return FrequencyLattice(k, N, tol)
