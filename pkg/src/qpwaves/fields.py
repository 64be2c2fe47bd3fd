"""Torus Fourier coefficients and the operator calculus on them.

All linear operators here are diagonal in coefficient space (derivatives,
the Hilbert transform, the holomorphic projections); nonlinear operations
(products, reciprocals) round-trip through the padded collocation grid of
the lattice. Coefficients always mean actual Fourier coefficients u_j of
the parent torus function, stored in a centered box.
"""

import numpy as np

from . import _kernels as kn
from .errors import SurfaceDegenerate


class QPFunction:
    """A truncated coefficient array tied to a frequency lattice."""

    __slots__ = ("lattice", "coeffs")

    def __init__(self, lattice, coeffs):
        coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
        if coeffs.shape != lattice.shape_box:
            raise ValueError(
                "coefficient shape %s does not match lattice box %s"
                % (coeffs.shape, lattice.shape_box)
            )
        self.lattice = lattice
        self.coeffs = coeffs

    def copy(self):
        return QPFunction(self.lattice, self.coeffs.copy())

    def __add__(self, other):
        _check_same_lattice(self, other)
        return QPFunction(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_lattice(self, other)
        return QPFunction(self.lattice, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return QPFunction(self.lattice, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return QPFunction(self.lattice, -self.coeffs)

    def __repr__(self):
        return "QPFunction(d=%d, N=%d, |c|_max=%.3e)" % (
            self.lattice.d,
            self.lattice.N,
            float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0,
        )


def _check_same_lattice(u, v):
    if u.lattice is not v.lattice and not u.lattice.compatible(v.lattice):
        raise ValueError("operands live on incompatible lattices")


def qp_zero(lattice):
    return QPFunction(lattice, np.zeros(lattice.shape_box, dtype=np.complex128))


def qp_constant(lattice, c):
    u = qp_zero(lattice)
    u.coeffs[(lattice.N,) * lattice.d] = c
    return u


def qp_mode(lattice, j, amp=1.0):
    """Single Fourier mode amp * e^{i<j, alpha>}."""
    u = qp_zero(lattice)
    u.coeffs[lattice.index_of(j)] = amp
    return u


# ---------------------------------------------------------------------------
# grid synthesis / analysis

def grid_from_coeffs(lattice, coeffs):
    """Padded-grid samples of the function with the given box coefficients."""
    spec = np.empty(lattice.shape_pad, dtype=np.complex128)
    kn.pack(spec, np.ascontiguousarray(coeffs * lattice.size_pad), lattice.pack_index)
    return np.fft.ifftn(spec)


def coeffs_from_grid(lattice, grid):
    """Box coefficients of a padded-grid field (modes outside the box drop)."""
    raw = np.fft.fftn(grid)
    out = np.empty(lattice.shape_box, dtype=np.complex128)
    kn.gather_scaled(raw, lattice.pack_index, 1.0 / lattice.size_pad, out)
    return out


def to_grid(u, size=None):
    """Sample u on an equispaced torus grid (default: the padded grid)."""
    lat = u.lattice
    if size is None or size == lat.M:
        return grid_from_coeffs(lat, u.coeffs)
    if size < 2 * lat.N + 1:
        raise ValueError("grid must have at least 2N+1 points per dimension")
    spec = np.zeros((size,) * lat.d, dtype=np.complex128)
    idx = _wrap_index(lat, size)
    spec.reshape(-1)[idx] = u.coeffs.reshape(-1) * size ** lat.d
    return np.fft.ifftn(spec)


def to_coeffs(grid, lattice):
    """Discrete Fourier analysis of a grid field down to the coefficient box."""
    grid = np.asarray(grid, dtype=np.complex128)
    size = grid.shape[0]
    if grid.shape != (size,) * lattice.d or size < 2 * lattice.N + 1:
        raise ValueError("grid shape incompatible with lattice")
    if size == lattice.M:
        return QPFunction(lattice, coeffs_from_grid(lattice, grid))
    raw = np.fft.fftn(grid)
    idx = _wrap_index(lattice, size)
    c = raw.reshape(-1)[idx] / size ** lattice.d
    return QPFunction(lattice, c.reshape(lattice.shape_box))


def _wrap_index(lattice, size):
    j1 = np.arange(-lattice.N, lattice.N + 1)
    mesh = np.meshgrid(*[(j1 % size) for _ in range(lattice.d)], indexing="ij")
    return np.ravel_multi_index([m.reshape(-1) for m in mesh], (size,) * lattice.d)


# ---------------------------------------------------------------------------
# diagonal operators

def _diag_apply(u, diag):
    out = np.empty_like(u.coeffs)
    kn.apply_diag(u.coeffs, diag, out)
    return QPFunction(u.lattice, out)


def _cached_table(lattice, key, builder):
    cache = lattice.__dict__.setdefault("_table_cache", {})
    if key not in cache:
        cache[key] = builder()
    return cache[key]


def derivative_alpha(u, weight="d_alpha", theta=1.0):
    """Directional derivative weights along the line direction.

    weight: "d_alpha" multiplies by i*xi, "abs" by |xi|^theta,
    "bracket" by (1+xi^2)^(theta/2).
    """
    lat = u.lattice
    if weight == "d_alpha":
        table = _cached_table(lat, ("dalpha",), lambda: 1j * lat.xi_box + 0j)
    elif weight == "abs":
        table = _cached_table(
            lat, ("abs", theta), lambda: (np.abs(lat.xi_box) ** theta) + 0j
        )
    elif weight == "bracket":
        table = _cached_table(
            lat,
            ("bracket", theta),
            lambda: ((1.0 + lat.xi_box ** 2) ** (theta / 2.0)) + 0j,
        )
    else:
        raise ValueError("unknown weight %r" % (weight,))
    return _diag_apply(u, table)


def derivative_coord(u, axis):
    """Partial derivative in one torus coordinate (multiplier i*j_axis)."""
    lat = u.lattice
    def build():
        j1 = np.arange(-lat.N, lat.N + 1)
        shape = (-1,) + (1,) * (lat.d - 1 - axis)
        return (1j * np.reshape(j1, shape)) * np.ones(lat.shape_box)
    table = _cached_table(lat, ("coord", axis), build)
    return _diag_apply(u, table)


def hilbert(u):
    """Fourier multiplier -i sgn(xi_alpha); the zero mode is annihilated."""
    lat = u.lattice
    table = _cached_table(lat, ("hilbert",), lambda: -1j * lat.sgn_box + 0j)
    return _diag_apply(u, table)


def _projector_mask(lattice, which, layout="box"):
    xi = lattice.xi_box if layout == "box" else lattice.xi_pad
    mask = np.zeros(xi.shape)
    if which in ("P", "Psharp", "Pr", "Pi"):
        mask[xi < 0] = 1.0
    elif which in ("Pbar", "Pbarsharp"):
        mask[xi > 0] = 1.0
    if which in ("P", "Pbar"):
        mask[xi == 0] = 0.5
    elif which == "P0":
        mask[xi == 0] = 1.0
    return mask


def project(u, which):
    """Holomorphic-side projections.

    P keeps xi<0 and half the mean, Pbar mirrors; Psharp/Pbarsharp kill the
    mean entirely; Pr = Psharp + Re on the mean, Pi = Psharp + i*Im on it.
    """
    lat = u.lattice
    if which not in ("P0", "P", "Pbar", "Psharp", "Pbarsharp", "Pr", "Pi"):
        raise ValueError("unknown projection %r" % (which,))
    mask = _cached_table(
        lat, ("proj", which), lambda: _projector_mask(lat, which) + 0j
    )
    out = _diag_apply(u, mask)
    center = (lat.N,) * lat.d
    if which == "Pr":
        out.coeffs[center] = np.real(u.coeffs[center])
    elif which == "Pi":
        out.coeffs[center] = 1j * np.imag(u.coeffs[center])
    return out


def pad_projector_mask(lattice, which):
    """Projection mask on the padded spectrum (for grid-level pipelines)."""
    return _cached_table(
        lattice, ("projpad", which), lambda: _projector_mask(lattice, which, "pad")
    )


def conj_qp(u):
    """Complex conjugate: coefficients conjugated and index-reversed."""
    out = np.empty_like(u.coeffs)
    kn.conj_flip(u.coeffs, out)
    return QPFunction(u.lattice, out)


def real_part(u):
    return 0.5 * (u + conj_qp(u))


def imag_part(u):
    v = u - conj_qp(u)
    return QPFunction(u.lattice, -0.5j * v.coeffs)


# ---------------------------------------------------------------------------
# nonlinear operations

def multiply(u, v):
    """Dealiased pointwise product, truncated back to the box."""
    _check_same_lattice(u, v)
    lat = u.lattice
    gu = grid_from_coeffs(lat, u.coeffs)
    gv = grid_from_coeffs(lat, v.coeffs)
    gu *= gv
    return QPFunction(lat, coeffs_from_grid(lat, gu))


def reciprocal_one_plus(w, eps_chord=1e-6):
    """Pointwise 1/(1+w) on the padded grid, analyzed back.

    Raises SurfaceDegenerate when min |1+w| <= eps_chord.
    """
    lat = w.lattice
    g = grid_from_coeffs(lat, w.coeffs)
    inv = np.empty_like(g)
    m = kn.recip_one_plus(g, inv)
    if m <= eps_chord:
        raise SurfaceDegenerate(m, eps_chord)
    return QPFunction(lat, coeffs_from_grid(lat, inv))


# ---------------------------------------------------------------------------
# norms and predicates

def _norm_weight(lattice, s, theta):
    def build():
        w = np.ones(lattice.shape_box)
        if s != 0.0:
            w *= (1.0 + lattice.jsq_box) ** s
        if theta != 0.0:
            w *= (1.0 + lattice.xi_box ** 2) ** theta
        return w
    return _cached_table(lattice, ("nw", float(s), float(theta)), build)


def norm(u, s=0.0, theta=0.0):
    """Sobolev norm (sum_j (1+|j|^2)^s (1+xi^2)^theta |u_j|^2)^(1/2)."""
    return float(np.sqrt(kn.weighted_norm_sq(u.coeffs, _norm_weight(u.lattice, s, theta))))


def norm_linf(u):
    """Maximum modulus over the padded collocation grid."""
    return float(np.max(np.abs(grid_from_coeffs(u.lattice, u.coeffs))))


def l2_inner(u, v):
    """Coefficient inner product sum_j u_j conj(v_j)."""
    _check_same_lattice(u, v)
    return complex(np.vdot(v.coeffs, u.coeffs))


def is_real(u, tol=1e-13):
    v = conj_qp(u)
    scale = max(1.0, float(np.max(np.abs(u.coeffs))))
    return float(np.max(np.abs(u.coeffs - v.coeffs))) <= tol * scale


def is_holomorphic(u, tol=1e-13, zero_mean=False):
    lat = u.lattice
    bad = np.abs(u.coeffs[lat.xi_box > 0])
    worst = float(bad.max()) if bad.size else 0.0
    if zero_mean:
        worst = max(worst, abs(complex(u.coeffs[(lat.N,) * lat.d])))
    scale = max(1.0, float(np.max(np.abs(u.coeffs))))
    return worst <= tol * scale


def embed(u, big):
    """Zero-padded embedding of u into a lattice with larger N, same k."""
    lat = u.lattice
    if not lat.same_direction(big) or big.N < lat.N:
        raise ValueError("target lattice must extend the source box")
    c = np.zeros(big.shape_box, dtype=np.complex128)
    sl = tuple(slice(big.N - lat.N, big.N + lat.N + 1) for _ in range(lat.d))
    c[sl] = u.coeffs
    return QPFunction(big, c)


def restrict(u, small):
    """Truncation of u onto a lattice with smaller N, same k."""
    lat = u.lattice
    if not lat.same_direction(small) or small.N > lat.N:
        raise ValueError("target lattice must be contained in the source box")
    sl = tuple(slice(lat.N - small.N, lat.N + small.N + 1) for _ in range(lat.d))
    return QPFunction(small, u.coeffs[sl].copy())
