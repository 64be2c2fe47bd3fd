"""Water-wave states, auxiliary fields and the two evolution right-hand sides.

Two equivalent formulations are carried side by side. The undifferentiated
unknowns (W, Q) obey a transport system driven by F; the differentiated
unknowns (𝐖, R) = (W_α, Q_α/(1+W_α)) obey the quasilinear system whose
coefficients are the advection velocity b, the frequency shift a and the
source M. Rational expressions are evaluated pointwise on the padded grid
and analyzed back, so that the two right-hand sides stay consistent to the
order of the interpolation error rather than of the box truncation.
"""

import numpy as np

from .errors import SurfaceDegenerate
from .fields import (
    QPFunction,
    conj_qp,
    derivative_alpha,
    derivative_coord,
    grid_from_coeffs,
    coeffs_from_grid,
    multiply,
    norm,
    pad_projector_mask,
    project,
    qp_constant,
    qp_zero,
    reciprocal_one_plus,
)

EPS_CHORD = 1e-6


class WaveStateDiff:
    """Differentiated surface unknowns (𝐖, R), holomorphic and mean-free."""

    __slots__ = ("W", "R")

    def __init__(self, W, R):
        if not W.lattice.compatible(R.lattice):
            raise ValueError("state components live on different lattices")
        self.W = W
        self.R = R

    @property
    def lattice(self):
        return self.W.lattice

    def copy(self):
        return WaveStateDiff(self.W.copy(), self.R.copy())


class WaveStateUndiff:
    """Position/potential unknowns (W, Q) = (Z - alpha, holomorphic trace)."""

    __slots__ = ("W", "Q")

    def __init__(self, W, Q):
        if not W.lattice.compatible(Q.lattice):
            raise ValueError("state components live on different lattices")
        self.W = W
        self.Q = Q

    @property
    def lattice(self):
        return self.W.lattice

    def copy(self):
        return WaveStateUndiff(self.W.copy(), self.Q.copy())


class AuxFields:
    """Container for the derived coefficient fields of a state."""

    __slots__ = ("Y", "b", "a", "M", "J", "F")

    def __init__(self, Y=None, b=None, a=None, M=None, J=None, F=None):
        self.Y = Y
        self.b = b
        self.a = a
        self.M = M
        self.J = J
        self.F = F


def _two_re_p(u):
    # 2 Re P[u] as a coefficient field: P[u] + conjugate mirror
    p = project(u, "P")
    return p + conj_qp(p)


def _two_im_p(u):
    p = project(u, "P")
    q = conj_qp(p)
    return QPFunction(u.lattice, -1j * (p.coeffs - q.coeffs))


def compute_Y(W, eps_chord=EPS_CHORD):
    """Y = 𝐖/(1+𝐖), the basic surface-slope ratio."""
    return multiply(W, reciprocal_one_plus(W, eps_chord))


def compute_b(R, Y):
    """Advection velocity b = 2 Re P[R(1-Ȳ)]."""
    g = multiply(R, qp_constant(R.lattice, 1.0) - conj_qp(Y))
    return _two_re_p(g)


def compute_a(R):
    """Frequency shift a = 2 Im P[R R̄_α]; nonnegative for holomorphic R."""
    arg = multiply(R, conj_qp(derivative_alpha(R)))
    return _two_im_p(arg)


def compute_M(R, Y):
    """Source term M = P̄[R̄Y_α - R_αȲ] + P[RȲ_α - R̄_αY] (projection form)."""
    Ya = derivative_alpha(Y)
    Ra = derivative_alpha(R)
    arg = multiply(R, conj_qp(Ya)) - multiply(conj_qp(Ra), Y)
    return _two_re_p(arg)


def compute_M_rational(W, R, eps_chord=EPS_CHORD):
    """M as R_α/(1+𝐖̄) + R̄_α/(1+𝐖) - b_α, the cross-check route.

    The reciprocals are realized through 1/(1+𝐖) = 1-Y with the same
    truncated Y that feeds compute_b, which keeps the identity with the
    projection form exact on the lattice instead of only up to the tail
    of the truncated reciprocal.
    """
    Ra = derivative_alpha(R)
    Y = compute_Y(W, eps_chord)
    b = compute_b(R, Y)
    one = qp_constant(W.lattice, 1.0)
    out = multiply(Ra, one - conj_qp(Y)) + multiply(conj_qp(Ra), one - Y)
    return out - derivative_alpha(b)


def compute_J(W):
    """Conformal factor J = |1+𝐖|^2."""
    one_w = qp_constant(W.lattice, 1.0) + W
    return multiply(one_w, conj_qp(one_w))


def aux_fields(state, eps_chord=EPS_CHORD):
    """All auxiliary fields of a differentiated state."""
    Y = compute_Y(state.W, eps_chord)
    out = AuxFields(
        Y=Y,
        b=compute_b(state.R, Y),
        a=compute_a(state.R),
        M=compute_M(state.R, Y),
        J=compute_J(state.W),
    )
    return out


def compute_F(state, eps_chord=EPS_CHORD):
    """Transport field F = P[(Q_α - Q̄_α)/J] of the undifferentiated flow."""
    lat = state.lattice
    Wag = grid_from_coeffs(lat, derivative_alpha(state.W).coeffs)
    Qag = grid_from_coeffs(lat, derivative_alpha(state.Q).coeffs)
    C = 1.0 + Wag
    m = float(np.min(np.abs(C)))
    if m <= eps_chord:
        raise SurfaceDegenerate(m, eps_chord)
    arg = (Qag - np.conj(Qag)) / (C * np.conj(C))
    spec = np.fft.fftn(arg)
    spec *= pad_projector_mask(lat, "P")
    return QPFunction(lat, coeffs_from_grid(lat, np.fft.ifftn(spec)))


# ---------------------------------------------------------------------------
# right-hand sides

def _pad_project(lat, g, which="P"):
    spec = np.fft.fftn(g)
    spec *= pad_projector_mask(lat, which)
    return np.fft.ifftn(spec)


def _grid_dalpha(lat, g):
    spec = np.fft.fftn(g)
    spec *= 1j * lat.xi_pad
    return np.fft.ifftn(spec)


def diff_pipeline(state, eps_chord=EPS_CHORD):
    """Padded-grid fields shared by rhs_diff and its linearization.

    Everything downstream (the nonlinear RHS and its exact directional
    derivative) reads from this one dictionary, which is what keeps the
    two in finite-difference agreement to roundoff.
    """
    lat = state.lattice
    Wg = grid_from_coeffs(lat, state.W.coeffs)
    Rg = grid_from_coeffs(lat, state.R.coeffs)
    Wag = grid_from_coeffs(lat, derivative_alpha(state.W).coeffs)
    Rag = grid_from_coeffs(lat, derivative_alpha(state.R).coeffs)
    C = 1.0 + Wg
    minc = float(np.min(np.abs(C)))
    if minc <= eps_chord:
        raise SurfaceDegenerate(minc, eps_chord)
    inv = 1.0 / C
    Yg = 1.0 - inv
    invbar = np.conj(inv)
    Yag = _grid_dalpha(lat, Yg)
    bg = 2.0 * np.real(_pad_project(lat, Rg * invbar))
    ag = 2.0 * np.imag(_pad_project(lat, Rg * np.conj(Rag)))
    Mg = 2.0 * np.real(_pad_project(lat, Rg * np.conj(Yag) - np.conj(Rag) * Yg))
    return {
        "lat": lat, "Wg": Wg, "Rg": Rg, "Wag": Wag, "Rag": Rag,
        "C": C, "inv": inv, "invbar": invbar, "Yg": Yg, "Yag": Yag,
        "bg": bg, "ag": ag, "Mg": Mg, "min_chord": minc,
    }


def rhs_diff(state, eps_chord=EPS_CHORD, pipeline=None):
    """Time derivative of (𝐖, R), projected back onto the mean-free class."""
    p = pipeline or diff_pipeline(state, eps_chord)
    lat = p["lat"]
    Wt = -p["bg"] * p["Wag"] - p["C"] * p["invbar"] * p["Rag"] + p["C"] * p["Mg"]
    Rt = -p["bg"] * p["Rag"] + 1j * (p["Yg"] - p["ag"] * p["inv"])
    Wt_c = project(QPFunction(lat, coeffs_from_grid(lat, Wt)), "Psharp")
    Rt_c = project(QPFunction(lat, coeffs_from_grid(lat, Rt)), "Psharp")
    return Wt_c, Rt_c


def rhs_undiff(state, eps_chord=EPS_CHORD):
    """Time derivative of (W, Q), projected onto the admissible classes."""
    lat = state.lattice
    Wg = grid_from_coeffs(lat, state.W.coeffs)
    Qag = grid_from_coeffs(lat, derivative_alpha(state.Q).coeffs)
    Wag = grid_from_coeffs(lat, derivative_alpha(state.W).coeffs)
    C = 1.0 + Wag
    minc = float(np.min(np.abs(C)))
    if minc <= eps_chord:
        raise SurfaceDegenerate(minc, eps_chord)
    J = np.real(C * np.conj(C))
    Fg = _pad_project(lat, (Qag - np.conj(Qag)) / J)
    Wt = -Fg * C
    Qt = -Fg * Qag + 1j * Wg - _pad_project(lat, Qag * np.conj(Qag) / J)
    Wt_c = project(QPFunction(lat, coeffs_from_grid(lat, Wt)), "Pi")
    Qt_c = project(QPFunction(lat, coeffs_from_grid(lat, Qt)), "Pr")
    return Wt_c, Qt_c


# ---------------------------------------------------------------------------
# bridges and diagnostics

def differentiate_state(u, eps_chord=EPS_CHORD):
    """Map (W, Q) to (𝐖, R) = (W_α, Q_α/(1+W_α)).

    The quotient is formed pointwise on the padded grid in one pass, so no
    intermediate truncation of the reciprocal sneaks in. Strictly
    antiholomorphic leakage is removed but the mean of R is kept: the
    quotient genuinely carries a small zero mode, and zeroing it here
    would break reconstruct_check.
    """
    lat = u.lattice
    Wa = derivative_alpha(u.W)
    Wag = grid_from_coeffs(lat, Wa.coeffs)
    Qag = grid_from_coeffs(lat, derivative_alpha(u.Q).coeffs)
    C = 1.0 + Wag
    minc = float(np.min(np.abs(C)))
    if minc <= eps_chord:
        raise SurfaceDegenerate(minc, eps_chord)
    R = QPFunction(lat, coeffs_from_grid(lat, Qag / C))
    R.coeffs[lat.xi_box > 0] = 0.0
    return WaveStateDiff(Wa, R)


def reconstruct_check(u, v):
    """Residual of the chain-rule relations between the two state forms."""
    Wa = derivative_alpha(u.W)
    Qa = derivative_alpha(u.Q)
    r1 = norm(v.W - Wa)
    prod = multiply(v.R, qp_constant(v.lattice, 1.0) + Wa)
    r2 = norm(prod - Qa)
    return r1 + r2


def control_params(state, s):
    """Control norms A (at s-1/2) and B (at s) of a differentiated state."""
    A = np.hypot(norm(state.W, s - 0.5), norm(state.R, s - 0.5, 0.5))
    B = np.hypot(norm(state.W, s), norm(state.R, s, 0.5))
    return float(A), float(B)


def _multiindices(d, k):
    if d == 1:
        yield (k,)
        return
    for head in range(k + 1):
        for tail in _multiindices(d - 1, k - head):
            yield (head,) + tail


def derivative_multi(u, kappa):
    """Repeated coordinate derivative ∂^κ with a multi-index κ."""
    out = u
    for ax, times in enumerate(kappa):
        for _ in range(times):
            out = derivative_coord(out, ax)
    return out


def energy_Ek(state, k, eps_chord=EPS_CHORD):
    """Order-k energy: E_lin summed over all coordinate multi-indices |κ|=k."""
    from .linearized import LinState, energy_Elin  # deferred: linearized builds on this module
    if k < 1:
        raise ValueError("k must be >= 1")
    pipe = diff_pipeline(state, eps_chord)
    total = 0.0
    for kappa in _multiindices(state.lattice.d, k):
        w = derivative_multi(state.W, kappa)
        r = derivative_multi(state.R, kappa)
        total += energy_Elin(state, LinState(w, r), pipeline=pipe)
    return float(total)


def zero_state_diff(lattice):
    return WaveStateDiff(qp_zero(lattice), qp_zero(lattice))


def zero_state_undiff(lattice):
    return WaveStateUndiff(qp_zero(lattice), qp_zero(lattice))
