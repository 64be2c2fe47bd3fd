"""Linearization of the differentiated flow around a background state.

The full-mode right-hand side is the exact directional derivative of the
grid pipeline behind rhs_diff: every padded-grid intermediate (1/(1+𝐖), Y,
b, a, M) is differentiated through, so a finite-difference check against
rhs_diff converges at rate O(eps) down to roundoff. The reduced mode keeps
the transport and principal terms, projects every term onto the mean-free
holomorphic class and takes its sources from outside.
"""

import numpy as np

from .dynamics import WaveStateDiff, diff_pipeline, EPS_CHORD
from .errors import SurfaceDegenerate
from .fields import (
    QPFunction,
    coeffs_from_grid,
    derivative_alpha,
    grid_from_coeffs,
    norm,
    project,
    qp_zero,
)
from .dynamics import _pad_project, _grid_dalpha, control_params, rhs_diff


class LinState:
    """Linearized unknowns (w, r), holomorphic with zero mean."""

    __slots__ = ("w", "r")

    def __init__(self, w, r):
        if not w.lattice.compatible(r.lattice):
            raise ValueError("components live on different lattices")
        self.w = w
        self.r = r

    @property
    def lattice(self):
        return self.w.lattice

    def copy(self):
        return LinState(self.w.copy(), self.r.copy())


class SourceTerms:
    __slots__ = ("f", "g", "db", "da", "dM")

    def __init__(self, f, g, db, da, dM):
        self.f = f
        self.g = g
        self.db = db
        self.da = da
        self.dM = dM


def _lin_pipeline(bg, lin, eps_chord=EPS_CHORD, pipeline=None):
    """Directional derivatives of every padded-grid field of the background."""
    p = pipeline or diff_pipeline(bg, eps_chord)
    lat = p["lat"]
    wg = grid_from_coeffs(lat, lin.w.coeffs)
    rg = grid_from_coeffs(lat, lin.r.coeffs)
    wag = grid_from_coeffs(lat, derivative_alpha(lin.w).coeffs)
    rag = grid_from_coeffs(lat, derivative_alpha(lin.r).coeffs)
    inv = p["inv"]
    dinv = -(inv * inv) * wg
    dY = -dinv
    dinvbar = np.conj(dinv)
    dYa = _grid_dalpha(lat, dY)
    dbg = 2.0 * np.real(_pad_project(lat, rg * p["invbar"] + p["Rg"] * dinvbar))
    dag = 2.0 * np.imag(
        _pad_project(lat, rg * np.conj(p["Rag"]) + p["Rg"] * np.conj(rag))
    )
    dMg = 2.0 * np.real(
        _pad_project(
            lat,
            rg * np.conj(p["Yag"])
            + p["Rg"] * np.conj(dYa)
            - np.conj(rag) * p["Yg"]
            - np.conj(p["Rag"]) * dY,
        )
    )
    return {
        "bg_pipe": p, "wg": wg, "rg": rg, "wag": wag, "rag": rag,
        "dinv": dinv, "dY": dY, "dinvbar": dinvbar, "dYa": dYa,
        "dbg": dbg, "dag": dag, "dMg": dMg,
    }


def delta_fields(bg, lin, eps_chord=EPS_CHORD, pipeline=None):
    """First variations (δb, δa, δM) of the advection, shift and source."""
    q = _lin_pipeline(bg, lin, eps_chord, pipeline)
    lat = q["bg_pipe"]["lat"]
    db = QPFunction(lat, coeffs_from_grid(lat, q["dbg"].astype(complex)))
    da = QPFunction(lat, coeffs_from_grid(lat, q["dag"].astype(complex)))
    dM = QPFunction(lat, coeffs_from_grid(lat, q["dMg"].astype(complex)))
    return db, da, dM


def _source_grids(q):
    p = q["bg_pipe"]
    f = (
        -q["dbg"] * p["Wag"]
        - q["wg"] * p["invbar"] * p["Rag"]
        - p["C"] * q["dinvbar"] * p["Rag"]
        + q["wg"] * p["Mg"]
        + p["C"] * q["dMg"]
    )
    g = -q["dbg"] * p["Rag"] - 1j * q["dag"] * p["inv"]
    return f, g


def source_terms(bg, lin, eps_chord=EPS_CHORD, pipeline=None):
    """Perturbative sources (f, g) of the linearized system, with δ-fields."""
    q = _lin_pipeline(bg, lin, eps_chord, pipeline)
    lat = q["bg_pipe"]["lat"]
    fg, gg = _source_grids(q)
    f = QPFunction(lat, coeffs_from_grid(lat, fg))
    g = QPFunction(lat, coeffs_from_grid(lat, gg))
    db = QPFunction(lat, coeffs_from_grid(lat, q["dbg"].astype(complex)))
    da = QPFunction(lat, coeffs_from_grid(lat, q["dag"].astype(complex)))
    dM = QPFunction(lat, coeffs_from_grid(lat, q["dMg"].astype(complex)))
    return SourceTerms(f, g, db, da, dM)


def _principal_grids(q, principal):
    """Transport plus principal terms, no sources, on the padded grid."""
    p = q["bg_pipe"]
    chord = p["C"] if principal == "chord" else 1.0 + p["Wag"]
    wt = -p["bg"] * q["wag"] - chord * p["invbar"] * q["rag"]
    rt = -p["bg"] * q["rag"] + 1j * (1.0 + p["ag"]) * (p["inv"] ** 2) * q["wg"]
    return wt, rt


def linearized_rhs(bg, lin, mode="full", sources=None, principal="chord",
                   eps_chord=EPS_CHORD, pipeline=None):
    """Right-hand side of the linearized system around bg.

    mode "full": transport + principal + internally computed sources; the
    output is the raw directional derivative of rhs_diff before any class
    projection. mode "reduced": transport + principal with every term
    projected mean-free, and (f, g) supplied from outside (default zero).
    principal "chord" uses the coefficient (1-Ȳ)(1+𝐖); "chord-derivative"
    keeps the variant reading (1-Ȳ)(1+𝐖_α) around for comparison only.
    """
    if principal not in ("chord", "chord-derivative"):
        raise ValueError("unknown principal form %r" % (principal,))
    q = _lin_pipeline(bg, lin, eps_chord, pipeline)
    lat = q["bg_pipe"]["lat"]
    wt, rt = _principal_grids(q, principal)
    if mode == "full":
        if sources is not None:
            raise ValueError("full mode computes its own sources")
        fg, gg = _source_grids(q)
        wt = wt + fg
        rt = rt + gg
        wt_c = QPFunction(lat, coeffs_from_grid(lat, wt))
        rt_c = QPFunction(lat, coeffs_from_grid(lat, rt))
        return wt_c, rt_c
    if mode != "reduced":
        raise ValueError("mode must be 'full' or 'reduced'")
    wt_c = project(QPFunction(lat, coeffs_from_grid(lat, wt)), "Psharp")
    rt_c = project(QPFunction(lat, coeffs_from_grid(lat, rt)), "Psharp")
    if sources is not None:
        wt_c = wt_c + project(sources.f, "Psharp")
        rt_c = rt_c + project(sources.g, "Psharp")
    return wt_c, rt_c


def projection_defect(bg, lin, eps_chord=EPS_CHORD):
    """Norm of the full RHS components outside the mean-free class.

    This is the size of everything the reduced equation throws away
    (commutator-type terms included), reported as one diagnostic number.
    """
    wt, rt = linearized_rhs(bg, lin, mode="full", eps_chord=eps_chord)
    dw = wt - project(wt, "Psharp")
    dr = rt - project(rt, "Psharp")
    return float(np.hypot(norm(dw), norm(dr, 0.0, 0.5)))


# ---------------------------------------------------------------------------
# energies

def _xi_weighted_sq(r):
    lat = r.lattice
    return float(np.sum(np.abs(lat.xi_box) * np.abs(r.coeffs) ** 2))


def energy_E0(lin):
    """Quadratic invariant of the flat-background flow w_t=-r_α, r_t=iw.

    Mode-wise (|ŵ|^2 + |ξ_α||r̂|^2)/2; constant along the zero-background
    linearized evolution, which is what the conservation checks monitor.
    """
    return 0.5 * (norm(lin.w) ** 2 + _xi_weighted_sq(lin.r))


def energy_Elin(bg, lin, eps_chord=EPS_CHORD, pipeline=None):
    """Weighted linearized energy around a background state.

    Grid quadrature for the (1+a)|1-Y|^2|w|^2 part, spectral sums for the
    directional-derivative part; coercive (positive) term ordering.
    """
    p = pipeline or diff_pipeline(bg, eps_chord)
    lat = p["lat"]
    wg = grid_from_coeffs(lat, lin.w.coeffs)
    weight = (1.0 + p["ag"]) * np.abs(p["inv"]) ** 2
    first = float(np.mean(weight * np.abs(wg) ** 2))
    return first + _xi_weighted_sq(lin.r) + norm(lin.r) ** 2


# ---------------------------------------------------------------------------
# two-solution comparison

def difference_experiment(bg1, bg2, T, dt, s=2.1, eps_chord=EPS_CHORD,
                          monitor_stride=1):
    """Evolve two backgrounds and fit the distance to a Gronwall envelope.

    Records the ℍ⁰ distance along both nonlinear evolutions and reports
    the smallest C with dist(t) <= dist(0) exp(C ∫(B1+B2)), the Lipschitz
    two-solution bound. A degeneracy mid-run truncates the report.
    """
    from .stepping import RunConfig, integrate  # deferred: stepping sits above this module

    def dist(u, v):
        return float(
            np.hypot(norm(u.W - v.W), norm(u.R - v.R, 0.0, 0.5))
        )

    cfg = RunConfig(dt=dt, t_max=T, eps_chord=eps_chord,
                    monitor_stride=monitor_stride)
    run1 = integrate(bg1, cfg, flow="diff", s=s, keep_states=True)
    run2 = integrate(bg2, cfg, flow="diff", s=s, keep_states=True)
    n = min(len(run1.states), len(run2.states))
    times = run1.series.t[:n]
    dists = np.array([dist(run1.states[i], run2.states[i]) for i in range(n)])
    Bsum = run1.series.B[:n] + run2.series.B[:n]
    # trapezoid integral of the joint control norm up to each sample
    integ = np.concatenate(
        ([0.0], np.cumsum(0.5 * (Bsum[1:] + Bsum[:-1]) * np.diff(times)))
    )
    d0 = dists[0]
    if d0 > 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            cs = np.log(dists[1:] / d0) / np.maximum(integ[1:], 1e-300)
        c_fit = float(np.max(cs)) if cs.size else 0.0
    else:
        c_fit = 0.0
    return {
        "t": times,
        "dist": dists,
        "B_joint": Bsum,
        "B_integral": integ,
        "c_fit": c_fit,
        "complete": bool(
            len(run1.states) == len(run2.states)
            and run1.completed and run2.completed
        ),
    }


def zero_lin(lattice):
    return LinState(qp_zero(lattice), qp_zero(lattice))
