"""Time integration of the wave flows: RK4 stepping, monitors, checkpoints.

Four flows share one driver. "diff" evolves the differentiated unknowns
(𝐖, R), "undiff" the surface pair (W, Q), "flat-linear" a perturbation
under the zero-background linearization, and "linearized-joint" a
background together with a perturbation transported by the linearization
around it. Monitors always describe the differentiated surface picture,
so the series columns mean the same thing whichever flow produced them.
"""

import numpy as np

from . import _kernels as K
from .errors import NonFinite, SurfaceDegenerate, ValidationError
from .fields import QPFunction, norm, qp_zero, grid_from_coeffs
from .dynamics import (EPS_CHORD, WaveStateDiff, WaveStateUndiff,
                       control_params, diff_pipeline, differentiate_state,
                       energy_Ek, rhs_diff, rhs_undiff, zero_state_diff)
from .linearized import (LinState, energy_E0, energy_Elin, linearized_rhs,
                         source_terms)

_POLICIES = ("every-step", "every-k-steps")
_FLOWS = ("diff", "undiff", "flat-linear", "linearized-joint")


class RunConfig:
    """Integration parameters for one run.

    The stability knob c_stab bounds dt against the fastest linear mode,
    dt <= c_stab / sqrt(max |xi|), checked once the lattice is known.
    """

    def __init__(self, dt, t_max, projector_policy="every-step",
                 projector_k=1, monitor_stride=1, eps_chord=EPS_CHORD,
                 integrator="rk4", c_stab=1.0, checkpoint_times=(),
                 checkpoint_dir=None):
        if dt <= 0.0:
            raise ValidationError("dt must be positive, got %g" % dt)
        if t_max < 0.0:
            raise ValidationError("t_max must be nonnegative, got %g" % t_max)
        if projector_policy not in _POLICIES:
            raise ValidationError(
                "projector_policy must be one of %s" % (_POLICIES,))
        if projector_policy == "every-k-steps" and projector_k < 1:
            raise ValidationError("projector_k must be a positive integer")
        if monitor_stride < 1:
            raise ValidationError("monitor_stride must be a positive integer")
        if integrator != "rk4":
            raise ValidationError("integrator %r not implemented" % integrator)
        if eps_chord <= 0.0:
            raise ValidationError("eps_chord must be positive")
        if c_stab <= 0.0:
            raise ValidationError("c_stab must be positive")
        self.dt = float(dt)
        self.t_max = float(t_max)
        self.projector_policy = projector_policy
        self.projector_k = int(projector_k)
        self.monitor_stride = int(monitor_stride)
        self.eps_chord = float(eps_chord)
        self.integrator = integrator
        self.c_stab = float(c_stab)
        self.checkpoint_times = tuple(float(t) for t in checkpoint_times)
        self.checkpoint_dir = checkpoint_dir

    def check_stability(self, lattice):
        if lattice.xi_max <= 0.0:
            return
        limit = self.c_stab / np.sqrt(lattice.xi_max)
        if self.dt > limit:
            raise ValidationError(
                "dt = %g exceeds the stability bound %g = c_stab/sqrt(max|xi|)"
                % (self.dt, limit))


class JointState:
    """A background surface with a perturbation riding on it."""

    __slots__ = ("bg", "lin")

    def __init__(self, bg, lin):
        self.bg = bg
        self.lin = lin

    @property
    def lattice(self):
        return self.bg.lattice

    def copy(self):
        return JointState(self.bg.copy(), self.lin.copy())


class TimeSeries:
    """Aligned monitor arrays sampled along a run.

    normW/normR are H^s norms, normW_half/normR_half the H^{s,1/2}
    variants, all of the differentiated fields. energies maps a requested
    order k to the sampled E^k array. E0/Elin are populated only by the
    linear flows. leakage is the coefficient energy at xi > 0 measured on
    the raw stepped state, before any projection is applied.
    """

    _SCALARS = ("t", "normW", "normW_half", "normR", "normR_half", "A", "B",
                "min_a", "min_chord", "leakage", "E0", "Elin")

    def __init__(self):
        for name in self._SCALARS:
            setattr(self, name, [])
        self.energies = {}

    def freeze(self):
        for name in self._SCALARS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.energies = {
            k: np.asarray(v, dtype=float) for k, v in self.energies.items()
        }
        return self

    def __len__(self):
        return len(self.t)


class RunResult:
    """What integrate() hands back: the final state, the monitor series,
    optionally every sampled state, and how the run ended."""

    def __init__(self, final, series, states, completed, reason=None,
                 checkpoints=()):
        self.final = final
        self.series = series
        self.states = states
        self.completed = completed
        self.reason = reason
        self.checkpoints = list(checkpoints)


# ---------------------------------------------------------------------------
# generic state arithmetic

def _parts(state):
    if isinstance(state, WaveStateDiff):
        return (state.W, state.R)
    if isinstance(state, WaveStateUndiff):
        return (state.W, state.Q)
    if isinstance(state, LinState):
        return (state.w, state.r)
    if isinstance(state, JointState):
        return _parts(state.bg) + _parts(state.lin)
    raise TypeError("unsupported state type %r" % type(state).__name__)


def _build(template, funcs):
    if isinstance(template, WaveStateDiff):
        return WaveStateDiff(funcs[0], funcs[1])
    if isinstance(template, WaveStateUndiff):
        return WaveStateUndiff(funcs[0], funcs[1])
    if isinstance(template, LinState):
        return LinState(funcs[0], funcs[1])
    if isinstance(template, JointState):
        return JointState(_build(template.bg, funcs[:2]),
                          _build(template.lin, funcs[2:]))
    raise TypeError("unsupported state type %r" % type(template).__name__)


def _shift(template, ks, h):
    out = []
    for u, k in zip(_parts(template), ks):
        c = np.empty_like(u.coeffs)
        K.axpy(u.coeffs, h, k.coeffs, c)
        out.append(QPFunction(u.lattice, c))
    return _build(template, out)


def step_rk4(state, rhs, dt, t0=None):
    """One classical four-stage step. No projection happens here; the
    driver owns the projector policy so pre-projection leakage can be
    recorded faithfully. Passing t0 switches to the nonautonomous calling
    convention rhs(state, t) with the proper stage times."""
    if t0 is None:
        k1 = rhs(state)
        k2 = rhs(_shift(state, k1, 0.5 * dt))
        k3 = rhs(_shift(state, k2, 0.5 * dt))
        k4 = rhs(_shift(state, k3, dt))
    else:
        k1 = rhs(state, t0)
        k2 = rhs(_shift(state, k1, 0.5 * dt), t0 + 0.5 * dt)
        k3 = rhs(_shift(state, k2, 0.5 * dt), t0 + 0.5 * dt)
        k4 = rhs(_shift(state, k3, dt), t0 + dt)
    out = []
    for u, a, b, c, d in zip(_parts(state), k1, k2, k3, k4):
        cc = np.empty_like(u.coeffs)
        K.rk4_combine(u.coeffs, a.coeffs, b.coeffs, c.coeffs, d.coeffs,
                      dt, cc)
        out.append(QPFunction(u.lattice, cc))
    return _build(state, out)


# ---------------------------------------------------------------------------
# per-flow plumbing

def _rhs_for(flow, cfg, lattice):
    if flow == "diff":
        return lambda st: rhs_diff(st, cfg.eps_chord)
    if flow == "undiff":
        return lambda st: rhs_undiff(st, cfg.eps_chord)
    if flow == "flat-linear":
        zero = zero_state_diff(lattice)
        return lambda st: linearized_rhs(zero, st, mode="reduced")
    if flow == "linearized-joint":
        def rhs(st):
            pipe = diff_pipeline(st.bg, cfg.eps_chord)
            Wt, Rt = rhs_diff(st.bg, cfg.eps_chord, pipeline=pipe)
            src = source_terms(st.bg, st.lin, cfg.eps_chord, pipeline=pipe)
            wt, rt = linearized_rhs(st.bg, st.lin, mode="reduced",
                                    sources=src, eps_chord=cfg.eps_chord,
                                    pipeline=pipe)
            return (Wt, Rt, wt, rt)
        return rhs
    raise ValidationError("flow must be one of %s" % (_FLOWS,))


def _strip_leakage(state):
    """Zero every coefficient at xi > 0, leaving means and the admissible
    spectrum untouched. This is the whole projector policy: the class
    constraints on the means are transported exactly by the flows."""
    lat = state.lattice
    mask = lat.xi_box > 0.0
    funcs = []
    for u in _parts(state):
        c = u.coeffs.copy()
        c[mask] = 0.0
        funcs.append(QPFunction(lat, c))
    return _build(state, funcs)


def _leakage_norm(state):
    lat = state.lattice
    mask = lat.xi_box > 0.0
    total = 0.0
    for u in _parts(state):
        total += float(np.sum(np.abs(u.coeffs[mask]) ** 2))
    return float(np.sqrt(total))


def _check_finite(state, t):
    for name, u in zip(("first", "second", "third", "fourth"), _parts(state)):
        if not np.all(np.isfinite(u.coeffs)):
            raise NonFinite("%s component coefficients" % name, t)


def _surface_view(state, cfg):
    """The differentiated state the monitors describe, or None for
    flat-linear runs."""
    if isinstance(state, WaveStateDiff):
        return state
    if isinstance(state, WaveStateUndiff):
        return differentiate_state(state, cfg.eps_chord)
    if isinstance(state, JointState):
        return state.bg
    return None


def _sample(series, t, state, cfg, s, energy_orders, lattice):
    # everything that can raise runs before the first append so an abort
    # never leaves the columns ragged
    surf = _surface_view(state, cfg)
    if surf is None:
        w, r = state.w, state.r
    else:
        w, r = surf.W, surf.R
        pipe = diff_pipeline(surf, 0.0)
        eks = [(k, energy_Ek(surf, k)) for k in energy_orders]
    linpair = None
    if isinstance(state, LinState):
        linpair = (energy_E0(state),
                   energy_Elin(zero_state_diff(lattice), state))
    elif isinstance(state, JointState):
        linpair = (energy_E0(state.lin),
                   energy_Elin(state.bg, state.lin, cfg.eps_chord))
    series.t.append(t)
    series.normW.append(norm(w, s))
    series.normW_half.append(norm(w, s, 0.5))
    series.normR.append(norm(r, s))
    series.normR_half.append(norm(r, s, 0.5))
    A, B = control_params(surf if surf is not None else WaveStateDiff(w, r), s)
    series.A.append(A)
    series.B.append(B)
    if surf is None:
        series.min_a.append(0.0)
        series.min_chord.append(1.0)
    else:
        series.min_a.append(float(np.min(pipe["ag"].real)))
        series.min_chord.append(pipe["min_chord"])
        for k, val in eks:
            series.energies.setdefault(k, []).append(val)
    if linpair is not None:
        series.E0.append(linpair[0])
        series.Elin.append(linpair[1])


def _maybe_checkpoint(state, t, cfg, written):
    if not cfg.checkpoint_times or cfg.checkpoint_dir is None:
        return
    from . import snapshots  # deferred: io stack is optional at run time
    import os
    for tc in cfg.checkpoint_times:
        if tc in written:
            continue
        if t >= tc - 0.5 * cfg.dt:
            path = os.path.join(cfg.checkpoint_dir,
                                "checkpoint_t%08.4f.npz" % tc)
            snapshots.export_snapshot(state, path, t=t)
            written[tc] = path


def integrate(initial, cfg, flow="diff", s=2.1, keep_states=False,
              energy_orders=()):
    """Drive one run to t_max or to a clean abort.

    Returns a RunResult. SurfaceDegenerate and NonFinite do not raise:
    the run stops, the partial series is frozen, completed goes False and
    reason keeps the exception. keep_states stores a copy of the state at
    every sample time (aligned with series.t).
    """
    if flow not in _FLOWS:
        raise ValidationError("flow must be one of %s" % (_FLOWS,))
    lattice = initial.lattice
    cfg.check_stability(lattice)
    rhs = _rhs_for(flow, cfg, lattice)
    n_steps = int(round(cfg.t_max / cfg.dt))
    series = TimeSeries()
    states = []
    written = {}
    state = initial.copy()
    reason = None
    completed = True

    def record(t, st):
        _sample(series, t, st, cfg, s, energy_orders, lattice)
        if keep_states:
            states.append(st.copy())

    try:
        record(0.0, state)
        _maybe_checkpoint(state, 0.0, cfg, written)
        for i in range(1, n_steps + 1):
            t = i * cfg.dt
            raw = step_rk4(state, rhs, cfg.dt)
            _check_finite(raw, t)
            leak = _leakage_norm(raw)
            if cfg.projector_policy == "every-step" or \
                    i % cfg.projector_k == 0:
                state = _strip_leakage(raw)
            else:
                state = raw
            surf = _surface_view(state, cfg)
            if surf is not None:
                pipe = diff_pipeline(surf, 0.0)
                if pipe["min_chord"] <= cfg.eps_chord:
                    raise SurfaceDegenerate(pipe["min_chord"],
                                            cfg.eps_chord, t)
            if i % cfg.monitor_stride == 0 or i == n_steps:
                record(t, state)
                series.leakage.append(leak)
                _maybe_checkpoint(state, t, cfg, written)
    except (SurfaceDegenerate, NonFinite) as exc:
        completed = False
        reason = exc
    # the t=0 sample has no pre-projection measurement; pad on the left
    if len(series.leakage) < len(series.t):
        series.leakage = [0.0] * (len(series.t) - len(series.leakage)) \
            + series.leakage
    series.freeze()
    return RunResult(state, series, states, completed, reason,
                     written.values())


# ---------------------------------------------------------------------------
# dispersion measurement

def dispersion_probe(lattice, j, amplitude, cfg):
    """Measured oscillation frequency of one linear mode.

    Seeds w with a single mode, runs the zero-background linearized flow,
    and fits the frequency of Re ŵ_j(t) with a three-term recurrence
    (a discrete single-tone fit). Returns 0.0 when nothing oscillates.
    """
    mu = lattice.xi_of(j)
    if mu >= 0.0:
        raise ValidationError(
            "probe mode must have xi < 0, got xi = %g" % mu)
    if amplitude == 0.0:
        return 0.0
    w0 = qp_zero(lattice)
    w0.coeffs[lattice.index_of(j)] = amplitude
    run = integrate(LinState(w0, qp_zero(lattice)), cfg,
                    flow="flat-linear", keep_states=True)
    idx = lattice.index_of(j)
    sig = np.array([st.w.coeffs[idx].real for st in run.states])
    if np.abs(sig).max() <= 1e-300:
        return 0.0
    # s_{n+1} + s_{n-1} = 2 cos(w dt) s_n for a pure tone
    num = np.sum(sig[1:-1] * (sig[2:] + sig[:-2]))
    den = 2.0 * np.sum(sig[1:-1] ** 2)
    if den == 0.0:
        return 0.0
    c = num / den
    if not -1.0 <= c <= 1.0:
        return 0.0
    dt_sample = run.series.t[1] - run.series.t[0] if len(run.series.t) > 1 \
        else cfg.dt
    return float(np.arccos(c) / dt_sample)
