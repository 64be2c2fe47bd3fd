"""TOML run specifications: parsing, validation, canonical serialization.

One format for every subcommand. parse_spec fills defaults and validates
eagerly (field errors carry the dotted path, syntax errors the parser's
line/column), serialize_spec writes the canonical form, and the two
compose into the round trip serialize(parse(x)) == serialize(parse(serialize(parse(x)))).
"""

import logging

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import ParseError, ValidationError
from .fields import QPFunction, norm, project, qp_zero
from .lattice import FrequencyLattice

log = logging.getLogger(__name__)

SYSTEMS = ("diff", "undiff", "linearized")
SUITE_CHECKS = ("b1", "b2", "com1", "com2", "com3", "prod1", "prod2",
                "prod3", "para-err", "Y-moser", "b-bounds", "a-bounds",
                "a-material-derivative", "M-bounds")
FORMATS = ("csv", "npz")

_SECTION_ORDER = ("lattice", "initial", "dynamics", "output", "suite",
                  "iterate", "refine", "dispersion")


def _field(path, msg):
    raise ValidationError("%s: %s" % (path, msg))


def _get_num(table, key, path, default=None, kind=float, minimum=None,
             strict=False):
    if key not in table:
        if default is None:
            _field("%s.%s" % (path, key), "required field is missing")
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _field("%s.%s" % (path, key), "expected a number, got %r" % (val,))
    if kind is int and not isinstance(val, int):
        _field("%s.%s" % (path, key), "expected an integer, got %r" % (val,))
    val = kind(val)
    if minimum is not None:
        if strict and val <= minimum:
            _field("%s.%s" % (path, key), "must be > %g" % minimum)
        if not strict and val < minimum:
            _field("%s.%s" % (path, key), "must be >= %g" % minimum)
    return val


def _get_str(table, key, path, default=None, choices=None):
    if key not in table:
        if default is None:
            _field("%s.%s" % (path, key), "required field is missing")
        return default
    val = table[key]
    if not isinstance(val, str):
        _field("%s.%s" % (path, key), "expected a string, got %r" % (val,))
    if choices is not None and val not in choices:
        _field("%s.%s" % (path, key),
               "must be one of %s, got %r" % (list(choices), val))
    return val


def _reject_unknown(table, path, known):
    for key in table:
        if key not in known:
            _field("%s.%s" % (path, key), "unknown field")


def _norm_lattice(table):
    if not isinstance(table.get("k"), list) or not table["k"]:
        _field("lattice.k", "required: a nonempty list of wave numbers")
    k = []
    for i, v in enumerate(table["k"]):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _field("lattice.k[%d]" % i, "expected a number, got %r" % (v,))
        k.append(float(v))
    N = _get_num(table, "N", "lattice", kind=int, minimum=1)
    tol = _get_num(table, "tol", "lattice", default=1e-12, minimum=0.0,
                   strict=True)
    d = _get_num(table, "d", "lattice", default=len(k), kind=int, minimum=1)
    if d != len(k):
        _field("lattice.d", "d = %d does not match len(k) = %d"
               % (d, len(k)))
    _reject_unknown(table, "lattice", {"k", "N", "tol", "d"})
    # surfaces RationalDependence (a ValidationError) for dependent k
    FrequencyLattice(k, N=N, tol=tol)
    return {"d": d, "k": k, "N": N, "tol": tol}


_UNKNOWNS = {"diff": ("W", "R"), "undiff": ("W", "Q"),
             "linearized": ("w", "r")}


def _norm_modes(entries, name, d, N):
    if not isinstance(entries, list):
        _field("initial.%s" % name, "expected an array of mode tables")
    out = []
    for i, entry in enumerate(entries):
        path = "initial.%s[%d]" % (name, i)
        if not isinstance(entry, dict):
            _field(path, "expected a table with j/re/im")
        _reject_unknown(entry, path, {"j", "re", "im"})
        j = entry.get("j")
        if not isinstance(j, list) or len(j) != d or \
                not all(isinstance(c, int) for c in j):
            _field(path + ".j", "expected a list of %d integers" % d)
        if any(abs(c) > N for c in j):
            _field(path + ".j", "index %s outside the N=%d box" % (j, N))
        re = _get_num(entry, "re", path, default=0.0)
        im = _get_num(entry, "im", path, default=0.0)
        out.append({"j": [int(c) for c in j], "re": re, "im": im})
    return out


def _norm_initial(table, system, d, N):
    kind = _get_str(table, "kind", "initial", choices=("modes", "random"))
    names = _UNKNOWNS[system]
    if kind == "random":
        _reject_unknown(table, "initial",
                        {"kind", "decay", "target_A", "seed"})
        return {
            "kind": "random",
            "decay": _get_num(table, "decay", "initial", default=3.1,
                              minimum=0.0, strict=True),
            "target_A": _get_num(table, "target_A", "initial", default=0.1,
                                 minimum=0.0),
            "seed": _get_num(table, "seed", "initial", default=0, kind=int,
                             minimum=0),
        }
    _reject_unknown(table, "initial", {"kind"} | set(names))
    out = {"kind": "modes"}
    for name in names:
        out[name] = _norm_modes(table.get(name, []), name, d, N)
    return out


def _norm_dynamics(table, d):
    system = _get_str(table, "system", "dynamics", choices=SYSTEMS
                      + ("linearized-with-background-ref",))
    if system == "linearized-with-background-ref":
        system = "linearized"
    s = _get_num(table, "s", "dynamics", default=2.1)
    if s <= 0.5 * (d + 1):
        _field("dynamics.s", "must exceed (d+1)/2 = %g" % (0.5 * (d + 1)))
    from .dynamics import EPS_CHORD
    out = {
        "system": system,
        "s": s,
        "dt": _get_num(table, "dt", "dynamics", default=1e-3, minimum=0.0,
                       strict=True),
        "t_max": _get_num(table, "t_max", "dynamics", default=1.0,
                          minimum=0.0, strict=True),
        "projector_policy": _get_str(table, "projector_policy", "dynamics",
                                     default="every-step",
                                     choices=("every-step", "every-k-steps")),
        "projector_k": _get_num(table, "projector_k", "dynamics", default=1,
                                kind=int, minimum=1),
        "monitor_stride": _get_num(table, "monitor_stride", "dynamics",
                                   default=1, kind=int, minimum=1),
        "eps_chord": _get_num(table, "eps_chord", "dynamics",
                              default=EPS_CHORD, minimum=0.0, strict=True),
        "c_stab": _get_num(table, "c_stab", "dynamics", default=1.0,
                           minimum=0.0, strict=True),
    }
    background = _get_str(table, "background", "dynamics", default="")
    if background and system != "linearized":
        _field("dynamics.background",
               "only the linearized system takes a background reference")
    if background:
        import os
        if not os.path.exists(background):
            _field("dynamics.background",
                   "referenced checkpoint %r does not exist" % background)
    out["background"] = background
    _reject_unknown(table, "dynamics", set(out) | {"background"})
    return out


def _norm_output(table):
    stride = _get_num(table, "stride", "output", default=1, kind=int,
                      minimum=1)
    times = table.get("checkpoint_times", [])
    if not isinstance(times, list):
        _field("output.checkpoint_times", "expected a list of times")
    for i, v in enumerate(times):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
            _field("output.checkpoint_times[%d]" % i,
                   "expected a nonnegative time, got %r" % (v,))
    formats = table.get("formats", ["csv"])
    if not isinstance(formats, list) or not formats:
        _field("output.formats", "expected a nonempty list")
    for f in formats:
        if f not in FORMATS:
            _field("output.formats",
                   "unknown format %r (known: %s)" % (f, list(FORMATS)))
    out = {
        "directory": _get_str(table, "directory", "output", default="out"),
        "stride": stride,
        "checkpoint_times": sorted(float(v) for v in times),
        "formats": list(formats),
    }
    _reject_unknown(table, "output", set(out))
    return out


def _norm_suite(table, s):
    checks = table.get("checks", list(SUITE_CHECKS))
    if not isinstance(checks, list) or not checks:
        _field("suite.checks", "expected a nonempty list of check ids")
    for c in checks:
        if c not in SUITE_CHECKS:
            _field("suite.checks",
                   "unknown check %r (known: %s)" % (c, list(SUITE_CHECKS)))
    out = {
        "trials": _get_num(table, "trials", "suite", default=100, kind=int,
                           minimum=1),
        "radius": _get_num(table, "radius", "suite", default=0.2,
                           minimum=0.0, strict=True),
        "seed": _get_num(table, "seed", "suite", default=0, kind=int,
                         minimum=0),
        "decay": _get_num(table, "decay", "suite", default=s + 1.0,
                          minimum=0.0, strict=True),
        "checks": list(checks),
    }
    _reject_unknown(table, "suite", set(out))
    return out


def _norm_iterate(table):
    out = {
        "m_max": _get_num(table, "m_max", "iterate", default=6, kind=int,
                          minimum=1),
        "T": _get_num(table, "T", "iterate", default=0.1, minimum=0.0,
                      strict=True),
        "dt": _get_num(table, "dt", "iterate", default=5e-3, minimum=0.0,
                       strict=True),
    }
    _reject_unknown(table, "iterate", set(out))
    return out


def _norm_refine(table):
    Ns = table.get("N_list", [8, 16, 32])
    if not isinstance(Ns, list) or len(Ns) < 2 or \
            not all(isinstance(n, int) and n >= 1 for n in Ns) or \
            sorted(Ns) != Ns:
        _field("refine.N_list", "expected an increasing list of >= 2 sizes")
    out = {
        "N_list": [int(n) for n in Ns],
        "T": _get_num(table, "T", "refine", default=0.05, minimum=0.0,
                      strict=True),
        "dt": _get_num(table, "dt", "refine", default=1e-3, minimum=0.0,
                       strict=True),
        "rho": _get_num(table, "rho", "refine", default=0.05, minimum=0.0,
                        strict=True),
        "seed": _get_num(table, "seed", "refine", default=0, kind=int,
                         minimum=0),
    }
    _reject_unknown(table, "refine", set(out))
    return out


def _norm_dispersion(table, d, N):
    j = table.get("j")
    if not isinstance(j, list) or len(j) != d or \
            not all(isinstance(c, int) for c in j):
        _field("dispersion.j", "expected a list of %d integers" % d)
    if any(abs(c) > N for c in j):
        _field("dispersion.j", "index %s outside the N=%d box" % (j, N))
    out = {
        "j": [int(c) for c in j],
        "amplitude": _get_num(table, "amplitude", "dispersion",
                              default=1e-6, minimum=0.0),
    }
    _reject_unknown(table, "dispersion", set(out))
    return out


class SimulationSpec:
    """A fully validated, defaults-filled run description."""

    def __init__(self, data):
        self.data = data

    def __eq__(self, other):
        return isinstance(other, SimulationSpec) and self.data == other.data

    @property
    def system(self):
        return self.data["dynamics"]["system"]

    @property
    def s(self):
        return self.data["dynamics"]["s"]

    def lattice(self, N=None):
        sec = self.data["lattice"]
        return FrequencyLattice(sec["k"], N=sec["N"] if N is None else N,
                                tol=sec["tol"])

    def run_config(self, checkpoint_dir=None):
        from .stepping import RunConfig
        dyn = self.data["dynamics"]
        out = self.data["output"]
        return RunConfig(
            dt=dyn["dt"], t_max=dyn["t_max"],
            projector_policy=dyn["projector_policy"],
            projector_k=dyn["projector_k"],
            monitor_stride=dyn["monitor_stride"],
            eps_chord=dyn["eps_chord"], c_stab=dyn["c_stab"],
            checkpoint_times=tuple(out["checkpoint_times"]),
            checkpoint_dir=checkpoint_dir,
        )

    def initial_state(self, lattice=None, seed_override=None):
        """Build the configured initial data on the configured lattice.

        Explicit modes are projected onto the admissible class for the
        system; any nonzero content removed that way is logged as a
        warning, per the auto-projection contract.
        """
        lat = self.lattice() if lattice is None else lattice
        if "initial" not in self.data:
            raise ValidationError(
                "initial: section required for this command")
        init = self.data["initial"]
        if init["kind"] == "random":
            seed = init["seed"] if seed_override is None else seed_override
            return _random_initial(lat, self.system, init["decay"],
                                   init["target_A"], seed, self.s)
        comps = []
        for name in _UNKNOWNS[self.system]:
            u = qp_zero(lat)
            for entry in init[name]:
                idx = tuple(c + lat.N for c in entry["j"])
                u.coeffs[idx] += entry["re"] + 1j * entry["im"]
            comps.append(u)
        return _project_initial(lat, self.system, comps)


def _project_initial(lat, system, comps):
    from .dynamics import WaveStateDiff, WaveStateUndiff
    from .linearized import LinState
    names = _UNKNOWNS[system]
    fixed = []
    for name, u in zip(names, comps):
        if system == "linearized":
            v = project(u, "Psharp")
        elif system == "diff":
            # R's zero mode is genuine, only strictly positive
            # frequencies are outside the class
            v = project(u, "Psharp") if name == "W" else _keep_mean(u)
        else:
            v = project(u, "Pi" if name == "W" else "Pr")
        drop = float(np.max(np.abs(v.coeffs - u.coeffs))) \
            if u.coeffs.size else 0.0
        if drop > 0.0:
            log.warning("initial %s adjusted onto its class "
                        "(largest coefficient change %.3e)", name, drop)
        fixed.append(v)
    if system == "diff":
        return WaveStateDiff(*fixed)
    if system == "undiff":
        return WaveStateUndiff(*fixed)
    return LinState(*fixed)


def _keep_mean(u):
    v = QPFunction(u.lattice, u.coeffs.copy())
    v.coeffs[u.lattice.xi_box > 0] = 0.0
    return v


def _random_initial(lat, system, decay, target_A, seed, s):
    from .dynamics import WaveStateDiff, WaveStateUndiff, control_params, \
        differentiate_state
    from .linearized import LinState
    rng = np.random.Generator(np.random.Philox(key=seed))
    comps = []
    for _ in range(2):
        idx = np.indices(lat.shape_box) - lat.N
        n2 = 1.0 + np.einsum("i...,i...->...", idx, idx).astype(float)
        c = n2 ** (-decay / 2.0) * np.exp(2j * np.pi * rng.random(lat.shape_box))
        c[lat.xi_box >= 0] = 0.0
        comps.append(QPFunction(lat, c))
    if system == "diff":
        state = WaveStateDiff(*comps)
        A, _ = control_params(state, s)
        scale = target_A / A if A > 0 else 0.0
        return WaveStateDiff(QPFunction(lat, scale * comps[0].coeffs),
                             QPFunction(lat, scale * comps[1].coeffs))
    if system == "linearized":
        size = float(np.hypot(norm(comps[0], s - 0.5),
                              norm(comps[1], s - 0.5, 0.5)))
        scale = target_A / size if size > 0 else 0.0
        return LinState(QPFunction(lat, scale * comps[0].coeffs),
                        QPFunction(lat, scale * comps[1].coeffs))
    # position form: target the differentiated state's A, refining the
    # linear rescale once since R = Q_alpha/(1+W_alpha) is not linear
    state = WaveStateUndiff(*comps)
    for _ in range(2):
        A, _ = control_params(differentiate_state(state), s)
        if A == 0.0:
            return WaveStateUndiff(QPFunction(lat, 0.0 * comps[0].coeffs),
                                   QPFunction(lat, 0.0 * comps[1].coeffs))
        scale = target_A / A
        state = WaveStateUndiff(QPFunction(lat, scale * state.W.coeffs),
                                QPFunction(lat, scale * state.Q.coeffs))
    return state


def parse_spec(text):
    """Parse and validate a TOML run specification."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError("invalid TOML: %s" % exc)
    _reject_unknown(raw, "spec", set(_SECTION_ORDER))
    # initial is optional: the suite/refine/dispersion commands build
    # their own data, so only state-evolving runs need it
    for req in ("lattice", "dynamics"):
        if req not in raw:
            _field(req, "required section is missing")
    for sec in ("lattice", "initial", "dynamics"):
        if sec in raw and not isinstance(raw[sec], dict):
            _field(sec, "expected a table")
    data = {}
    data["lattice"] = _norm_lattice(raw["lattice"])
    d, N = data["lattice"]["d"], data["lattice"]["N"]
    data["dynamics"] = _norm_dynamics(raw["dynamics"], d)
    if "initial" in raw:
        data["initial"] = _norm_initial(raw["initial"],
                                        data["dynamics"]["system"], d, N)
    data["output"] = _norm_output(raw.get("output", {}))
    if "suite" in raw:
        data["suite"] = _norm_suite(raw["suite"], data["dynamics"]["s"])
    if "iterate" in raw:
        data["iterate"] = _norm_iterate(raw["iterate"])
    if "refine" in raw:
        data["refine"] = _norm_refine(raw["refine"])
    if "dispersion" in raw:
        data["dispersion"] = _norm_dispersion(raw["dispersion"], d, N)
    return SimulationSpec(data)


def _toml_scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"%s"' % v.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(v, list):
        return "[%s]" % ", ".join(_toml_scalar(x) for x in v)
    raise TypeError("cannot serialize %r" % (v,))


def serialize_spec(spec):
    """Canonical TOML form: fixed section and key order, repr floats."""
    lines = []
    for section in _SECTION_ORDER:
        if section not in spec.data:
            continue
        table = spec.data[section]
        lines.append("[%s]" % section)
        arrays = []
        for key, val in table.items():
            if isinstance(val, list) and val and isinstance(val[0], dict):
                arrays.append((key, val))
                continue
            lines.append("%s = %s" % (key, _toml_scalar(val)))
        for key, entries in arrays:
            for entry in entries:
                lines.append("")
                lines.append("[[%s.%s]]" % (section, key))
                for k2, v2 in entry.items():
                    lines.append("%s = %s" % (k2, _toml_scalar(v2)))
        lines.append("")
    return "\n".join(lines)
