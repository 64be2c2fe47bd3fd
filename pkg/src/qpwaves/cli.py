"""Command-line entry points and artifact writers.

Five subcommands (simulate, lemma-suite, iterate, refine, dispersion)
share one TOML spec format and one output layout: series.csv and/or
report.csv, snapshot files, and a manifest.json with the spec hash, code
version, effective seed, and wall time. Exit codes: 0 success,
2 validation/parse failure, 3 surface degeneration, 4 non-finite values,
1 anything else. Partial artifacts are flushed before a nonzero exit.

The only environment variable honored is QPWAVES_OUTPUT (output
directory override); everything else comes from the spec file and flags.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
import time

import numpy as np

from .errors import (NonFinite, ParseError, QPWavesError, SurfaceDegenerate,
                     ValidationError)
from .config import SUITE_CHECKS, parse_spec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3
EXIT_NONFINITE = 4

SERIES_CSV_VERSION = 1
REPORT_CSV_VERSION = 1

COMMANDS = ("simulate", "lemma-suite", "iterate", "refine", "dispersion")


def _code_version():
    try:
        from importlib.metadata import version
        return version("qpwaves")
    except Exception:
        return "unknown"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _series_rows(series):
    header = ["t", "normW", "normW_half", "normR", "normR_half", "A", "B",
              "min_a", "min_chord", "leakage", "E0", "Elin"]
    orders = sorted(series.energies)
    header += ["E%d" % k for k in orders]
    n = len(series.t)
    # E0/Elin exist only on linearized flows; blank cells keep the column
    # set identical across flow types
    have_lin = len(series.E0) == n
    rows = []
    for i in range(n):
        row = [series.t[i], series.normW[i], series.normW_half[i],
               series.normR[i], series.normR_half[i], series.A[i],
               series.B[i], series.min_a[i], series.min_chord[i],
               series.leakage[i],
               series.E0[i] if have_lin else "",
               series.Elin[i] if have_lin else ""]
        row += [series.energies[k][i] for k in orders]
        rows.append(row)
    return header, rows


REPORT_HEADER = ["lemma", "trial", "ratio", "max_ratio", "trials",
                 "discarded", "s", "d", "N", "radius", "seed"]


def _report_rows(reports):
    rows = []
    for rep in reports:
        p = rep.params
        for i, ratio in enumerate(rep.ratios):
            rows.append([rep.lemma, i, ratio, rep.max_ratio, rep.trials,
                         rep.discarded, p.get("s"), p.get("d"), p.get("N"),
                         p.get("radius"), p.get("seed")])
        if rep.trials == 0:
            rows.append([rep.lemma, -1, "", rep.max_ratio, 0, rep.discarded,
                         p.get("s"), p.get("d"), p.get("N"), p.get("radius"),
                         p.get("seed")])
    return rows


def _manifest(out_dir, command, spec_text, seed, threads, t0, status,
              reason, artifacts):
    data = {
        "command": command,
        "spec_sha256": hashlib.sha256(spec_text.encode()).hexdigest(),
        "code_version": _code_version(),
        "seed": seed,
        "threads": threads,
        "wall_time_s": time.monotonic() - t0,
        "exit_status": status,
        "reason": reason,
        "series_csv_version": SERIES_CSV_VERSION,
        "report_csv_version": REPORT_CSV_VERSION,
        "artifacts": sorted(artifacts),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _status_of(reason):
    if isinstance(reason, SurfaceDegenerate):
        return EXIT_DEGENERATE
    if isinstance(reason, NonFinite):
        return EXIT_NONFINITE
    return EXIT_OK if reason is None else EXIT_ERROR


def _cmd_simulate(spec, out_dir, seed):
    from . import snapshots
    from .stepping import JointState, integrate
    lat = spec.lattice()
    cfg = spec.run_config(checkpoint_dir=out_dir)
    system = spec.system
    if system == "linearized":
        lin = spec.initial_state(lat, seed_override=seed)
        background = spec.data["dynamics"]["background"]
        if background:
            bg = snapshots.load_snapshot(background, lattice=lat)
            initial = JointState(bg, lin)
            flow = "linearized-joint"
        else:
            initial = lin
            flow = "flat-linear"
    else:
        initial = spec.initial_state(lat, seed_override=seed)
        flow = system
    run = integrate(initial, cfg, flow=flow, s=spec.s)
    header, rows = _series_rows(run.series)
    _write_csv(os.path.join(out_dir, "series.csv"), header, rows)
    artifacts = ["series.csv"]
    final_path = os.path.join(out_dir, "final.npz")
    t_final = float(run.series.t[-1]) if len(run.series.t) else 0.0
    snapshots.export_snapshot(run.final, final_path, t=t_final)
    artifacts.append("final.npz")
    artifacts += [os.path.basename(p) for p in run.checkpoints]
    reason = run.reason
    return _status_of(reason), reason, artifacts


def _cmd_lemma_suite(spec, out_dir, seed):
    from . import lab
    if "suite" not in spec.data:
        raise ValidationError("suite: section required for lemma-suite")
    sd = spec.data["suite"]
    lat = spec.lattice()
    suite = lab.Suite(lat, s=spec.s, trials=sd["trials"],
                      radius=sd["radius"],
                      seed=sd["seed"] if seed is None else seed,
                      decay=sd["decay"])
    reports = []
    for check in sd["checks"]:
        if check in ("b1", "b2"):
            reports.append(lab.bernstein_check(spec.s, suite, check))
        elif check.startswith("com"):
            reports.append(lab.commutator_check(check, suite))
        elif check.startswith("prod"):
            reports.append(lab.product_check(check, suite))
        elif check == "para-err":
            reports.append(lab.paraproduct_error_check(suite))
        else:
            reports.append(lab.ww_lemma_check(check, suite))
    _write_csv(os.path.join(out_dir, "report.csv"), REPORT_HEADER,
               _report_rows(reports))
    return EXIT_OK, None, ["report.csv"]


def _cmd_iterate(spec, out_dir, seed):
    from . import lab
    if spec.system != "diff":
        raise ValidationError(
            "dynamics.system: iterate runs the differentiated system")
    it = spec.data.get("iterate") or {"m_max": 6, "T": 0.1, "dt": 5e-3}
    lat = spec.lattice()
    initial = spec.initial_state(lat, seed_override=seed)
    out = lab.iteration_experiment(initial, it["m_max"], it["T"], it["dt"],
                                   s=spec.s)
    rows = []
    for m, delta in enumerate(out["Delta"]):
        c = out["c"][m - 1] if m >= 1 else ""
        rows.append([m + 1, delta, c])
    _write_csv(os.path.join(out_dir, "report.csv"),
               ["m", "delta", "contraction"], rows)
    extra = {
        "non_contraction": bool(out["non_contraction"]),
        "limit_gap": out["limit_gap"],
        "direct_completed": bool(out["direct"] is not None),
    }
    with open(os.path.join(out_dir, "iteration.json"), "w") as fh:
        json.dump(extra, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK, None, ["report.csv", "iteration.json"]


def _cmd_refine(spec, out_dir, seed):
    from . import lab
    rf = spec.data.get("refine") or {"N_list": [8, 16, 32], "T": 0.05,
                                     "dt": 1e-3, "rho": 0.05, "seed": 0}
    use_seed = rf["seed"] if seed is None else seed
    s = spec.s
    kvec = spec.data["lattice"]["k"]
    res = lab.refinement_experiment(
        kvec, lambda lat: lab.decay_state(lat, use_seed, s, rf["rho"]),
        rf["N_list"], rf["T"], rf["dt"], s=s)
    rows = []
    for i in range(len(res["dist_h0"])):
        rows.append([res["N"][i], res["N"][i + 1], res["dist_h0"][i],
                     res["dist_hs"][i]])
    _write_csv(os.path.join(out_dir, "report.csv"),
               ["N_coarse", "N_fine", "dist_h0", "dist_hs"], rows)
    reason = None if res["completed"] else SurfaceDegenerate(0.0, 0.0)
    return _status_of(reason), reason, ["report.csv"]


def _cmd_dispersion(spec, out_dir, seed):
    from .stepping import dispersion_probe
    if "dispersion" not in spec.data:
        raise ValidationError("dispersion: section required")
    dp = spec.data["dispersion"]
    lat = spec.lattice()
    cfg = spec.run_config()
    omega = dispersion_probe(lat, tuple(dp["j"]), dp["amplitude"], cfg)
    xi = float(np.dot(dp["j"], spec.data["lattice"]["k"]))
    expected = np.sqrt(abs(xi))
    rel = abs(omega - expected) / expected if expected > 0 else ""
    _write_csv(os.path.join(out_dir, "report.csv"),
               ["j", "xi", "omega_measured", "omega_gravity", "rel_error"],
               [[" ".join(str(c) for c in dp["j"]), xi, omega, expected,
                 rel]])
    return EXIT_OK, None, ["report.csv"]


_DISPATCH = {
    "simulate": _cmd_simulate,
    "lemma-suite": _cmd_lemma_suite,
    "iterate": _cmd_iterate,
    "refine": _cmd_refine,
    "dispersion": _cmd_dispersion,
}


def run(command, spec_text, output=None, seed=None, threads=1):
    """Execute one subcommand; returns the exit status after writing
    artifacts and the manifest into the output directory."""
    t0 = time.monotonic()
    if command not in _DISPATCH:
        raise ValidationError("unknown command %r" % command)
    spec = parse_spec(spec_text)
    out_dir = output or os.environ.get("QPWAVES_OUTPUT") \
        or spec.data["output"]["directory"]
    os.makedirs(out_dir, exist_ok=True)
    status, reason, artifacts = EXIT_ERROR, None, []
    try:
        status, reason, artifacts = _DISPATCH[command](spec, out_dir, seed)
    except (SurfaceDegenerate, NonFinite, ValidationError) as exc:
        reason = exc
        status = _status_of(exc) if not isinstance(exc, ValidationError) \
            else EXIT_VALIDATION
    finally:
        _manifest(out_dir, command, spec_text, seed, threads, t0, status,
                  repr(reason) if reason is not None else None, artifacts)
    if reason is not None:
        print("error: %s" % reason, file=sys.stderr)
    return status


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qpwaves",
        description="Quasiperiodic water-wave simulations and estimate "
                    "checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--spec", required=True, help="TOML run spec")
        p.add_argument("--output", default=None,
                       help="output directory (overrides spec and "
                            "QPWAVES_OUTPUT)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the spec's random seeds")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (recorded in the manifest)")
    args = parser.parse_args(argv)
    try:
        with open(args.spec) as fh:
            spec_text = fh.read()
    except OSError as exc:
        print("error: cannot read spec: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return run(args.command, spec_text, output=args.output,
                   seed=args.seed, threads=args.threads)
    except (ParseError, ValidationError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    except QPWavesError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
