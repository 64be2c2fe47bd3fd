"""Timing comparison of the compiled kernels against the numpy fallback.

The kernel implementation is chosen at import time, so the two variants
run in subprocesses: the parent launches one worker per implementation
(QPWAVES_FORCE_PYTHON=1 for the fallback) and prints a side-by-side
table of per-call times plus an end-to-end right-hand-side timing.

    python3 benchmarks/bench_kernels.py [--n 8 32] [--repeats 200]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _micro(lat, repeats):
    from qpwaves import _kernels as kn

    rng = np.random.default_rng(0)
    box = rng.standard_normal(lat.shape_box) \
        + 1j * rng.standard_normal(lat.shape_box)
    pad_shape = (lat.M,) * lat.d
    pad = np.zeros(pad_shape, dtype=complex)
    idx = np.arange(box.size)  # layout stand-in; cost matches the real map
    diag = rng.standard_normal(lat.shape_box) + 0j
    out = np.empty_like(box)
    k1, k2, k3, k4 = (rng.standard_normal(lat.shape_box) + 0j
                      for _ in range(4))
    wgt = np.abs(diag)

    cases = {
        "pack": lambda: kn.pack(pad, box, idx),
        "gather_scaled": lambda: kn.gather_scaled(
            pad.reshape(-1), idx, 1.0, out),
        "apply_diag": lambda: kn.apply_diag(box, diag, out),
        "axpy": lambda: kn.axpy(box, 0.5, k1, out),
        "rk4_combine": lambda: kn.rk4_combine(
            box, k1, k2, k3, k4, 1e-3, out),
        "recip_one_plus": lambda: kn.recip_one_plus(box, out),
        "weighted_norm_sq": lambda: kn.weighted_norm_sq(box, wgt),
        "conj_flip": lambda: kn.conj_flip(box, out),
    }
    return {name: _best_of(fn, repeats) for name, fn in cases.items()}


def _end_to_end(lat, repeats):
    from qpwaves import lab
    from qpwaves.dynamics import rhs_diff
    from qpwaves.stepping import RunConfig, integrate

    suite = lab.Suite(lat, trials=1, radius=0.1, seed=0)
    state = lab.random_state(suite, 0)
    rhs_diff(state)  # warm the cached tables
    times = {"rhs_diff": _best_of(lambda: rhs_diff(state),
                                  max(10, repeats // 10))}
    cfg = RunConfig(dt=1e-3, t_max=0.05, monitor_stride=50)
    t0 = time.perf_counter()
    integrate(state, cfg, flow="diff")
    times["integrate_50_steps"] = time.perf_counter() - t0
    return times


def _worker(args):
    from qpwaves import _kernels as kn
    from qpwaves.lattice import FrequencyLattice

    report = {"impl": kn.IMPL, "sizes": {}}
    for N in args.n:
        lat = FrequencyLattice((1.0, 1.618033988749895), N)
        entry = _micro(lat, args.repeats)
        entry.update(_end_to_end(lat, args.repeats))
        report["sizes"][str(N)] = entry
    json.dump(report, sys.stdout)


def _launch(force_python, argv):
    env = dict(os.environ)
    if force_python:
        env["QPWAVES_FORCE_PYTHON"] = "1"
    else:
        env.pop("QPWAVES_FORCE_PYTHON", None)
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker"] + argv,
        env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[8, 32],
                    help="truncation sizes to benchmark")
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        _worker(args)
        return

    argv = ["--repeats", str(args.repeats), "--n"] + [str(n) for n in args.n]
    py = _launch(True, argv)
    cc = _launch(False, argv)
    if cc["impl"] == py["impl"]:
        print("compiled kernels unavailable; both runs used %r" % py["impl"])
    for N in args.n:
        a, b = py["sizes"][str(N)], cc["sizes"][str(N)]
        print()
        print("N = %d  (python vs %s)" % (N, cc["impl"]))
        print("%-20s %12s %12s %9s" % ("kernel", "python", "compiled",
                                       "speedup"))
        for name in a:
            tp, tc = a[name], b[name]
            unit, scale = ("us", 1e6) if tp < 1e-2 else ("ms", 1e3)
            print("%-20s %10.2f%s %10.2f%s %8.2fx"
                  % (name, tp * scale, unit, tc * scale, unit,
                     tp / tc if tc > 0 else float("inf")))


if __name__ == "__main__":
    main()
