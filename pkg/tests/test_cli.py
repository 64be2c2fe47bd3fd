"""End-to-end checks of the command-line interface: exit codes,
artifacts, determinism, and the output-directory precedence rules."""

import hashlib
import json
import os

import numpy as np
import pytest

from qpwaves import cli, snapshots


ZERO_DIFF = """
[lattice]
k = [1.0]
N = 4

[initial]
kind = "modes"

[dynamics]
system = "diff"
dt = 1e-3
t_max = 0.01

[output]
directory = "%s"
"""

DEGEN = """
[lattice]
k = [1.0]
N = 4

[initial]
kind = "modes"

[[initial.W]]
j = [-1]
re = 0.3

[dynamics]
system = "diff"
dt = 1e-3
t_max = 0.01
eps_chord = 0.75

[output]
directory = "%s"
checkpoint_times = [0.0]
"""

SUITE = """
[lattice]
k = [1.0, 1.618033988749895]
N = 4

[dynamics]
system = "diff"

[suite]
trials = 6
seed = 5
checks = ["b1", "prod1", "Y-moser"]

[output]
directory = "%s"
"""


def _spec_file(tmp_path, text, out_name="out", name="spec.toml"):
    path = tmp_path / name
    path.write_text(text % str(tmp_path / out_name))
    return str(path)


def _read_manifest(tmp_path, out_name="out"):
    with open(tmp_path / out_name / "manifest.json") as fh:
        return json.load(fh)


def test_simulate_zero_data_flat_csv(tmp_path):
    spec = _spec_file(tmp_path, ZERO_DIFF)
    assert cli.main(["simulate", "--spec", spec]) == 0
    rows = (tmp_path / "out" / "series.csv").read_text().splitlines()
    header = rows[0].split(",")
    assert header[:5] == ["t", "normW", "normW_half", "normR", "normR_half"]
    assert len(rows) == 12  # header + t in 0, 1e-3, ..., 1e-2
    for row in rows[1:]:
        vals = row.split(",")
        assert float(vals[1]) == 0.0 and float(vals[3]) == 0.0
        assert float(vals[8]) == 1.0  # min chord of the flat surface
    final = snapshots.load_snapshot(str(tmp_path / "out" / "final.npz"))
    assert np.all(final.W.coeffs == 0) and np.all(final.R.coeffs == 0)
    man = _read_manifest(tmp_path)
    assert man["exit_status"] == 0 and man["reason"] is None


def test_simulate_degenerate_exit_code_and_partial_artifacts(tmp_path,
                                                             capsys):
    spec = _spec_file(tmp_path, DEGEN)
    assert cli.main(["simulate", "--spec", spec]) == 3
    assert "eps_chord" in capsys.readouterr().err
    out = tmp_path / "out"
    # the t=0 checkpoint was flushed before the abort, and the series
    # holds whatever samples were taken
    assert (out / "checkpoint_t000.0000.npz").exists()
    assert len((out / "series.csv").read_text().splitlines()) >= 2
    man = _read_manifest(tmp_path)
    assert man["exit_status"] == 3
    assert "SurfaceDegenerate" in man["reason"]


def test_lemma_suite_reruns_are_byte_identical(tmp_path):
    spec = _spec_file(tmp_path, SUITE)
    assert cli.main(["lemma-suite", "--spec", spec,
                     "--output", str(tmp_path / "a")]) == 0
    assert cli.main(["lemma-suite", "--spec", spec,
                     "--output", str(tmp_path / "b")]) == 0
    ra = (tmp_path / "a" / "report.csv").read_bytes()
    rb = (tmp_path / "b" / "report.csv").read_bytes()
    assert ra == rb
    lemmas = {line.split(",")[0] for line in ra.decode().splitlines()[1:]}
    assert lemmas == {"b1", "prod1", "Y-moser"}


def test_lemma_suite_seed_override_changes_report(tmp_path):
    spec = _spec_file(tmp_path, SUITE)
    assert cli.main(["lemma-suite", "--spec", spec,
                     "--output", str(tmp_path / "a")]) == 0
    assert cli.main(["lemma-suite", "--spec", spec, "--seed", "9",
                     "--output", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() != \
        (tmp_path / "b" / "report.csv").read_bytes()
    assert _read_manifest(tmp_path, "b")["seed"] == 9


def test_rationally_dependent_spec_exits_2(tmp_path, capsys):
    spec = _spec_file(tmp_path, ZERO_DIFF.replace("k = [1.0]",
                                                  "k = [1.0, 0.5]"))
    assert cli.main(["simulate", "--spec", spec]) == 2
    assert "(1, -2)" in capsys.readouterr().err


def test_toml_syntax_error_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.toml"
    path.write_text("[lattice\nk = [1.0]\n")
    assert cli.main(["simulate", "--spec", str(path)]) == 2
    assert "line" in capsys.readouterr().err


def test_missing_spec_file_exits_2(tmp_path, capsys):
    missing = str(tmp_path / "nope.toml")
    assert cli.main(["simulate", "--spec", missing]) == 2
    assert "cannot read spec" in capsys.readouterr().err


def test_simulate_without_initial_section_exits_2(tmp_path, capsys):
    text = "\n".join(line for line in ZERO_DIFF.splitlines()
                     if "initial" not in line and line != 'kind = "modes"')
    spec = _spec_file(tmp_path, text)
    assert cli.main(["simulate", "--spec", spec]) == 2
    assert "initial" in capsys.readouterr().err


def test_manifest_records_the_run(tmp_path):
    spec = _spec_file(tmp_path, ZERO_DIFF)
    assert cli.main(["simulate", "--spec", spec, "--threads", "2"]) == 0
    man = _read_manifest(tmp_path)
    for key in ("command", "spec_sha256", "code_version", "seed", "threads",
                "wall_time_s", "exit_status", "reason", "artifacts",
                "series_csv_version", "report_csv_version"):
        assert key in man
    text = open(spec).read()
    assert man["spec_sha256"] == hashlib.sha256(text.encode()).hexdigest()
    assert man["command"] == "simulate"
    assert man["threads"] == 2
    assert man["artifacts"] == sorted(man["artifacts"])
    assert "series.csv" in man["artifacts"]
    assert "final.npz" in man["artifacts"]
    assert man["wall_time_s"] >= 0.0


def test_output_directory_precedence(tmp_path, monkeypatch):
    spec = _spec_file(tmp_path, ZERO_DIFF, out_name="from_spec")
    monkeypatch.delenv("QPWAVES_OUTPUT", raising=False)
    assert cli.main(["simulate", "--spec", spec]) == 0
    assert (tmp_path / "from_spec" / "series.csv").exists()
    monkeypatch.setenv("QPWAVES_OUTPUT", str(tmp_path / "from_env"))
    assert cli.main(["simulate", "--spec", spec]) == 0
    assert (tmp_path / "from_env" / "series.csv").exists()
    # an explicit flag beats the environment
    assert cli.main(["simulate", "--spec", spec,
                     "--output", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "series.csv").exists()


def test_iterate_artifacts(tmp_path):
    text = """
[lattice]
k = [1.0, 1.618033988749895]
N = 4

[initial]
kind = "modes"

[[initial.W]]
j = [-1, 0]
re = 0.05

[dynamics]
system = "diff"

[iterate]
m_max = 2
T = 0.02
dt = 5e-3

[output]
directory = "%s"
"""
    spec = _spec_file(tmp_path, text)
    assert cli.main(["iterate", "--spec", spec]) == 0
    rows = (tmp_path / "out" / "report.csv").read_text().splitlines()
    assert rows[0] == "m,delta,contraction"
    assert len(rows) == 3
    with open(tmp_path / "out" / "iteration.json") as fh:
        extra = json.load(fh)
    assert extra["direct_completed"] is True
    assert np.isfinite(extra["limit_gap"])


def test_iterate_rejects_non_diff_system(tmp_path, capsys):
    text = ZERO_DIFF.replace('system = "diff"', 'system = "linearized"') \
                    .replace("[[initial.W]]", "")
    spec = _spec_file(tmp_path, text)
    assert cli.main(["iterate", "--spec", spec]) == 2
    assert "differentiated" in capsys.readouterr().err


def test_refine_artifacts(tmp_path):
    text = """
[lattice]
k = [1.0, 1.618033988749895]
N = 4

[dynamics]
system = "diff"

[refine]
N_list = [4, 8]
T = 0.01
dt = 2e-3
rho = 0.05
seed = 2

[output]
directory = "%s"
"""
    spec = _spec_file(tmp_path, text)
    assert cli.main(["refine", "--spec", spec]) == 0
    rows = (tmp_path / "out" / "report.csv").read_text().splitlines()
    assert rows[0] == "N_coarse,N_fine,dist_h0,dist_hs"
    vals = rows[1].split(",")
    assert vals[0] == "4" and vals[1] == "8"
    assert float(vals[2]) > 0.0


def test_dispersion_artifacts_and_accuracy(tmp_path):
    text = """
[lattice]
k = [1.0]
N = 4

[dynamics]
system = "linearized"
dt = 1e-3
t_max = 0.5

[dispersion]
j = [-1]
amplitude = 1e-6

[output]
directory = "%s"
"""
    spec = _spec_file(tmp_path, text)
    assert cli.main(["dispersion", "--spec", spec]) == 0
    rows = (tmp_path / "out" / "report.csv").read_text().splitlines()
    assert rows[0] == "j,xi,omega_measured,omega_gravity,rel_error"
    vals = rows[1].split(",")
    assert float(vals[1]) == -1.0
    assert float(vals[3]) == 1.0
    assert float(vals[4]) < 1e-3


def test_run_rejects_unknown_command():
    from qpwaves.errors import ValidationError
    with pytest.raises(ValidationError):
        cli.run("transmogrify", "")
