"""Round-trip, corruption, and embedding tests for checkpoint files."""

import logging

import numpy as np
import pytest

from qpwaves.errors import (CorruptSnapshot, FormatVersionMismatch,
                            ValidationError)
from qpwaves.lattice import FrequencyLattice
from qpwaves.fields import qp_zero
from qpwaves.dynamics import WaveStateDiff, WaveStateUndiff
from qpwaves.linearized import LinState
from qpwaves.stepping import JointState, RunConfig, integrate
from qpwaves import snapshots

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


def lat2(N=4):
    return FrequencyLattice([1.0, GOLDEN], N=N)


def random_pair(lat, seed, holomorphic=True):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        u = qp_zero(lat)
        u.coeffs[:] = (rng.standard_normal(lat.shape_box)
                       + 1j * rng.standard_normal(lat.shape_box)) * 0.01
        if holomorphic:
            u.coeffs[lat.xi_box >= 0] = 0.0
        out.append(u)
    return out


def test_round_trip_all_state_kinds(tmp_path):
    lat = lat2()
    W, R = random_pair(lat, 1)
    w, r = random_pair(lat, 2)
    states = [
        WaveStateDiff(W, R),
        WaveStateUndiff(*random_pair(lat, 3, holomorphic=False)),
        LinState(w, r),
        JointState(WaveStateDiff(W, R), LinState(w, r)),
    ]
    for i, state in enumerate(states):
        path = tmp_path / ("snap%d.npz" % i)
        snapshots.export_snapshot(state, str(path), t=0.25)
        back = snapshots.load_snapshot(str(path))
        assert type(back) is type(state)
        kind, comps = snapshots._parts_of(state)
        _, comps_back = snapshots._parts_of(back)
        for name in comps:
            assert np.array_equal(comps[name].coeffs,
                                  comps_back[name].coeffs)
        assert back.lattice.N == lat.N
        assert np.array_equal(back.lattice.k, lat.k)


def test_header_reports_metadata(tmp_path):
    lat = lat2()
    W, R = random_pair(lat, 4)
    path = str(tmp_path / "s.npz")
    snapshots.export_snapshot(WaveStateDiff(W, R), path, t=1.5)
    hdr = snapshots.read_header(path)
    assert hdr["version"] == snapshots.FORMAT_VERSION
    assert hdr["kind"] == "diff"
    assert hdr["N"] == 4
    assert hdr["t"] == 1.5
    snapshots.export_snapshot(WaveStateDiff(W, R), path)
    assert snapshots.read_header(path)["t"] is None


def test_truncated_file_is_corrupt(tmp_path):
    lat = lat2()
    W, R = random_pair(lat, 5)
    path = tmp_path / "s.npz"
    snapshots.export_snapshot(WaveStateDiff(W, R), str(path))
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(CorruptSnapshot):
        snapshots.load_snapshot(str(path))
    path.write_bytes(raw[:10])
    with pytest.raises(CorruptSnapshot):
        snapshots.load_snapshot(str(path))


def test_flipped_byte_is_corrupt(tmp_path):
    lat = lat2()
    W, R = random_pair(lat, 6)
    path = tmp_path / "s.npz"
    snapshots.export_snapshot(WaveStateDiff(W, R), str(path))
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 3] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptSnapshot):
        snapshots.load_snapshot(str(path))


def test_version_gate(tmp_path, monkeypatch):
    lat = lat2()
    W, R = random_pair(lat, 7)
    path = str(tmp_path / "s.npz")
    monkeypatch.setattr(snapshots, "FORMAT_VERSION", 99)
    snapshots.export_snapshot(WaveStateDiff(W, R), path)
    monkeypatch.undo()
    with pytest.raises(FormatVersionMismatch):
        snapshots.load_snapshot(path)
    with pytest.raises(FormatVersionMismatch):
        snapshots.read_header(path)


def test_widening_embeds_with_logged_note(tmp_path, caplog):
    small = lat2(4)
    big = lat2(8)
    W, R = random_pair(small, 8)
    path = str(tmp_path / "s.npz")
    snapshots.export_snapshot(WaveStateDiff(W, R), path)
    with caplog.at_level(logging.INFO, logger="qpwaves.snapshots"):
        wide = snapshots.load_snapshot(path, lattice=big)
    assert wide.lattice.N == 8
    assert np.array_equal(wide.W.coeffs[4:13, 4:13], W.coeffs)
    mask = np.ones(big.shape_box, dtype=bool)
    mask[4:13, 4:13] = False
    assert np.all(wide.W.coeffs[mask] == 0)
    assert any("embedding snapshot" in rec.message for rec in caplog.records)


def test_lattice_mismatch_rejected(tmp_path):
    lat = lat2(4)
    W, R = random_pair(lat, 9)
    path = str(tmp_path / "s.npz")
    snapshots.export_snapshot(WaveStateDiff(W, R), path)
    with pytest.raises(ValidationError):
        snapshots.load_snapshot(path, lattice=lat2(2))
    with pytest.raises(ValidationError):
        snapshots.load_snapshot(
            path, lattice=FrequencyLattice([1.0, np.sqrt(2.0)], N=4))


def test_integrate_writes_loadable_checkpoints(tmp_path):
    lat = lat2()
    W, R = random_pair(lat, 10)
    state = WaveStateDiff(W, R)
    cfg = RunConfig(dt=1e-3, t_max=0.01, checkpoint_times=(0.0, 0.005),
                    checkpoint_dir=str(tmp_path))
    run = integrate(state, cfg, flow="diff")
    assert run.completed
    files = sorted(tmp_path.glob("checkpoint_*.npz"))
    assert len(files) == 2
    first = snapshots.load_snapshot(str(files[0]))
    assert np.array_equal(first.W.coeffs, state.W.coeffs)
    hdr = snapshots.read_header(str(files[1]))
    assert hdr["t"] == pytest.approx(0.005)
