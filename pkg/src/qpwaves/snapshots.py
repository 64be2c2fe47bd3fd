"""Checkpoint files: a versioned npz payload with a trailing checksum.

Layout is `npz bytes || sha256(npz bytes)`. The digest is verified before
anything is parsed, so truncation or bit rot surfaces as CorruptSnapshot
rather than a numpy traceback; the format version inside the payload is
checked next.
"""

import hashlib
import io
import logging

import numpy as np

from .errors import CorruptSnapshot, FormatVersionMismatch, ValidationError
from .fields import QPFunction, embed
from .lattice import FrequencyLattice

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
_DIGEST_BYTES = 32


def _parts_of(state):
    """(kind, ordered component dict) for any of the four state types."""
    from .dynamics import WaveStateDiff, WaveStateUndiff
    from .linearized import LinState
    from .stepping import JointState
    if isinstance(state, WaveStateDiff):
        return "diff", {"W": state.W, "R": state.R}
    if isinstance(state, WaveStateUndiff):
        return "undiff", {"W": state.W, "Q": state.Q}
    if isinstance(state, LinState):
        return "lin", {"w": state.w, "r": state.r}
    if isinstance(state, JointState):
        return "joint", {"bg_W": state.bg.W, "bg_R": state.bg.R,
                         "lin_w": state.lin.w, "lin_r": state.lin.r}
    raise ValidationError("cannot snapshot object of type %s"
                          % type(state).__name__)


def _rebuild(kind, lat, arrays):
    from .dynamics import WaveStateDiff, WaveStateUndiff
    from .linearized import LinState
    from .stepping import JointState
    f = {name: QPFunction(lat, arr) for name, arr in arrays.items()}
    if kind == "diff":
        return WaveStateDiff(f["W"], f["R"])
    if kind == "undiff":
        return WaveStateUndiff(f["W"], f["Q"])
    if kind == "lin":
        return LinState(f["w"], f["r"])
    if kind == "joint":
        return JointState(WaveStateDiff(f["bg_W"], f["bg_R"]),
                          LinState(f["lin_w"], f["lin_r"]))
    raise CorruptSnapshot("unknown state kind %r" % kind)


def export_snapshot(state, path, t=None):
    """Write a state (with optional time stamp) losslessly to path."""
    kind, comps = _parts_of(state)
    lat = state.lattice
    payload = {
        "version": np.array(FORMAT_VERSION, dtype=np.int64),
        "kind": np.array(kind),
        "k": lat.k,
        "N": np.array(lat.N, dtype=np.int64),
        "tol": np.array(lat.tol, dtype=float),
        "t": np.array(np.nan if t is None else float(t)),
        "names": np.array(sorted(comps)),
    }
    for name, func in comps.items():
        payload["coeff_" + name] = func.coeffs
    buf = io.BytesIO()
    np.savez(buf, **payload)
    blob = buf.getvalue()
    digest = hashlib.sha256(blob).digest()
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(digest)
    return path


def read_header(path):
    """Metadata only: version, kind, lattice parameters, time stamp."""
    blob = _verified_payload(path)
    with np.load(io.BytesIO(blob)) as data:
        version = int(data["version"])
        if version != FORMAT_VERSION:
            raise FormatVersionMismatch(
                "snapshot has format version %d, this build reads %d"
                % (version, FORMAT_VERSION))
        t = float(data["t"])
        return {
            "version": version,
            "kind": str(data["kind"]),
            "k": np.array(data["k"], dtype=float),
            "N": int(data["N"]),
            "tol": float(data["tol"]),
            "t": None if np.isnan(t) else t,
        }


def _verified_payload(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) <= _DIGEST_BYTES:
        raise CorruptSnapshot("file too short to hold a snapshot")
    blob, digest = raw[:-_DIGEST_BYTES], raw[-_DIGEST_BYTES:]
    if hashlib.sha256(blob).digest() != digest:
        raise CorruptSnapshot("checksum mismatch (truncated or altered file)")
    return blob


def load_snapshot(path, lattice=None):
    """Read a state back; checksum and format version are verified first.

    With a target lattice of larger N (same base frequencies), the stored
    coefficients are embedded zero-padded and the widening is logged.
    """
    blob = _verified_payload(path)
    try:
        with np.load(io.BytesIO(blob)) as data:
            version = int(data["version"])
            if version != FORMAT_VERSION:
                raise FormatVersionMismatch(
                    "snapshot has format version %d, this build reads %d"
                    % (version, FORMAT_VERSION))
            kind = str(data["kind"])
            lat = FrequencyLattice(np.array(data["k"], dtype=float),
                                   N=int(data["N"]), tol=float(data["tol"]))
            arrays = {str(name): np.array(data["coeff_" + str(name)])
                      for name in data["names"]}
    except (FormatVersionMismatch, CorruptSnapshot):
        raise
    except Exception as exc:
        raise CorruptSnapshot("unreadable snapshot payload: %s" % exc)
    state = _rebuild(kind, lat, arrays)
    if lattice is None or (lattice.N == lat.N
                           and np.array_equal(lattice.k, lat.k)):
        return state
    if not np.array_equal(lattice.k, lat.k):
        raise ValidationError(
            "snapshot base frequencies %s do not match target %s"
            % (lat.k.tolist(), lattice.k.tolist()))
    if lattice.N < lat.N:
        raise ValidationError(
            "cannot load an N=%d snapshot into a smaller N=%d lattice"
            % (lat.N, lattice.N))
    log.info("embedding snapshot from N=%d into N=%d (zero padding)",
             lat.N, lattice.N)
    kind, comps = _parts_of(state)
    widened = {name: embed(func, lattice).coeffs
               for name, func in comps.items()}
    return _rebuild(kind, lattice, widened)
