"""Spectral simulator and estimate-verification lab for spatially
quasiperiodic gravity water waves in holomorphic coordinates."""

__version__ = "0.1.0"

from .errors import (
    CorruptSnapshot,
    FormatVersionMismatch,
    NonFinite,
    ParseError,
    QPWavesError,
    RationalDependence,
    SurfaceDegenerate,
    ValidationError,
)
from .lattice import FrequencyLattice, validate_lattice
from .fields import (
    QPFunction,
    conj_qp,
    derivative_alpha,
    derivative_coord,
    hilbert,
    imag_part,
    multiply,
    norm,
    norm_linf,
    project,
    qp_constant,
    qp_mode,
    qp_zero,
    real_part,
    reciprocal_one_plus,
    to_coeffs,
    to_grid,
)
from .bands import band_count, band_norms, lp_lowpass, lp_project, paraproduct
from .dynamics import (
    WaveStateDiff,
    WaveStateUndiff,
    aux_fields,
    control_params,
    differentiate_state,
    energy_Ek,
    reconstruct_check,
    rhs_diff,
    rhs_undiff,
)
from .linearized import (
    LinState,
    energy_E0,
    energy_Elin,
    linearized_rhs,
)
from .stepping import (
    JointState,
    RunConfig,
    dispersion_probe,
    integrate,
    step_rk4,
)
from .snapshots import export_snapshot, load_snapshot
from .config import SimulationSpec, parse_spec, serialize_spec
