"""Pseudo-spectral IMEX solvers and verification tools for the 2D
thin-film growth equation with no slope selection on the periodic torus.
"""

from .grid import Grid, NonFiniteFieldError, ensure_finite
from .model import (
    EnergyParts,
    energy,
    flux_divergence,
    flux_divergence_hat,
    flux_jacobian_form,
    manufactured_forcing,
    manufactured_solution,
    slope_flux,
)
from .steppers import (
    Scheme,
    SchemeParams,
    SolverState,
    advance,
    continue_run,
    initial_state,
    run,
    start_imex_midpoint,
    step_bdf1_ep1,
    step_bdf2_ep2,
    step_bdf3_ep3,
    step_bdf3_ep3_stabilized,
    tee_multiplier,
)
from .diagnostics import (
    DECAY_STEP_FRACTION,
    STABILIZATION_FLOOR,
    DiagnosticsRecord,
    FitModel,
    FitResult,
    TimeSeriesRecorder,
    Verdict,
    characteristic_height,
    characteristic_slope,
    check_dissipation_constraint,
    fit_curve,
    modified_energy,
    read_series_csv,
)
from .stability import (
    DiagonalizationData,
    RootTriple,
    companion_matrix,
    cubic_roots,
    diagonalize_near_limit,
    find_contraction_exponent,
    matrix_power_norms,
    spectral_norms,
    sweep_diagonalization,
    verify_root_bounds,
)
from .storage import (
    CheckpointData,
    StorageFormatError,
    load_checkpoint,
    load_snapshot,
    save_checkpoint,
    save_snapshot,
    state_from_checkpoint,
)
from .config import RunConfig, load_config, write_manifest

__version__ = "0.1.0"

__all__ = [
    "Grid", "NonFiniteFieldError", "ensure_finite",
    "EnergyParts", "energy", "flux_divergence", "flux_divergence_hat",
    "flux_jacobian_form", "manufactured_forcing", "manufactured_solution",
    "slope_flux",
    "Scheme", "SchemeParams", "SolverState", "advance", "continue_run",
    "initial_state", "run", "start_imex_midpoint", "step_bdf1_ep1",
    "step_bdf2_ep2", "step_bdf3_ep3", "step_bdf3_ep3_stabilized",
    "tee_multiplier",
    "DECAY_STEP_FRACTION", "STABILIZATION_FLOOR", "DiagnosticsRecord",
    "FitModel", "FitResult", "TimeSeriesRecorder", "Verdict",
    "characteristic_height", "characteristic_slope",
    "check_dissipation_constraint", "fit_curve", "modified_energy",
    "read_series_csv",
    "DiagonalizationData", "RootTriple", "companion_matrix", "cubic_roots",
    "diagonalize_near_limit", "find_contraction_exponent",
    "matrix_power_norms", "spectral_norms", "sweep_diagonalization",
    "verify_root_bounds",
    "CheckpointData", "StorageFormatError", "load_checkpoint",
    "load_snapshot", "save_checkpoint", "save_snapshot",
    "state_from_checkpoint",
    "RunConfig", "load_config", "write_manifest",
]
