"""Per-step physical diagnostics, coarsening fits, and step-size bookkeeping.

Alongside the plain energy E of each iterate, the three-level history
carries the augmented quantity

    E_mod = E + 3/(4 tau) ||d1||^2 + 1/(6 tau) ||d0||^2
              + 3/2 ||grad d1||^2 + 1/2 ||grad d0||^2,

with d1 = h_curr - h_prev and d0 = h_prev - h_prev2.  All four correction
terms are nonnegative, so E_mod >= E always; under the step-size
restriction tau <= (512/7203) eta^2 the augmented energy decreases
monotonically step over step, while for arbitrary tau only uniform
boundedness holds.  The stabilized scheme restores a monotonicity
guarantee when A >= (9/32) (49/16)^4 / eta^2, at a known cost in accuracy.

Coarsening statistics are the normalized L2 sizes of the mean-free height
and its gradient,

    H = ||h - mean(h)||_2 / (2 pi),     M = ||grad h||_2 / (2 pi),

fitted over a time window against a*log(t) + b or a*t^b laws.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .grid import Grid
from .model import energy
from .steppers import Scheme, SchemeParams, SolverState

DECAY_STEP_FRACTION = 512.0 / 7203.0          # tau / eta^2 bound for monotone decay
STABILIZATION_FLOOR = (9.0 / 32.0) * (49.0 / 16.0) ** 4   # A * eta^2 bound, ~24.7398

CSV_HEADER = ("t", "E", "Emod", "dE", "H", "M")


class Verdict(Enum):
    """What the theory guarantees for a given parameter choice."""

    GUARANTEED_DECAY = "guaranteed_decay"
    STABILIZED_GUARANTEE = "stabilized_guarantee"
    BOUNDED_ONLY = "bounded_only"


def check_dissipation_constraint(params: SchemeParams) -> Verdict:
    """Classify a run's energy guarantee from its scheme, tau, eta, and A.

    A stabilized scheme with A = 0 is the plain scheme bit for bit and is
    classified as such.  BDF1/BDF2 runs carry no guarantee here and fall
    through to BOUNDED_ONLY.
    """
    plain = params.scheme is Scheme.BDF3_EP3 or (
        params.scheme is Scheme.BDF3_EP3_STABILIZED and params.stabilization_a == 0.0)
    if plain and params.tau <= DECAY_STEP_FRACTION * params.eta**2:
        return Verdict.GUARANTEED_DECAY
    if (params.scheme is Scheme.BDF3_EP3_STABILIZED
            and params.stabilization_a * params.eta**2 >= STABILIZATION_FLOOR):
        return Verdict.STABILIZED_GUARANTEE
    return Verdict.BOUNDED_ONLY


def modified_energy(state: SolverState) -> tuple[float, Optional[float]]:
    """(E, E_mod) for the current state; E_mod is None before step 2.

    The gradient norms use the same spectral gradient as the model, and
    all norms are rectangle-rule L2 norms.
    """
    grid, p = state.grid, state.params
    total = energy(grid, state.h_curr, p.eta).total
    if state.h_prev is None or state.h_prev2 is None:
        return total, None
    tau = p.tau
    d1 = state.h_curr - state.h_prev
    d0 = state.h_prev - state.h_prev2
    correction = (
        0.75 / tau * grid.norm_l2(d1) ** 2
        + 1.0 / (6.0 * tau) * grid.norm_l2(d0) ** 2
    )
    for delta, weight in ((d1, 1.5), (d0, 0.5)):
        gx, gy = grid.gradient(delta)
        correction += weight * (grid.norm_l2(gx) ** 2 + grid.norm_l2(gy) ** 2)
    return total, total + correction


def characteristic_height(grid: Grid, h: np.ndarray) -> float:
    """Normalized L2 size of the mean-free height, ||h - mean|| / (2 pi)."""
    centered = h - h.mean()
    return grid.norm_l2(centered) / np.sqrt(grid.area)


def characteristic_slope(grid: Grid, h: np.ndarray) -> float:
    """Normalized L2 size of the gradient, ||grad h|| / (2 pi)."""
    gx, gy = grid.gradient(h)
    norm_sq = grid.norm_l2(gx) ** 2 + grid.norm_l2(gy) ** 2
    return np.sqrt(norm_sq) / np.sqrt(grid.area)


class FitModel(Enum):
    LOG_LINEAR = "log_linear"   # value = a*log(t) + b
    POWER = "power"             # value = a*t^b


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit in transformed coordinates.

    For LOG_LINEAR, ``a`` and ``b`` are the slope and intercept against
    log(t).  For POWER, ``a`` is the amplitude and ``b`` the exponent of
    a*t^b (fitted as a line in log-log space).  ``residual`` is the RMS
    misfit in the transformed space.
    """

    model: FitModel
    a: float
    b: float
    window: tuple[float, float]
    residual: float


def fit_curve(times, values, model: FitModel,
              window: tuple[float, float]) -> FitResult:
    """Fit a log-linear or power law over the points inside ``window``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_lo, t_hi = window
    mask = (times >= t_lo) & (times <= t_hi)
    if mask.sum() < 3:
        raise ValueError(f"need at least 3 points in window {window}, have {int(mask.sum())}")
    t = times[mask]
    v = values[mask]
    if (t <= 0.0).any():
        raise ValueError(f"{int((t <= 0).sum())} nonpositive times in window {window}")
    design = np.column_stack([np.log(t), np.ones_like(t)])
    if model is FitModel.LOG_LINEAR:
        target = v
    elif model is FitModel.POWER:
        if (v <= 0.0).any():
            raise ValueError(
                f"{int((v <= 0).sum())} nonpositive values in window {window}; "
                "power-law fit needs positive data")
        target = np.log(v)
    else:
        raise ValueError(f"unknown fit model {model!r}")
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coeffs - target) ** 2)))
    slope, intercept = float(coeffs[0]), float(coeffs[1])
    if model is FitModel.LOG_LINEAR:
        return FitResult(model, slope, intercept, window, residual)
    return FitResult(model, float(np.exp(intercept)), slope, window, residual)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One recorded step: time, energies, gap, height, and slope.

    ``energy_mod`` and ``energy_gap`` are NaN before step 2, where the
    history differences that define them do not exist yet.
    """

    t: float
    energy: float
    energy_mod: float
    energy_gap: float
    height: float
    slope: float


class TimeSeriesRecorder:
    """Step callback accumulating diagnostics records.

    Records every ``stride``-th step (step 0 included).  The startup ratio
    (||h2 - h1||^2 + ||h1 - h0||^2) / tau is captured once, when the state
    first reaches step 2 with full history.
    """

    def __init__(self, stride: int = 1):
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.stride = stride
        self.records: list[DiagnosticsRecord] = []
        self.startup_ratio: Optional[float] = None

    def __call__(self, state: SolverState) -> None:
        if self.startup_ratio is None and state.step_index == 2 \
                and state.h_prev is not None and state.h_prev2 is not None:
            grid = state.grid
            d1 = state.h_curr - state.h_prev
            d0 = state.h_prev - state.h_prev2
            self.startup_ratio = (
                grid.norm_l2(d1) ** 2 + grid.norm_l2(d0) ** 2) / state.params.tau
        if state.step_index % self.stride != 0:
            return
        total, total_mod = modified_energy(state)
        gap = np.nan if total_mod is None else total_mod - total
        self.records.append(DiagnosticsRecord(
            t=state.time,
            energy=total,
            energy_mod=np.nan if total_mod is None else total_mod,
            energy_gap=gap,
            height=characteristic_height(state.grid, state.h_curr),
            slope=characteristic_slope(state.grid, state.h_curr),
        ))

    def column(self, name: str) -> np.ndarray:
        attr = {"t": "t", "E": "energy", "Emod": "energy_mod",
                "dE": "energy_gap", "H": "height", "M": "slope"}[name]
        return np.array([getattr(r, attr) for r in self.records])

    def write_csv(self, path) -> None:
        """Emit the series with header t,E,Emod,dE,H,M at full precision."""
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for r in self.records:
                writer.writerow([f"{v:.17g}" for v in
                                 (r.t, r.energy, r.energy_mod, r.energy_gap,
                                  r.height, r.slope)])


def read_series_csv(path) -> dict[str, np.ndarray]:
    """Parse a diagnostics CSV back into column arrays keyed by header name."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}, expected {CSV_HEADER!r}")
        rows = [[float(cell) for cell in row] for row in reader]
    data = np.array(rows) if rows else np.empty((0, len(CSV_HEADER)))
    return {name: data[:, i] for i, name in enumerate(CSV_HEADER)}
