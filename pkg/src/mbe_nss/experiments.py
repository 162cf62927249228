"""Experiment drivers: convergence studies, stabilization sweeps, energy
comparisons, long coarsening runs, and companion-matrix reports.

Every driver is deterministic given its configuration (and seed), writes
CSV output plus a resolved-configuration manifest into the output
directory, and returns its results as plain dataclasses.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import stability
from .config import RunConfig, apply_overrides, write_manifest
from .diagnostics import FitModel, FitResult, TimeSeriesRecorder, fit_curve
from .model import manufactured_forcing, manufactured_solution
from .steppers import SolverState, continue_run, run
from .storage import load_checkpoint, save_checkpoint, save_snapshot, state_from_checkpoint


@dataclass(frozen=True)
class ErrorReport:
    """Final-time errors over a decreasing tau sweep, with observed orders.

    ``orders_*[i]`` is ``log(err[i]/err[i+1]) / log(tau[i]/tau[i+1])``, the
    classical observed order between adjacent sweep points (a plain log2
    ratio when the taus halve).
    """

    taus: tuple[float, ...]
    l2_errors: tuple[float, ...]
    linf_errors: tuple[float, ...]
    orders_l2: tuple[float, ...]
    orders_linf: tuple[float, ...]


def _observed_orders(taus: Sequence[float], errors: Sequence[float]) -> tuple[float, ...]:
    return tuple(
        float(np.log(errors[i] / errors[i + 1]) / np.log(taus[i] / taus[i + 1]))
        for i in range(len(taus) - 1)
    )


def _check_decreasing(tau_list: Sequence[float]) -> None:
    if len(tau_list) < 2 or any(b >= a for a, b in zip(tau_list, tau_list[1:])):
        raise ValueError(f"tau list must be strictly decreasing with >= 2 entries: {tau_list}")


def _final_errors(config: RunConfig, tau: float,
                  stabilization_a: float = 0.0) -> tuple[float, float]:
    """(l2, linf) error against the manufactured solution at t_final."""
    if config.forcing != "manufactured":
        raise ValueError("convergence studies need forcing = manufactured")
    grid = config.build_grid()
    params = config.scheme_params(tau=tau, stabilization_a=stabilization_a)
    h0 = manufactured_solution(grid, 0.0)
    final = run(grid, h0, params, config.t_final,
                exact_start=config.exact_start_fn(grid))
    diff = final.h_curr - manufactured_solution(grid, config.t_final)
    return grid.norm_l2(diff), float(np.abs(diff).max())


def _write_error_csv(path, report: ErrorReport) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "l2", "linf", "order_l2", "order_linf"])
        for i, tau in enumerate(report.taus):
            o2 = report.orders_l2[i - 1] if i else np.nan
            oi = report.orders_linf[i - 1] if i else np.nan
            writer.writerow([f"{v:.17g}" for v in
                             (tau, report.l2_errors[i], report.linf_errors[i], o2, oi)])


def run_convergence_study(config: RunConfig, tau_list: Sequence[float],
                          out_dir=None) -> ErrorReport:
    """Errors at t_final for each tau in a strictly decreasing list."""
    _check_decreasing(tau_list)
    l2s, linfs = [], []
    for tau in tau_list:
        l2, linf = _final_errors(config, tau)
        l2s.append(l2)
        linfs.append(linf)
    report = ErrorReport(
        taus=tuple(tau_list), l2_errors=tuple(l2s), linf_errors=tuple(linfs),
        orders_l2=_observed_orders(tau_list, l2s),
        orders_linf=_observed_orders(tau_list, linfs),
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_error_csv(out / "errors.csv", report)
        write_manifest(out / "manifest.txt", config)
    return report


@dataclass(frozen=True)
class StabilizationSweep:
    """Per-A error reports plus cross-A monotonicity checks."""

    a_values: tuple[float, ...]
    reports: tuple[ErrorReport, ...]
    monotone_in_a: bool            # at every tau, errors strictly increase with A
    worst_ratio: float             # min over tau of err(A_max)/err(A_min)

    def report_for(self, a: float) -> ErrorReport:
        return self.reports[self.a_values.index(a)]


def run_stabilization_sweep(config: RunConfig, a_values: Sequence[float],
                            tau_list: Sequence[float], out_dir=None) -> StabilizationSweep:
    """Error tables for each stabilization parameter over the tau sweep."""
    _check_decreasing(tau_list)
    reports = []
    for a in a_values:
        l2s, linfs = [], []
        for tau in tau_list:
            l2, linf = _final_errors(config, tau, stabilization_a=a)
            l2s.append(l2)
            linfs.append(linf)
        reports.append(ErrorReport(
            taus=tuple(tau_list), l2_errors=tuple(l2s), linf_errors=tuple(linfs),
            orders_l2=_observed_orders(tau_list, l2s),
            orders_linf=_observed_orders(tau_list, linfs),
        ))
    monotone = all(
        reports[j].l2_errors[i] < reports[j + 1].l2_errors[i]
        and reports[j].linf_errors[i] < reports[j + 1].linf_errors[i]
        for i in range(len(tau_list))
        for j in range(len(a_values) - 1)
    )
    ratios = [reports[-1].l2_errors[i] / reports[0].l2_errors[i]
              for i in range(len(tau_list))]
    sweep = StabilizationSweep(
        a_values=tuple(a_values), reports=tuple(reports),
        monotone_in_a=monotone, worst_ratio=float(min(ratios)),
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for a, report in zip(a_values, reports):
            _write_error_csv(out / f"errors_A{a:g}.csv", report)
        write_manifest(out / "manifest.txt", config)
    return sweep


@dataclass(frozen=True)
class EnergyComparison:
    """Max augmented-energy gap per tau, with the emitted series paths."""

    taus: tuple[float, ...]
    max_gaps: tuple[float, ...]
    csv_paths: tuple[str, ...]

    @property
    def gaps_shrink_with_tau(self) -> bool:
        return all(a > b for a, b in zip(self.max_gaps, self.max_gaps[1:]))


def run_energy_comparison(config: RunConfig, tau_list: Sequence[float],
                          out_dir) -> EnergyComparison:
    """Time series of E, E_mod, and their gap for each tau (no forcing)."""
    _check_decreasing(tau_list)
    if config.forcing != "none":
        raise ValueError("energy comparison runs without forcing")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = config.build_grid()
    h0 = config.build_initial(grid)
    gaps, paths = [], []
    for tau in tau_list:
        recorder = TimeSeriesRecorder(stride=config.stride)
        run(grid, h0, config.scheme_params(tau=tau), config.t_final,
            on_step=(recorder,))
        path = out / f"energy_tau{tau:g}.csv"
        recorder.write_csv(path)
        gaps.append(float(np.nanmax(recorder.column("dE"))))
        paths.append(str(path))
    write_manifest(out / "manifest.txt", config)
    return EnergyComparison(taus=tuple(tau_list), max_gaps=tuple(gaps),
                            csv_paths=tuple(paths))


@dataclass(frozen=True)
class CoarseningResult:
    """Outputs of a long coarsening run."""

    series_path: str
    energy_fit: FitResult
    height_fit: FitResult
    slope_fit: FitResult
    startup_ratio: Optional[float]
    final_state: SolverState
    snapshot_paths: tuple[str, ...]


def run_coarsening(config: RunConfig, out_dir) -> CoarseningResult:
    """Random-data coarsening run with periodic checkpoints and fits."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = config.build_grid()
    h0 = config.build_initial(grid)
    recorder = TimeSeriesRecorder(stride=config.stride)
    snapshot_paths: list[str] = []
    pending_snapshots = sorted(config.snapshot_times)

    def housekeeping(state: SolverState) -> None:
        if config.checkpoint_every and state.step_index \
                and state.step_index % config.checkpoint_every == 0:
            save_checkpoint(out / "checkpoint.bin", state)
        while pending_snapshots and state.time >= pending_snapshots[0] - 1e-12:
            t_snap = pending_snapshots.pop(0)
            path = out / f"snapshot_t{t_snap:g}.bin"
            save_snapshot(path, grid, state.h_curr, state.time)
            snapshot_paths.append(str(path))

    final = run(grid, h0, config.scheme_params(), config.t_final,
                on_step=(recorder, housekeeping))
    save_checkpoint(out / "final_checkpoint.bin", final)
    series_path = out / "series.csv"
    recorder.write_csv(series_path)
    write_manifest(out / "manifest.txt", config)

    window = (config.fit_window_lo, config.fit_window_hi)
    t = recorder.column("t")
    energy_fit = fit_curve(t, recorder.column("E"), FitModel.LOG_LINEAR, window)
    height_fit = fit_curve(t, recorder.column("H"), FitModel.POWER, window)
    slope_fit = fit_curve(t, recorder.column("M"), FitModel.POWER, window)
    return CoarseningResult(
        series_path=str(series_path), energy_fit=energy_fit,
        height_fit=height_fit, slope_fit=slope_fit,
        startup_ratio=recorder.startup_ratio, final_state=final,
        snapshot_paths=tuple(snapshot_paths),
    )


@dataclass(frozen=True)
class StabilityReport:
    """Companion-matrix verification outputs."""

    root_report: stability.RootSweepReport
    contraction_exponent: int
    contraction_norm: float
    limit_sweep: stability.LimitSweepReport
    csv_paths: tuple[str, ...]


def run_stability_report(out_dir, s0: float = 0.0909, n_roots: int = 10_000,
                         kappa_lo: float = 1e-4, kappa_hi: float = 0.1,
                         n_kappa: int = 60, contraction_grid: int = 400) -> StabilityReport:
    """Root sweep, contraction search, and diagonalization sweep with CSVs."""
    if not 0.0 < s0 < stability.S_LIMIT:
        raise ValueError(f"s0 must lie in (0, 1/11), got {s0}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    root_report = stability.verify_root_bounds(s0, n_roots)
    n0, eps0 = stability.find_contraction_exponent(s0, contraction_grid)
    limit_sweep = stability.sweep_diagonalization(kappa_lo, kappa_hi, n_kappa)

    roots_csv = out / "roots.csv"
    diag_csv = out / "diagonalization.csv"
    contraction_csv = out / "contraction.csv"
    stability.write_root_sweep_csv(roots_csv, root_report)
    stability.write_diagonalization_csv(diag_csv, limit_sweep)
    with contraction_csv.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s0", "n0", "eps0"])
        writer.writerow([f"{s0:.17g}", n0, f"{eps0:.17g}"])
    summary = out / "summary.txt"
    summary.write_text(
        f"root sweep: passed={root_report.passed} "
        f"max_cross_check_gap={root_report.max_cross_check_gap:.3e} "
        f"realized_cap={root_report.realized_cap:.12g}\n"
        f"contraction: n0={n0} eps0={eps0:.12g}\n"
        f"diagonalization: margin_rate={limit_sweep.margin_rate:.6g} "
        f"transform_bound={limit_sweep.transform_bound:.6g}\n"
    )
    return StabilityReport(
        root_report=root_report, contraction_exponent=n0, contraction_norm=eps0,
        limit_sweep=limit_sweep,
        csv_paths=(str(roots_csv), str(contraction_csv), str(diag_csv)),
    )


def resume_run(config: RunConfig, checkpoint_path, t_final: float,
               out_dir=None) -> SolverState:
    """Continue a checkpointed run to ``t_final`` under the config's options.

    The checkpoint fixes grid, scheme, tau, eta, and A; the configuration
    supplies what the binary format does not carry (forcing and flags).
    """
    data = load_checkpoint(checkpoint_path)
    forcing = None
    if config.forcing == "manufactured":
        def forcing(grid, t, _eta=data.eta):
            return manufactured_forcing(grid, t, _eta)
    state = state_from_checkpoint(data, forcing=forcing, dealias=config.dealias)
    recorder = TimeSeriesRecorder(stride=config.stride)
    final = continue_run(state, t_final, on_step=(recorder,))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / "final_checkpoint.bin", final)
        recorder.write_csv(out / "series.csv")
        write_manifest(out / "manifest.txt", apply_overrides(config, nx=data.nx, ny=data.ny))
    return final
