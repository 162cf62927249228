"""IMEX time integrators with diagonal Fourier-space implicit solves.

The stiff biharmonic term is treated implicitly and the bounded flux
nonlinearity by explicit extrapolation, so every implicit solve is a
pointwise division in spectral space:

* BDF1/EP1:  (h1 - h0)/tau                      = -eta^2 lap^2 h1 + div flux(grad h0)
* BDF2/EP2:  (3 h2 - 4 h1 + h0)/(2 tau)         = -eta^2 lap^2 h2 + div flux(2 grad h1 - grad h0)
* BDF3/EP3:  (11 h3 - 18 h2 + 9 h1 - 2 h0)/(6 tau)
                                                = -eta^2 lap^2 h3 + div flux(3 grad h2 - 3 grad h1 + grad h0)

The stabilized BDF3/EP3 variant adds ``-A tau^2 lap^2 (h_new - h_curr)``
on the right-hand side, which shifts the implicit denominator by
``6 A tau^3 |k|^4`` and adds the same amount of h_curr on the explicit
side.  An optional time-dependent source is always evaluated at the target
time of the step and added inside the implicit solve.

Runs start from a single field: a second-order IMEX midpoint step
(Crank-Nicolson on the biharmonic term, midpoint-predicted nonlinearity)
produces the first level and one BDF2/EP2 step the second, after which
BDF3/EP3 takes over.  Both starter steps have one-step error O(tau^3), so
third-order global accuracy survives the startup.

Every step re-derives spectral data from the physical history arrays (the
representation stored in checkpoints), which makes a resumed run
bit-identical to an uninterrupted one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Callable, Iterable, Optional

import numpy as np

from .grid import Grid, ensure_finite
from .model import flux_divergence_hat

ForcingFn = Callable[[Grid, float], np.ndarray]


class Scheme(IntEnum):
    """Time-stepping scheme identifiers (also the checkpoint byte codes)."""

    BDF1_EP1 = 1
    BDF2_EP2 = 2
    BDF3_EP3 = 3
    BDF3_EP3_STABILIZED = 4


@dataclass(frozen=True)
class SchemeParams:
    """Time step, model, and scheme configuration shared by all steppers.

    ``forcing(grid, t)`` is an optional source field; ``stabilization_a``
    must be zero unless the scheme is the stabilized BDF3/EP3 variant.
    """

    tau: float
    eta: float
    scheme: Scheme = Scheme.BDF3_EP3
    stabilization_a: float = 0.0
    forcing: Optional[ForcingFn] = None
    nonlinearity_enabled: bool = True
    dealias: bool = False

    def __post_init__(self) -> None:
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.stabilization_a < 0.0:
            raise ValueError(f"stabilization_a must be >= 0, got {self.stabilization_a}")
        if self.stabilization_a != 0.0 and self.scheme is not Scheme.BDF3_EP3_STABILIZED:
            raise ValueError("stabilization_a is only meaningful for BDF3_EP3_STABILIZED")


@dataclass(frozen=True)
class SolverState:
    """Three-level solution history at step ``step_index``.

    ``h_curr`` is the solution at time ``step_index * tau``; ``h_prev`` and
    ``h_prev2`` are the two earlier levels (None until the startup chain
    has produced them).  All arrays are read-only snapshots.
    """

    grid: Grid
    params: SchemeParams
    h_curr: np.ndarray
    h_prev: Optional[np.ndarray] = None
    h_prev2: Optional[np.ndarray] = None
    step_index: int = 0

    @property
    def time(self) -> float:
        return self.step_index * self.params.tau

    def history(self) -> tuple[np.ndarray, ...]:
        """Available levels, newest first."""
        levels = [self.h_curr, self.h_prev, self.h_prev2]
        return tuple(h for h in levels if h is not None)


def _frozen(values: np.ndarray, fresh: bool = False) -> np.ndarray:
    """Read-only snapshot; ``fresh`` marks arrays we own and may freeze in place."""
    out = np.asarray(values, dtype=float)
    if not fresh and not (out.flags.owndata and not out.flags.writeable):
        out = out.copy()
    out.flags.writeable = False
    return out


def tee_multiplier(k_sq, tau: float, eta: float = 1.0, a: float = 0.0):
    """Diagonal inverse of the BDF3 implicit operator.

    For squared wavenumber magnitude ``k_sq`` this is

        1 / (11 + 6 tau eta^2 |k|^4 + 6 a tau^3 |k|^4),

    which reduces to the mass value 1/11 at k = 0 and, for eta = 1 and
    a = 0, to the plain multiplier 1 / (11 + 6 tau |k|^4) elsewhere.
    Scalars and arrays both work.
    """
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    k4 = np.asarray(k_sq, dtype=float) ** 2
    out = 1.0 / (11.0 + 6.0 * tau * eta * eta * k4 + 6.0 * a * tau**3 * k4)
    return float(out) if np.ndim(k_sq) == 0 else out


def _forcing_hat(grid: Grid, params: SchemeParams, t: float):
    if params.forcing is None:
        return None
    return grid.forward(params.forcing(grid, t), "forcing")


def _nonlinear_hat(grid: Grid, params: SchemeParams, slope_field: np.ndarray) -> np.ndarray:
    coeffs = grid.forward(slope_field, "extrapolated height")
    px = grid.inverse(1j * grid.kx * coeffs)
    py = grid.inverse(1j * grid.ky * coeffs)
    return flux_divergence_hat(grid, px, py, params.dealias)


def _explicit_terms(grid: Grid, params: SchemeParams, slope_field: np.ndarray,
                    t_target: float) -> np.ndarray:
    """N_hat + f_hat for the right-hand side, as spectral coefficients."""
    total = np.zeros(grid.shape, dtype=complex)
    if params.nonlinearity_enabled:
        total = total + _nonlinear_hat(grid, params, slope_field)
    f_hat = _forcing_hat(grid, params, t_target)
    if f_hat is not None:
        total = total + f_hat
    return total


def _finish_step(state: SolverState, new_hat: np.ndarray, keep_two: bool = True) -> SolverState:
    h_new = ensure_finite(state.grid.inverse(new_hat), "updated height")
    return replace(
        state,
        h_curr=_frozen(h_new, fresh=True),
        h_prev=state.h_curr,
        h_prev2=state.h_prev if keep_two else None,
        step_index=state.step_index + 1,
    )


def step_bdf1_ep1(state: SolverState) -> SolverState:
    """One BDF1/EP1 step; needs only the current level."""
    grid, p = state.grid, state.params
    tau = p.tau
    c = grid.forward(state.h_curr, "h_curr")
    expl = _explicit_terms(grid, p, state.h_curr, state.time + tau)
    new_hat = (c + tau * expl) / (1.0 + tau * p.eta**2 * grid.k_quad)
    return _finish_step(state, new_hat, keep_two=False)


def step_bdf2_ep2(state: SolverState) -> SolverState:
    """One BDF2/EP2 step from (h_curr, h_prev)."""
    if state.h_prev is None:
        raise ValueError("BDF2/EP2 needs two history levels; run the starter first")
    grid, p = state.grid, state.params
    tau = p.tau
    c = grid.forward(state.h_curr, "h_curr")
    cp = grid.forward(state.h_prev, "h_prev")
    expl = _explicit_terms(grid, p, 2.0 * state.h_curr - state.h_prev, state.time + tau)
    new_hat = (4.0 * c - cp + 2.0 * tau * expl) / (3.0 + 2.0 * tau * p.eta**2 * grid.k_quad)
    # Mass mode, rewritten so equal history means are kept bit-exactly:
    # (4c - p)/3 == c + (c - p)/3.
    new_hat[0, 0] = c[0, 0] + ((c[0, 0] - cp[0, 0]) + 2.0 * tau * expl[0, 0]) / 3.0
    return _finish_step(state, new_hat)


def _step_bdf3(state: SolverState, a: float) -> SolverState:
    if state.h_prev is None or state.h_prev2 is None:
        raise ValueError("BDF3/EP3 needs three history levels; run the startup chain first")
    grid, p = state.grid, state.params
    tau = p.tau
    c = grid.forward(state.h_curr, "h_curr")
    cp = grid.forward(state.h_prev, "h_prev")
    cp2 = grid.forward(state.h_prev2, "h_prev2")
    slope_field = 3.0 * state.h_curr - 3.0 * state.h_prev + state.h_prev2
    expl = _explicit_terms(grid, p, slope_field, state.time + tau)
    shift = 6.0 * a * tau**3 * grid.k_quad
    rhs = 18.0 * c - 9.0 * cp + 2.0 * cp2 + shift * c + 6.0 * tau * expl
    new_hat = rhs / (11.0 + 6.0 * tau * p.eta**2 * grid.k_quad + shift)
    # Mass mode: (18c - 9p + 2q)/11 == c + (-9(p - c) + 2(q - c))/11, which
    # is exact in floating point whenever the history means coincide.
    new_hat[0, 0] = c[0, 0] + (
        -9.0 * (cp[0, 0] - c[0, 0]) + 2.0 * (cp2[0, 0] - c[0, 0]) + 6.0 * tau * expl[0, 0]
    ) / 11.0
    return _finish_step(state, new_hat)


def step_bdf3_ep3(state: SolverState) -> SolverState:
    """One BDF3/EP3 step from the full three-level history."""
    return _step_bdf3(state, 0.0)


def step_bdf3_ep3_stabilized(state: SolverState) -> SolverState:
    """Stabilized BDF3/EP3 step; with stabilization_a == 0 this is the plain step."""
    return _step_bdf3(state, state.params.stabilization_a)


def start_imex_midpoint(grid: Grid, h0: np.ndarray, params: SchemeParams,
                        t0: float = 0.0) -> np.ndarray:
    """Second-order single step producing the first history level.

    Crank-Nicolson on the biharmonic term with the nonlinearity (and the
    source) evaluated at a midpoint predictor obtained from a half-step
    implicit Euler solve.  One-step error is O(tau^3); the linear
    amplification factor (1 - q/2)/(1 + q/2), q = tau eta^2 |k|^4, has
    magnitude at most 1 for every tau.
    """
    h0 = ensure_finite(np.asarray(h0, dtype=float), "initial height")
    tau, eta = params.tau, params.eta
    half = 0.5 * tau * eta * eta * grid.k_quad
    c0 = grid.forward(h0, "initial height")
    expl0 = _explicit_terms(grid, params, h0, t0 + 0.5 * tau)
    h_mid = grid.inverse((c0 + 0.5 * tau * expl0) / (1.0 + half))
    expl_mid = _explicit_terms(grid, params, h_mid, t0 + 0.5 * tau)
    c1 = ((1.0 - half) * c0 + tau * expl_mid) / (1.0 + half)
    return ensure_finite(grid.inverse(c1), "starter height")


def advance(state: SolverState) -> SolverState:
    """Advance one step, dispatching on scheme and available history.

    The startup chain for the BDF3 schemes is the midpoint starter at step
    0 and BDF2/EP2 at step 1; BDF2/EP2 itself starts with the midpoint
    step, and BDF1/EP1 needs no startup.
    """
    p = state.params
    if p.scheme is Scheme.BDF1_EP1:
        return step_bdf1_ep1(state)
    if state.step_index == 0:
        h1 = start_imex_midpoint(state.grid, state.h_curr, p, state.time)
        return replace(state, h_curr=_frozen(h1, fresh=True), h_prev=state.h_curr,
                       h_prev2=None, step_index=state.step_index + 1)
    if p.scheme is Scheme.BDF2_EP2:
        return step_bdf2_ep2(state)
    if state.step_index == 1:
        return step_bdf2_ep2(state)
    if p.scheme is Scheme.BDF3_EP3:
        return step_bdf3_ep3(state)
    return step_bdf3_ep3_stabilized(state)


def _steps_for(t_final: float, tau: float) -> int:
    if t_final < 0.0:
        raise ValueError(f"t_final must be >= 0, got {t_final}")
    n = int(round(t_final / tau))
    if abs(n * tau - t_final) > 1e-9 * max(1.0, abs(t_final)):
        raise ValueError(f"t_final={t_final} is not a multiple of tau={tau}")
    return n


def initial_state(grid: Grid, h0: np.ndarray, params: SchemeParams) -> SolverState:
    """Fresh step-0 state from a single height field."""
    h0 = ensure_finite(np.asarray(h0, dtype=float), "initial height")
    if h0.shape != grid.shape:
        raise ValueError(f"initial field shape {h0.shape} != grid shape {grid.shape}")
    return SolverState(grid=grid, params=params, h_curr=_frozen(h0))


def run(grid: Grid, h0: np.ndarray, params: SchemeParams, t_final: float,
        on_step: Iterable[Callable[[SolverState], None]] = (),
        exact_start: Optional[Callable[[float], np.ndarray]] = None) -> SolverState:
    """Integrate from a single initial field up to ``t_final``.

    ``on_step`` callbacks see the fresh state at step 0 and after every
    step.  ``exact_start`` optionally supplies the first two levels as
    ``exact_start(tau)`` and ``exact_start(2 tau)`` in place of the default
    starter chain (useful when the exact solution is known); it is ignored
    for BDF1/EP1.
    """
    state = initial_state(grid, h0, params)
    callbacks = tuple(on_step)
    for cb in callbacks:
        cb(state)
    n_steps = _steps_for(t_final, params.tau)
    if exact_start is not None and params.scheme is not Scheme.BDF1_EP1:
        for k in (1, 2):
            if n_steps < k:
                break
            level = ensure_finite(np.asarray(exact_start(k * params.tau), dtype=float),
                                  f"supplied level {k}")
            state = replace(state, h_curr=_frozen(level), h_prev=state.h_curr,
                            h_prev2=state.h_prev, step_index=k)
            for cb in callbacks:
                cb(state)
    return _loop(state, n_steps, callbacks)


def continue_run(state: SolverState, t_final: float,
                 on_step: Iterable[Callable[[SolverState], None]] = ()) -> SolverState:
    """Resume stepping an existing state up to ``t_final``.

    Runs the same per-step code path as :func:`run`, so a resumed
    trajectory is bit-identical to an uninterrupted one.
    """
    n_steps = _steps_for(t_final, state.params.tau)
    if n_steps < state.step_index:
        raise ValueError(
            f"t_final={t_final} is before the state's time {state.time}")
    return _loop(state, n_steps, tuple(on_step))


def _loop(state: SolverState, n_steps: int,
          callbacks: tuple[Callable[[SolverState], None], ...]) -> SolverState:
    while state.step_index < n_steps:
        state = advance(state)
        for cb in callbacks:
            cb(state)
    return state
