"""Run configuration: plain-text ``key = value`` files plus overrides.

The format is deliberately dependency-free and diffable: one ``key =
value`` pair per line, ``#`` comments, blank lines ignored.  Every run
writes back the fully resolved configuration as a manifest, so an
experiment is reproducible from its output directory alone.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .grid import Grid
from .model import manufactured_forcing, manufactured_solution
from .steppers import Scheme, SchemeParams

_SCHEME_NAMES = {
    "bdf1ep1": Scheme.BDF1_EP1,
    "bdf2ep2": Scheme.BDF2_EP2,
    "bdf3ep3": Scheme.BDF3_EP3,
    "bdf3ep3_stabilized": Scheme.BDF3_EP3_STABILIZED,
}

INITIAL_CONDITIONS = ("sine_product", "random_uniform", "from_checkpoint")
FORCING_KINDS = ("none", "manufactured")
STARTUP_MODES = ("chain", "exact")


def parse_scheme(name: str) -> Scheme:
    try:
        return _SCHEME_NAMES[name.strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown scheme {name!r}, expected one of {sorted(_SCHEME_NAMES)}") from None


def scheme_name(scheme: Scheme) -> str:
    return {v: k for k, v in _SCHEME_NAMES.items()}[scheme]


@dataclass(frozen=True)
class RunConfig:
    """Everything a driver needs to reproduce a run."""

    nx: int = 64
    ny: int = 64
    scheme: str = "bdf3ep3"
    tau: float = 0.05
    eta: float = 1.0
    stabilization_a: float = 0.0
    t_final: float = 1.0
    ic: str = "sine_product"
    seed: Optional[int] = None
    ic_low: float = 0.0
    ic_high: float = 1.0
    checkpoint: Optional[str] = None      # path, for ic = from_checkpoint / resume
    forcing: str = "none"
    out_dir: str = "out"
    stride: int = 1
    dealias: bool = False
    startup: str = "chain"
    checkpoint_every: int = 0             # steps between checkpoints, 0 = off
    snapshot_times: tuple[float, ...] = ()
    fit_window_lo: float = 1.0
    fit_window_hi: float = 400.0

    def __post_init__(self) -> None:
        parse_scheme(self.scheme)
        if self.ic not in INITIAL_CONDITIONS:
            raise ValueError(f"unknown ic {self.ic!r}, expected one of {INITIAL_CONDITIONS}")
        if self.forcing not in FORCING_KINDS:
            raise ValueError(f"unknown forcing {self.forcing!r}, expected one of {FORCING_KINDS}")
        if self.startup not in STARTUP_MODES:
            raise ValueError(f"unknown startup {self.startup!r}, expected one of {STARTUP_MODES}")
        if self.ic == "random_uniform" and self.seed is None:
            raise ValueError("random_uniform initial data requires a seed")
        if self.ic == "from_checkpoint" and not self.checkpoint:
            raise ValueError("from_checkpoint initial data requires a checkpoint path")

    # -- builders ---------------------------------------------------------

    def build_grid(self) -> Grid:
        return Grid(self.nx, self.ny)

    def scheme_params(self, tau: Optional[float] = None,
                      stabilization_a: Optional[float] = None) -> SchemeParams:
        """SchemeParams for this configuration, with optional sweeps overrides."""
        scheme = parse_scheme(self.scheme)
        a = self.stabilization_a if stabilization_a is None else stabilization_a
        if a != 0.0:
            scheme = Scheme.BDF3_EP3_STABILIZED
        forcing = None
        if self.forcing == "manufactured":
            eta = self.eta
            def forcing(grid, t, _eta=eta):
                return manufactured_forcing(grid, t, _eta)
        return SchemeParams(
            tau=self.tau if tau is None else tau,
            eta=self.eta, scheme=scheme, stabilization_a=a,
            forcing=forcing, dealias=self.dealias,
        )

    def build_initial(self, grid: Grid) -> np.ndarray:
        """Initial height field per the ic setting.

        Random data uses numpy's seedable PCG64 generator with the uniform
        [low, high) transform applied in row-major node order, so the field
        (and everything downstream) is reproducible from the seed.
        """
        if self.ic == "sine_product":
            return np.sin(grid.x) * np.sin(grid.y)
        if self.ic == "random_uniform":
            rng = np.random.default_rng(self.seed)
            sample = rng.random(grid.shape)
            return self.ic_low + (self.ic_high - self.ic_low) * sample
        from .storage import load_snapshot
        _, values = load_snapshot(self.checkpoint)
        if values.shape != grid.shape:
            raise ValueError(
                f"snapshot shape {values.shape} does not match grid {grid.shape}")
        return values

    def exact_start_fn(self, grid: Grid):
        """Exact first levels for startup = exact (manufactured runs only)."""
        if self.startup != "exact":
            return None
        return lambda t: manufactured_solution(grid, t)


def _coerce(name: str, kind, text: str):
    text = text.strip()
    if kind == "Optional[int]":
        return None if text.lower() in ("", "none") else int(text)
    if kind == "Optional[str]":
        return None if text.lower() in ("", "none") else text
    if kind == "tuple[float, ...]":
        return tuple(float(p) for p in text.split(",") if p.strip()) if text else ()
    if kind == "bool":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean {name} = {text!r}")
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


def load_config(path, **overrides) -> RunConfig:
    """Read a key = value file and apply keyword overrides on top."""
    known = {f.name: f.type for f in fields(RunConfig)}
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, text = stripped.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown configuration key {key!r}")
        values[key] = _coerce(key, known[key], text)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Functional update ignoring None values (unset CLI flags)."""
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})


def write_manifest(path, config: RunConfig) -> None:
    """Write the resolved configuration back out as a key = value file."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ",".join(f"{v:.17g}" for v in value)
        elif isinstance(value, float):
            value = f"{value:.17g}"
        elif value is None:
            value = "none"
        lines.append(f"{f.name} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")
