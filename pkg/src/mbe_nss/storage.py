"""Binary checkpoint and snapshot files.

Both formats are little-endian with a four-byte magic and a u32 version.

Checkpoint (full solver history, resumable):

    magic   b"MBE3"
    version u32 = 1
    nx, ny  u32, u32
    tau     f64
    eta     f64
    A       f64   (stabilization parameter)
    scheme  u8    (Scheme enum value)
    step    u64
    h_prev2, h_prev, h_curr   three row-major f64 arrays of nx*ny values
                              (levels that do not exist yet are stored as
                              zeros; step decides which are meaningful)

Snapshot (one field at one time):

    magic   b"MBEF"
    version u32 = 1
    nx, ny  u32, u32
    t       f64
    values  row-major f64 array of nx*ny values

Readers reject wrong magic bytes, unsupported versions, and truncated or
oversized payloads before touching any array data; a failed load never
returns a partial field.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .grid import Grid
from .steppers import Scheme, SchemeParams, SolverState, ForcingFn, _frozen

CHECKPOINT_MAGIC = b"MBE3"
SNAPSHOT_MAGIC = b"MBEF"
FORMAT_VERSION = 1

_CKPT_HEADER = struct.Struct("<4sIIIdddBQ")
_SNAP_HEADER = struct.Struct("<4sIIId")


class StorageFormatError(ValueError):
    """A checkpoint or snapshot file failed validation."""


def _check_header(path: Path, found_magic: bytes, expected_magic: bytes, version: int) -> None:
    if found_magic != expected_magic:
        raise StorageFormatError(
            f"{path}: bad magic, expected {expected_magic!r}, found {found_magic!r}")
    if version != FORMAT_VERSION:
        raise StorageFormatError(
            f"{path}: unsupported format version {version}, expected {FORMAT_VERSION}")


def _read_exact(path: Path, expected_size: int) -> bytes:
    data = Path(path).read_bytes()
    if len(data) != expected_size:
        kind = "truncated" if len(data) < expected_size else "oversized"
        raise StorageFormatError(
            f"{path}: {kind} file, expected {expected_size} bytes, found {len(data)}")
    return data


def _field_bytes(values: Optional[np.ndarray], shape: tuple[int, int]) -> bytes:
    if values is None:
        values = np.zeros(shape)
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


@dataclass(frozen=True)
class CheckpointData:
    """Raw contents of a checkpoint file."""

    nx: int
    ny: int
    tau: float
    eta: float
    stabilization_a: float
    scheme: Scheme
    step_index: int
    h_prev2: np.ndarray
    h_prev: np.ndarray
    h_curr: np.ndarray


def save_checkpoint(path, state: SolverState) -> None:
    """Write the full solver history so the run can be resumed exactly."""
    grid, p = state.grid, state.params
    header = _CKPT_HEADER.pack(
        CHECKPOINT_MAGIC, FORMAT_VERSION, grid.nx, grid.ny,
        p.tau, p.eta, p.stabilization_a, int(p.scheme), state.step_index,
    )
    payload = (
        _field_bytes(state.h_prev2, grid.shape)
        + _field_bytes(state.h_prev, grid.shape)
        + _field_bytes(state.h_curr, grid.shape)
    )
    Path(path).write_bytes(header + payload)


def load_checkpoint(path) -> CheckpointData:
    """Read and validate a checkpoint file."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _CKPT_HEADER.size:
        raise StorageFormatError(
            f"{path}: truncated file, expected at least {_CKPT_HEADER.size} header bytes, "
            f"found {len(raw)}")
    magic, version, nx, ny, tau, eta, a, scheme_code, step = _CKPT_HEADER.unpack_from(raw)
    _check_header(path, magic, CHECKPOINT_MAGIC, version)
    try:
        scheme = Scheme(scheme_code)
    except ValueError:
        raise StorageFormatError(f"{path}: unknown scheme code {scheme_code}") from None
    n_values = nx * ny
    expected = _CKPT_HEADER.size + 3 * 8 * n_values
    _read_exact(path, expected)

    def field_at(slot: int) -> np.ndarray:
        offset = _CKPT_HEADER.size + slot * 8 * n_values
        arr = np.frombuffer(raw, dtype="<f8", count=n_values, offset=offset)
        return arr.astype(float).reshape(nx, ny)

    return CheckpointData(
        nx=nx, ny=ny, tau=tau, eta=eta, stabilization_a=a, scheme=scheme,
        step_index=step, h_prev2=field_at(0), h_prev=field_at(1), h_curr=field_at(2),
    )


def state_from_checkpoint(data: CheckpointData,
                          forcing: Optional[ForcingFn] = None,
                          nonlinearity_enabled: bool = True,
                          dealias: bool = False) -> SolverState:
    """Rebuild a live solver state from checkpoint contents.

    Runtime options that the binary format does not carry (source term,
    nonlinearity switch, dealiasing) are passed explicitly by the caller.
    """
    grid = Grid(data.nx, data.ny)
    params = SchemeParams(
        tau=data.tau, eta=data.eta, scheme=data.scheme,
        stabilization_a=data.stabilization_a, forcing=forcing,
        nonlinearity_enabled=nonlinearity_enabled, dealias=dealias,
    )
    return SolverState(
        grid=grid, params=params,
        h_curr=_frozen(data.h_curr),
        h_prev=_frozen(data.h_prev) if data.step_index >= 1 else None,
        h_prev2=_frozen(data.h_prev2) if data.step_index >= 2 else None,
        step_index=data.step_index,
    )


def save_snapshot(path, grid: Grid, values: np.ndarray, t: float) -> None:
    """Write a single field at time ``t``; the roundtrip is bit-exact."""
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} != grid shape {grid.shape}")
    header = _SNAP_HEADER.pack(SNAPSHOT_MAGIC, FORMAT_VERSION, grid.nx, grid.ny, t)
    Path(path).write_bytes(header + _field_bytes(values, grid.shape))


def load_snapshot(path) -> tuple[float, np.ndarray]:
    """Read a snapshot; returns ``(t, values)`` with values shaped (nx, ny)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _SNAP_HEADER.size:
        raise StorageFormatError(
            f"{path}: truncated file, expected at least {_SNAP_HEADER.size} header bytes, "
            f"found {len(raw)}")
    magic, version, nx, ny, t = _SNAP_HEADER.unpack_from(raw)
    _check_header(path, magic, SNAPSHOT_MAGIC, version)
    expected = _SNAP_HEADER.size + 8 * nx * ny
    _read_exact(path, expected)
    values = np.frombuffer(raw, dtype="<f8", count=nx * ny, offset=_SNAP_HEADER.size)
    return t, values.astype(float).reshape(nx, ny)
