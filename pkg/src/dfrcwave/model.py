"""Shared domain types, vectorization helpers, and waveform file I/O.

All types are immutable value objects: arrays are copied on construction
and marked read-only, so instances can be shared across threads.
Vectorization is column-major throughout the package (``vec`` stacks the
columns of the transmit block).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

#: Relative tolerance for the constant-modulus check on stored waveforms.
MODULUS_TOL = 1e-12


class CapacityError(RuntimeError):
    """A dense computation was requested above its documented size cap."""


class WaveformFormatError(ValueError):
    """A waveform file could not be parsed; message names line and field."""


class MajorizerKind(str, enum.Enum):
    """Which bound is used at the quartic majorization stage."""

    DIAGONAL = "diagonal"
    MAX_EIGEN = "max_eigen"


class SolveMode(str, enum.Enum):
    """Whether communication constraints are enforced."""

    DFRC = "dfrc"
    RADAR_ONLY = "radar_only"


def _frozen_array(values, dtype=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def vec(x) -> np.ndarray:
    """Column-major vectorization: stacks the columns of a matrix.

    Accepts a 2-D array or a :class:`WaveformMatrix`.
    """
    if isinstance(x, WaveformMatrix):
        x = x.entries
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"vec expects a 2-D array, got ndim={x.ndim}")
    return x.ravel(order="F")


def mat(v, n_rows: int) -> np.ndarray:
    """Inverse of :func:`vec`: reshape a vector into n_rows rows, column-major."""
    v = np.asarray(v)
    if v.ndim != 1 or n_rows < 1 or v.size % n_rows:
        raise ValueError(f"cannot reshape length-{v.size} vector into {n_rows} rows")
    return v.reshape((n_rows, v.size // n_rows), order="F")


@dataclass(frozen=True)
class ArrayGeometry:
    """Transmit ULA: element count and spacing in wavelengths."""

    n_tx: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.n_tx < 1:
            raise ValueError(f"n_tx must be >= 1, got {self.n_tx}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be > 0, got {self.spacing}")


@dataclass(frozen=True)
class WaveformMatrix:
    """Complex transmit block: one row per antenna, one column per subpulse.

    When ``constant_modulus`` is set, every entry must have magnitude
    sqrt(p_total / n_tx) to within :data:`MODULUS_TOL` (relative).
    """

    entries: np.ndarray
    p_total: float = 1.0
    constant_modulus: bool = False

    def __post_init__(self):
        arr = _frozen_array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"entries must be a non-empty 2-D array, got shape {arr.shape}")
        if not self.p_total > 0:
            raise ValueError(f"p_total must be > 0, got {self.p_total}")
        object.__setattr__(self, "entries", arr)
        if self.constant_modulus:
            amp = self.amplitude
            err = np.abs(np.abs(arr) - amp).max()
            if err > MODULUS_TOL * max(1.0, amp):
                raise ValueError(
                    f"constant-modulus violation: max |entry| deviation {err:.3e} "
                    f"from amplitude {amp!r}"
                )

    @property
    def n_tx(self) -> int:
        return self.entries.shape[0]

    @property
    def block_len(self) -> int:
        return self.entries.shape[1]

    @property
    def amplitude(self) -> float:
        """Per-sample magnitude sqrt(p_total / n_tx) implied by the power budget."""
        return math.sqrt(self.p_total / self.n_tx)

    @property
    def vector(self) -> np.ndarray:
        """Column-major vectorization of the block."""
        return vec(self.entries)


@dataclass(frozen=True)
class AngleGrid:
    """Strictly increasing angle grid, in degrees."""

    angles_deg: np.ndarray
    resolution_deg: float = 1.0

    def __post_init__(self):
        arr = _frozen_array(self.angles_deg, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("angle grid must be a non-empty 1-D array")
        if arr.size > 1 and not np.all(np.diff(arr) > 0):
            raise ValueError("angle grid must be strictly increasing")
        object.__setattr__(self, "angles_deg", arr)

    @classmethod
    def uniform(cls, start_deg: float, stop_deg: float, step_deg: float) -> "AngleGrid":
        if not step_deg > 0 or stop_deg < start_deg:
            raise ValueError(f"bad grid bounds [{start_deg}, {stop_deg}] step {step_deg}")
        # epsilon keeps exactly-divisible spans inclusive of the stop angle
        n = int(math.floor((stop_deg - start_deg) / step_deg + 1e-9)) + 1
        return cls(start_deg + step_deg * np.arange(n), resolution_deg=step_deg)

    def __len__(self) -> int:
        return self.angles_deg.size


@dataclass(frozen=True)
class DesiredBeamPattern:
    """Target beam-pattern levels on an angle grid; at least one must be > 0."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("desired pattern must be a non-empty 1-D array")
        if np.any(arr < 0):
            raise ValueError("desired pattern values must be nonnegative")
        if not np.any(arr > 0):
            raise ValueError("desired pattern must have at least one positive value")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class TargetSet:
    """Radar target angles plus the largest range bin of interest."""

    angles_deg: np.ndarray
    max_lag: int

    def __post_init__(self):
        arr = _frozen_array(self.angles_deg, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("target set must contain at least one angle")
        if self.max_lag < 1:
            raise ValueError(f"max_lag must be >= 1, got {self.max_lag}")
        object.__setattr__(self, "angles_deg", arr)

    @property
    def n_targets(self) -> int:
        return self.angles_deg.size


@dataclass(frozen=True)
class Weights:
    """Nonnegative weights for beam-pattern, autocorrelation, cross-correlation costs."""

    w_bp: float
    w_ac: float
    w_cc: float

    def __post_init__(self):
        trio = (self.w_bp, self.w_ac, self.w_cc)
        if any(w < 0 for w in trio):
            raise ValueError(f"weights must be nonnegative, got {trio}")
        if all(w == 0 for w in trio):
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class SolverConfig:
    """Stopping thresholds, iteration caps, majorizer kind, mode, and seed."""

    eps1: float = 1e-4
    eps2: float = 1e-4
    eps3: float = 3e-5
    max_outer_iters: int = 5000
    max_bisect_iters: int = 200
    majorizer_kind: MajorizerKind = MajorizerKind.DIAGONAL
    mode: SolveMode = SolveMode.DFRC
    seed: int = 0

    def __post_init__(self):
        for name in ("eps1", "eps2", "eps3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("max_outer_iters", "max_bisect_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        object.__setattr__(self, "majorizer_kind", MajorizerKind(self.majorizer_kind))
        object.__setattr__(self, "mode", SolveMode(self.mode))


# --------------------------------------------------------------------------
# Waveform file format: UTF-8 text, header "n_tx,block_len,p_total[,constant_modulus]",
# then one line per antenna of comma-separated "re:im" pairs. Floats are written
# with shortest round-trip decimals, so a save/load cycle is bit-exact.
# --------------------------------------------------------------------------

_CM_FLAG = "constant_modulus"


def _fmt_float(v: float) -> str:
    return repr(float(v))


def save_waveform(waveform: WaveformMatrix, path) -> None:
    """Write a waveform block to ``path`` in the documented text format."""
    header = f"{waveform.n_tx},{waveform.block_len},{_fmt_float(waveform.p_total)}"
    if waveform.constant_modulus:
        header += "," + _CM_FLAG
    rows = [
        ",".join(f"{_fmt_float(z.real)}:{_fmt_float(z.imag)}" for z in row)
        for row in waveform.entries
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        fh.write("\n".join(rows) + "\n")


def _parse_int(token: str, line: int, field: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise WaveformFormatError(
            f"line {line}: field '{field}': expected integer, got {token!r}"
        ) from None


def _parse_float(token: str, line: int, field: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise WaveformFormatError(
            f"line {line}: field '{field}': expected float, got {token!r}"
        ) from None


def load_waveform(path) -> WaveformMatrix:
    """Read a waveform block written by :func:`save_waveform`.

    Raises :class:`WaveformFormatError` naming the offending line and field
    on malformed input. A constant-modulus flag in the header re-enables the
    modulus check on load.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise WaveformFormatError("line 1: empty file")
    head = [tok.strip() for tok in lines[0].split(",")]
    if len(head) not in (3, 4):
        raise WaveformFormatError(
            f"line 1: header must have 3 or 4 comma-separated fields, got {len(head)}"
        )
    n_tx = _parse_int(head[0], 1, "n_tx")
    block_len = _parse_int(head[1], 1, "block_len")
    p_total = _parse_float(head[2], 1, "p_total")
    constant_modulus = False
    if len(head) == 4:
        if head[3] != _CM_FLAG:
            raise WaveformFormatError(
                f"line 1: field 4: expected {_CM_FLAG!r}, got {head[3]!r}"
            )
        constant_modulus = True
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != n_tx:
        raise WaveformFormatError(
            f"line {len(lines)}: expected {n_tx} antenna rows, found {len(body)}"
        )
    entries = np.empty((n_tx, block_len), dtype=complex)
    for i, row in enumerate(body):
        lineno = i + 2
        cells = row.split(",")
        if len(cells) != block_len:
            raise WaveformFormatError(
                f"line {lineno}: expected {block_len} columns, found {len(cells)}"
            )
        for j, cell in enumerate(cells):
            parts = cell.split(":")
            if len(parts) != 2:
                raise WaveformFormatError(
                    f"line {lineno}: field {j + 1}: expected 're:im' pair, got {cell!r}"
                )
            re = _parse_float(parts[0], lineno, f"{j + 1} (re)")
            im = _parse_float(parts[1], lineno, f"{j + 1} (im)")
            entries[i, j] = complex(re, im)
    try:
        return WaveformMatrix(entries, p_total=p_total, constant_modulus=constant_modulus)
    except ValueError as exc:
        raise WaveformFormatError(f"line 1: {exc}") from None
