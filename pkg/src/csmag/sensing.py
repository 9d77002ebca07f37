"""Sampling schedules and random row-selection measurement operators.

An operator keeps ``n_k`` rows of the N x N identity.  In time-domain mode the
rows are applied after the inverse DFT, so the operator maps a spectrum to the
time samples at the selected indices.  In spectral mode it picks spectral
coefficients directly.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import BindingError, ConfigurationError, DimensionError, DomainError, FormatError
from .signal_model import Spectrum, TimeSeries, dft


class SensingMode(str, enum.Enum):
    TIME_DOMAIN = "time"
    SPECTRAL_DOMAIN = "spectral"

    @classmethod
    def parse(cls, value) -> SensingMode:
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        for mode in cls:
            if key in (mode.value, mode.name.lower()):
                return mode
        raise ConfigurationError(f"unknown sensing mode {value!r}")


@dataclass(frozen=True)
class SamplingSchedule:
    n_points: int
    max_level: int
    levels: tuple[int, ...]

    def count(self, level: int) -> int:
        return self.levels[level]


def build_schedule(n_points: int, max_level: int) -> SamplingSchedule:
    """Exponential schedule ``n_k = max(1, round(N * 2**(k - K)))`` for k = 0..K.

    Rounding is half-to-even (Python ``round``).  The top level always uses all
    N points.  Counts are non-decreasing; they repeat only where clamping to 1
    kicks in.
    """
    if n_points < 2:
        raise DomainError(f"n_points must be >= 2, got {n_points}")
    if max_level < 0:
        raise DomainError(f"max_level must be >= 0, got {max_level}")
    levels = tuple(max(1, round(n_points * 2.0 ** (k - max_level))) for k in range(max_level + 1))
    return SamplingSchedule(int(n_points), int(max_level), levels)


def derive_seed(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Independent stream for a (master, level, trial, ...) tuple."""
    return np.random.SeedSequence([int(master_seed) & (2**64 - 1), *(int(k) for k in keys)])


def draw_indices(n_points: int, count: int, seed) -> np.ndarray:
    """Uniform random subset of ``range(n_points)`` without replacement, sorted."""
    if not 1 <= count <= n_points:
        raise DomainError(f"count must lie in [1, {n_points}], got {count}")
    if count == n_points:
        return np.arange(n_points)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_points, size=count, replace=False))


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    mode: SensingMode
    indices: np.ndarray
    n_points: int
    level: int = 0

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0:
            raise DimensionError("operator needs a non-empty 1-D index set")
        if np.any(idx < 0) or np.any(idx >= self.n_points):
            raise DimensionError(f"indices must lie in [0, {self.n_points})")
        if np.any(np.diff(idx) <= 0):
            raise DimensionError("indices must be strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "mode", SensingMode.parse(self.mode))

    @property
    def n_rows(self) -> int:
        return int(self.indices.size)

    @property
    def gram_scale(self) -> float:
        # A A^H = gram_scale * I for both modes (rows of a scaled unitary matrix).
        return 1.0 / self.n_points if self.mode is SensingMode.TIME_DOMAIN else 1.0

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.mode.value}:{self.n_points}:".encode())
        h.update(self.indices.astype("<i8").tobytes())
        return h.hexdigest()[:16]

    def forward(self, coefficients: np.ndarray) -> np.ndarray:
        """A x for a length-N complex vector."""
        if coefficients.shape[-1] != self.n_points:
            raise DimensionError(
                f"spectrum length {coefficients.shape[-1]} != operator size {self.n_points}"
            )
        if self.mode is SensingMode.TIME_DOMAIN:
            return np.fft.ifft(coefficients)[self.indices]
        return np.asarray(coefficients, dtype=complex)[self.indices]

    def adjoint(self, values: np.ndarray) -> np.ndarray:
        """A^H y for a length-n_k vector."""
        if values.shape[-1] != self.n_rows:
            raise DimensionError(f"record length {values.shape[-1]} != {self.n_rows} rows")
        full = np.zeros(self.n_points, dtype=complex)
        full[self.indices] = values
        if self.mode is SensingMode.TIME_DOMAIN:
            return np.fft.fft(full) / self.n_points
        return full

    def matrix(self) -> np.ndarray:
        """Dense n_k x N matrix; meant for small-N checks only."""
        return np.stack([self.forward(e) for e in np.eye(self.n_points, dtype=complex)], axis=1)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n_points": int(self.n_points),
            "level": int(self.level),
            "indices": [int(i) for i in self.indices],
        }

    @classmethod
    def from_dict(cls, data: dict) -> MeasurementOperator:
        try:
            return cls(SensingMode.parse(data["mode"]), np.asarray(data["indices"]),
                       int(data["n_points"]), int(data.get("level", 0)))
        except KeyError as exc:
            raise FormatError(f"operator JSON missing field {exc}") from exc


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    values: np.ndarray
    operator_fingerprint: str

    def __len__(self):
        return len(self.values)

    def to_dict(self) -> dict:
        v = np.asarray(self.values, dtype=complex)
        return {
            "values": [[float(z.real), float(z.imag)] for z in v],
            "fingerprint": self.operator_fingerprint,
        }

    @classmethod
    def from_dict(cls, data: dict) -> MeasurementRecord:
        try:
            pairs = np.asarray(data["values"], dtype=float).reshape(-1, 2)
            return cls(pairs[:, 0] + 1j * pairs[:, 1], str(data["fingerprint"]))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"malformed measurement record: {exc}") from exc


def make_operator(mode, schedule: SamplingSchedule, level: int, seed) -> MeasurementOperator:
    count = schedule.count(level)
    return MeasurementOperator(SensingMode.parse(mode), draw_indices(schedule.n_points, count, seed),
                               schedule.n_points, level)


def apply_operator(op: MeasurementOperator, spectrum: Spectrum) -> np.ndarray:
    return op.forward(np.asarray(spectrum.coefficients, dtype=complex))


def measure(series: TimeSeries, op: MeasurementOperator) -> MeasurementRecord:
    """Noiseless measurement of ``series`` through ``op``."""
    samples = np.asarray(series.samples)
    if samples.size != op.n_points:
        raise DimensionError(f"series length {samples.size} != operator size {op.n_points}")
    if op.mode is SensingMode.TIME_DOMAIN:
        values = samples[op.indices].astype(float)
    else:
        values = dft(series).coefficients[op.indices]
    return MeasurementRecord(values, op.fingerprint)


def check_binding(op: MeasurementOperator, record: MeasurementRecord) -> None:
    if record.operator_fingerprint != op.fingerprint:
        raise BindingError(
            f"record fingerprint {record.operator_fingerprint} does not match operator {op.fingerprint}"
        )
    if len(record.values) != op.n_rows:
        raise DimensionError(f"record has {len(record.values)} values, operator has {op.n_rows} rows")


def save_problem(path, op: MeasurementOperator, record: MeasurementRecord) -> None:
    with open(path, "w") as fh:
        json.dump({"operator": op.to_dict(), "record": record.to_dict()}, fh, indent=1)


def load_problem(path) -> tuple[MeasurementOperator, MeasurementRecord]:
    with open(path) as fh:
        data = json.load(fh)
    try:
        return MeasurementOperator.from_dict(data["operator"]), MeasurementRecord.from_dict(data["record"])
    except KeyError as exc:
        raise FormatError(f"{path}: missing {exc}") from exc
