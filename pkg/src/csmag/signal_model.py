"""Larmor precession signals in the time and frequency domains.

All quantities are dimensionless: frequencies are DFT bin indices (cycles per
record of ``n_points`` samples) and time is measured in samples.  The only
physical-units entry point is :func:`accumulation_time_bound`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, SymmetryError

# Inverse-pair and symmetry checks share this relative tolerance.
ROUNDTRIP_TOL = 1e-9


@dataclass(frozen=True)
class LarmorComponent:
    omega_bin: int
    amplitude: float = 1.0
    phase_offset: float = 0.0


@dataclass(frozen=True)
class LarmorConfig:
    """A sum of sinusoidal Larmor precessions sampled on ``n_points`` steps of ``tau0``."""

    components: tuple[LarmorComponent, ...] = ()
    n_points: int = 600
    tau0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        self.validate()

    def validate(self) -> None:
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ConfigurationError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not (math.isfinite(self.tau0) and self.tau0 > 0):
            raise ConfigurationError(f"tau0 must be positive, got {self.tau0}")
        seen = set()
        for c in self.components:
            if int(c.omega_bin) != c.omega_bin:
                raise ConfigurationError(f"omega_bin must be an integer bin, got {c.omega_bin}")
            if not 0 < c.omega_bin < self.n_points / 2:
                raise ConfigurationError(
                    f"omega_bin {c.omega_bin} outside (0, {self.n_points / 2})"
                )
            if not (math.isfinite(c.amplitude) and c.amplitude >= 0):
                raise ConfigurationError(f"amplitude must be finite and >= 0, got {c.amplitude}")
            if not math.isfinite(c.phase_offset):
                raise ConfigurationError("phase_offset must be finite")
            if c.omega_bin in seen:
                raise ConfigurationError(f"duplicate omega_bin {c.omega_bin}")
            seen.add(c.omega_bin)

    @property
    def bins(self) -> list[int]:
        return [int(c.omega_bin) for c in self.components]

    def with_points(self, n_points: int, tau0: float | None = None) -> LarmorConfig:
        return LarmorConfig(self.components, n_points, self.tau0 if tau0 is None else tau0)

    def to_dict(self) -> dict:
        return {
            "n_points": int(self.n_points),
            "tau0": float(self.tau0),
            "components": [
                {
                    "omega_bin": int(c.omega_bin),
                    "amplitude": float(c.amplitude),
                    "phase_offset": float(c.phase_offset),
                }
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> LarmorConfig:
        try:
            comps = tuple(
                LarmorComponent(
                    omega_bin=c["omega_bin"],
                    amplitude=float(c.get("amplitude", 1.0)),
                    phase_offset=float(c.get("phase_offset", 0.0)),
                )
                for c in data.get("components", [])
            )
            return cls(comps, int(data["n_points"]), float(data.get("tau0", 1.0)))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed signal config: {exc!r}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path: str | Path) -> LarmorConfig:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    samples: np.ndarray
    tau0: float = 1.0

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class Spectrum:
    coefficients: np.ndarray
    delta_omega: float = field(default=0.0)

    def __post_init__(self):
        if not self.delta_omega and len(self.coefficients):
            object.__setattr__(self, "delta_omega", 1.0 / len(self.coefficients))

    def __len__(self):
        return len(self.coefficients)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coefficients)


def synthesize(config: LarmorConfig) -> TimeSeries:
    """Sample ``sum_i a_i sin(2 pi w_i t / N + phi_i)`` at t = 0..N-1."""
    config.validate()
    n = config.n_points
    t = np.arange(n)
    samples = np.zeros(n)
    for c in config.components:
        samples += c.amplitude * np.sin(2 * np.pi * c.omega_bin * t / n + c.phase_offset)
    return TimeSeries(samples, config.tau0)


def dft(series: TimeSeries) -> Spectrum:
    """Forward DFT with the negative-exponent convention and no scaling.

    A unit sine at bin ``w`` maps to two bins, ``w`` and ``N - w``, each of
    magnitude ``N / 2``.
    """
    x = np.asarray(series.samples)
    if x.size == 0:
        raise DomainError("cannot transform an empty series")
    return Spectrum(np.fft.fft(x))


def idft(spectrum: Spectrum, tau0: float = 1.0) -> TimeSeries:
    """Inverse of :func:`dft`; returns the real part after checking the imaginary residue.

    Raises
    ------
    SymmetryError
        If the imaginary residue exceeds ``ROUNDTRIP_TOL`` relative to the
        output norm, i.e. the spectrum does not describe a real signal.
    """
    c = np.asarray(spectrum.coefficients)
    if c.size == 0:
        raise DomainError("cannot transform an empty spectrum")
    x = np.fft.ifft(c)
    scale = max(np.linalg.norm(x), np.finfo(float).tiny)
    residue = np.linalg.norm(x.imag)
    if residue > ROUNDTRIP_TOL * scale:
        raise SymmetryError(
            f"imaginary residue {residue:.3e} exceeds {ROUNDTRIP_TOL:g} of norm {scale:.3e}"
        )
    return TimeSeries(x.real.copy(), tau0)


def accumulation_time_bound(gamma: float, delta_b_max: float) -> float:
    """Longest phase-accumulation time that keeps ``[-dB, dB)`` unambiguous: pi / (2 gamma dB)."""
    if not (gamma > 0 and delta_b_max > 0):
        raise DomainError("gamma and delta_b_max must both be positive")
    return math.pi / (2.0 * gamma * delta_b_max)


def field_range_for_tau0(gamma: float, tau0: float) -> float:
    """Algebraic inverse of :func:`accumulation_time_bound`."""
    if not (gamma > 0 and tau0 > 0):
        raise DomainError("gamma and tau0 must both be positive")
    return math.pi / (2.0 * gamma * tau0)


def single_frequency_fixture(omega_bin: int = 10, n_points: int = 600, tau0: float = 1.0) -> LarmorConfig:
    return LarmorConfig((LarmorComponent(omega_bin, 1.0, 0.0),), n_points, tau0)


def multi_frequency_fixture(bins=(10, 37, 83), n_points: int = 600, tau0: float = 1.0) -> LarmorConfig:
    return LarmorConfig(tuple(LarmorComponent(b, 1.0, 0.0) for b in bins), n_points, tau0)
