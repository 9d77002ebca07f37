"""Equality-constrained l1 minimization (basis pursuit) over complex spectra.

Solves ``min ||x||_1  s.t.  A x = w`` with the modulus l1 norm, by ADMM on the
splitting ``x = z``: the x-step projects onto the affine set ``{A x = w}`` and
the z-step is complex soft-thresholding.  Both supported operators have
``A A^H = c I``, so the projection is ``v - A^H (A v - w) / c``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, FormatError
from .sensing import MeasurementOperator, MeasurementRecord, check_binding
from .signal_model import Spectrum


class InitialGuess(str, enum.Enum):
    FLAT = "flat"
    ZERO = "zero"


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-6
    max_iterations: int = 20000
    penalty: float = 1.0
    initial_guess: InitialGuess = InitialGuess.FLAT

    def __post_init__(self):
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if not self.penalty > 0:
            raise DomainError("penalty must be positive")
        object.__setattr__(self, "initial_guess", InitialGuess(self.initial_guess))

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
            "penalty": self.penalty,
            "initial_guess": self.initial_guess.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SolverOptions:
        return cls(**data)


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    estimate: Spectrum
    residual_norm: float
    l1_value: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        c = self.estimate.coefficients
        return {
            "estimate": [[float(z.real), float(z.imag)] for z in c],
            "residual_norm": self.residual_norm,
            "l1_value": self.l1_value,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RecoveryResult:
        try:
            pairs = np.asarray(data["estimate"], dtype=float).reshape(-1, 2)
            return cls(
                Spectrum(pairs[:, 0] + 1j * pairs[:, 1]),
                float(data["residual_norm"]),
                float(data["l1_value"]),
                int(data["iterations"]),
                bool(data["converged"]),
            )
        except (KeyError, ValueError) as exc:
            raise FormatError(f"malformed recovery result: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def shrink(z, kappa: float):
    """Proximal map of ``kappa * |z|``: pull ``z`` toward 0 by ``kappa`` keeping its phase.

    Works elementwise on arrays; ``shrink(0, k) == 0``.
    """
    if kappa < 0:
        raise DomainError("kappa must be non-negative")
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(mag > kappa, 1.0 - kappa / np.where(mag > 0, mag, 1.0), 0.0)
    out = z * factor
    return out[()] if out.ndim == 0 else out


def residual(op: MeasurementOperator, estimate: Spectrum, record: MeasurementRecord) -> float:
    """Euclidean norm of the constraint violation ``||A f - w||_2``."""
    w = np.asarray(record.values, dtype=complex)
    if w.size != op.n_rows:
        raise DimensionError(f"record has {w.size} values, operator has {op.n_rows} rows")
    return float(np.linalg.norm(op.forward(np.asarray(estimate.coefficients, dtype=complex)) - w))


def duality_gap(op: MeasurementOperator, x: np.ndarray, multiplier: np.ndarray, w: np.ndarray) -> float:
    """``||x||_1`` minus the dual bound built from an l1 subgradient estimate.

    The dual of basis pursuit is ``max Re(y^H w)`` subject to
    ``||A^H y||_inf <= 1``.  ``multiplier`` (the scaled ADMM dual) is mapped to
    ``y`` through the row space of A and shrunk until feasible.
    """
    y = op.forward(multiplier) / op.gram_scale
    peak = np.max(np.abs(op.adjoint(y))) if y.size else 0.0
    if peak > 1.0:
        y = y / peak
    return float(np.sum(np.abs(x)) - np.real(np.vdot(y, w)))


def basis_pursuit(
    op: MeasurementOperator,
    record: MeasurementRecord,
    options: SolverOptions | None = None,
) -> RecoveryResult:
    """Recover the minimum-l1 spectrum consistent with ``record``.

    The returned estimate is the thresholded ADMM iterate ``z``.  With
    ``eps = tolerance * max(1, ||w||)`` the solve counts as converged once

    * ``||x - z||_1 <= eps`` (estimate and feasible iterate agree in l1),
    * ``penalty * ||z - z_prev||_2 <= eps`` (dual residual),
    * ``||A z - w||_2 <= eps`` (constraint residual of the estimate), and
    * the duality gap of the feasible iterate is ``<= eps``,

    so the reported l1 value is within ``2 eps`` of the optimum.  Running out
    of iterations returns the last iterate with ``converged=False``.
    """
    options = options or SolverOptions()
    check_binding(op, record)
    n = op.n_points
    w = np.asarray(record.values, dtype=complex)
    rho = options.penalty
    tol = options.tolerance
    inv_gram = 1.0 / op.gram_scale
    w_norm = float(np.linalg.norm(w))
    feas_tol = tol * max(1.0, w_norm)

    if options.initial_guess is InitialGuess.FLAT:
        z = np.full(n, 1.0 / n, dtype=complex)
    else:
        z = np.zeros(n, dtype=complex)
    u = np.zeros(n, dtype=complex)

    converged = False
    gap = float("inf")
    it = 0
    for it in range(1, options.max_iterations + 1):
        v = z - u
        x = v - inv_gram * op.adjoint(op.forward(v) - w)
        z_prev = z
        z = shrink(x + u, 1.0 / rho)
        u = u + x - z

        if np.sum(np.abs(x - z)) > feas_tol or rho * np.linalg.norm(z - z_prev) > feas_tol:
            continue
        if np.linalg.norm(op.forward(z) - w) > feas_tol:
            continue
        gap = duality_gap(op, x, rho * u, w)
        if gap <= feas_tol:
            converged = True
            break

    estimate = Spectrum(z)
    return RecoveryResult(
        estimate=estimate,
        residual_norm=residual(op, estimate, record),
        l1_value=float(np.sum(np.abs(z))),
        iterations=it,
        converged=converged,
    )
