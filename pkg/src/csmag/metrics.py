"""Precision/sensitivity figures of merit, power-law fits and peak picking."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError
from .signal_model import Spectrum

log = logging.getLogger(__name__)

SCALING_COLUMNS = (
    "level", "n_k", "T", "sigma_b", "precision", "sensitivity", "heisenberg_ref", "shotnoise_ref",
)
SWEEP_COLUMNS = ("tau0", "inv_tau0", "delta_b_cs", "delta_b_std")
PHASE_COLUMNS = ("level", "n_k", "bin", "magnitude", "normalized")

DEFAULT_PEAK_THRESHOLD = 0.5


def fmt(value: float) -> str:
    """Round-trippable float text; keeps CSV output byte-stable."""
    return repr(float(value))


@dataclass(frozen=True)
class PrecisionPoint:
    level: int
    n_k: int
    resources: float
    sigma_b: float
    precision: float
    sensitivity: float
    converged_fraction: float = 1.0


def precision_point(level: int, n_k: int, tau0: float, trial_residuals: Sequence[float],
                    converged_fraction: float = 1.0) -> PrecisionPoint:
    """Aggregate per-trial residuals at one level.

    ``sigma_b`` is the RMS of the residuals, ``T = n_k * tau0``, precision is
    ``sigma_b**2 * T`` and sensitivity its square root.
    """
    r = np.asarray(trial_residuals, dtype=float)
    if r.size == 0:
        raise DomainError("need at least one trial residual")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise DomainError("residuals must be finite and non-negative")
    if n_k < 1 or tau0 <= 0:
        raise DomainError("n_k and tau0 must be positive")
    sigma = float(np.sqrt(np.mean(r * r)))
    resources = n_k * tau0
    precision = sigma * sigma * resources
    return PrecisionPoint(level, n_k, resources, sigma, precision, math.sqrt(precision),
                          converged_fraction)


def fit_exponent(points: Sequence[PrecisionPoint]) -> tuple[float, float]:
    """OLS slope and intercept of ``log(precision)`` against ``log(T)``.

    Zero-precision points are dropped (with a warning).  A slope of -1 is the
    1/T, Heisenberg-like behaviour; -0.5 is shot-noise-like.
    """
    usable = [p for p in points if p.precision > 0]
    if len(usable) < len(points):
        log.warning("fit_exponent: dropped %d zero-precision point(s)", len(points) - len(usable))
    if len(usable) < 3 or len({p.resources for p in usable}) < 3:
        raise InsufficientDataError(
            f"need >= 3 points with distinct T and positive precision, got {len(usable)}"
        )
    lt = np.log([p.resources for p in usable])
    lp = np.log([p.precision for p in usable])
    slope, intercept = np.polyfit(lt, lp, 1)
    return float(slope), float(intercept)


@dataclass(frozen=True)
class ReferenceCurves:
    anchor_resources: float
    anchor_precision: float

    def heisenberg(self, t):
        return self.anchor_precision * self.anchor_resources / np.asarray(t, dtype=float)

    def shotnoise(self, t):
        return self.anchor_precision * np.sqrt(self.anchor_resources / np.asarray(t, dtype=float))


def reference_curves(points: Sequence[PrecisionPoint], anchor_level: int) -> ReferenceCurves:
    """1/T and 1/sqrt(T) curves through the precision of ``anchor_level``."""
    for p in points:
        if p.level == anchor_level:
            return ReferenceCurves(p.resources, p.precision)
    raise DomainError(f"anchor level {anchor_level} not among the points")


@dataclass
class ScalingReport:
    points: list[PrecisionPoint]
    fitted_exponent: float
    fit_intercept: float
    fit_levels: list[int]
    anchor_level: int
    heisenberg_reference: list[float]
    shotnoise_reference: list[float]
    max_gain_level: int

    def rows(self) -> list[list[str]]:
        return [
            [str(p.level), str(p.n_k), fmt(p.resources), fmt(p.sigma_b), fmt(p.precision),
             fmt(p.sensitivity), fmt(h), fmt(s)]
            for p, h, s in zip(self.points, self.heisenberg_reference, self.shotnoise_reference)
        ]

    def to_csv(self) -> str:
        return _csv_text(SCALING_COLUMNS, self.rows())


def scaling_report(points: Sequence[PrecisionPoint], fit_levels: Sequence[int] | None = None) -> ScalingReport:
    """Fit the exponent over ``fit_levels`` (default: all) and anchor references at the lowest of them.

    ``max_gain_level`` is the fitted level where the shot-noise reference
    exceeds the measured precision by the largest margin.
    """
    points = sorted(points, key=lambda p: (p.resources, p.level))
    if fit_levels is None:
        fit_levels = [p.level for p in points]
    chosen = [p for p in points if p.level in set(fit_levels)]
    slope, intercept = fit_exponent(chosen)
    anchor = min(p.level for p in chosen if p.precision > 0)
    ref = reference_curves(points, anchor)
    t = [p.resources for p in points]
    heis = [float(v) for v in ref.heisenberg(t)]
    shot = [float(v) for v in ref.shotnoise(t)]
    fitted = set(fit_levels)
    gains = [(s - p.precision, p.level) for p, s in zip(points, shot) if p.level in fitted]
    best = max(gains, key=lambda g: (g[0], -g[1]))[1]
    return ScalingReport(list(points), slope, intercept, sorted(set(fit_levels)), anchor,
                         heis, shot, best)


def detect_peaks(spectrum: Spectrum, rel_threshold: float = DEFAULT_PEAK_THRESHOLD) -> list[tuple[int, float]]:
    """Strict local maxima in bins ``[1, N/2)`` above ``rel_threshold * max|c|``."""
    if not 0 < rel_threshold < 1:
        raise DomainError("rel_threshold must lie in (0, 1)")
    mag = np.abs(np.asarray(spectrum.coefficients))
    n = mag.size
    top = mag.max() if n else 0.0
    if top == 0:
        return []
    cut = rel_threshold * top
    peaks = []
    for m in range(1, (n + 1) // 2):
        left, right = mag[m - 1], mag[(m + 1) % n]
        if mag[m] > cut and mag[m] > left and mag[m] > right:
            peaks.append((m, float(mag[m])))
    return peaks


def standard_baseline(tau0: float, resources: float, anchor: float) -> float:
    """Standard-measurement sigma_B = anchor / sqrt(tau0 * T).

    ``anchor`` is the constant c; see :func:`baseline_anchor`.
    """
    if tau0 <= 0 or resources <= 0:
        raise DomainError("tau0 and T must be positive")
    return anchor / math.sqrt(tau0 * resources)


def baseline_anchor(tau0: float, point: PrecisionPoint) -> float:
    """Constant c that makes the baseline precision equal ``point.precision`` at ``point.resources``."""
    return math.sqrt(point.precision * tau0)


def baseline_sensitivity(tau0: float, resources: float, anchor: float) -> float:
    sigma = standard_baseline(tau0, resources, anchor)
    return math.sqrt(sigma * sigma * resources)


@dataclass
class SensitivitySweep:
    tau0_values: list[float]
    cs_sensitivity: list[float]
    std_sensitivity: list[float]
    best_levels: list[int] = field(default_factory=list)
    max_levels: list[int] = field(default_factory=list)
    n_points: list[int] = field(default_factory=list)

    @property
    def ratios(self) -> list[float]:
        return [s / c for s, c in zip(self.std_sensitivity, self.cs_sensitivity)]

    @property
    def gain(self) -> float:
        """Geometric mean of the per-tau0 std/cs ratios."""
        r = np.asarray(self.ratios, dtype=float)
        if r.size == 0:
            raise DomainError("empty sweep")
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            return float("nan")
        return float(np.exp(np.mean(np.log(r))))

    def rows(self) -> list[list[str]]:
        return [[fmt(t), fmt(1.0 / t), fmt(c), fmt(s)]
                for t, c, s in zip(self.tau0_values, self.cs_sensitivity, self.std_sensitivity)]

    def to_csv(self) -> str:
        return _csv_text(SWEEP_COLUMNS, self.rows())


def sweep_entry(tau0: float, points: Sequence[PrecisionPoint], eligible_levels: Sequence[int] | None = None):
    """CS and baseline sensitivity for one tau0.

    The CS value is taken at the eligible level of smallest precision; the
    baseline is anchored at the lowest eligible level and evaluated at the same T.
    Returns ``(delta_b_cs, delta_b_std, best_level)``.
    """
    if tau0 <= 0:
        raise DomainError("tau0 must be positive")
    pts = [p for p in points if eligible_levels is None or p.level in set(eligible_levels)]
    pts = [p for p in pts if p.precision > 0] or list(pts)
    if not pts:
        raise InsufficientDataError("no eligible levels for the sweep entry")
    anchor_pt = min(pts, key=lambda p: p.level)
    best = min(pts, key=lambda p: (p.precision, p.level))
    c = baseline_anchor(tau0, anchor_pt)
    return best.sensitivity, baseline_sensitivity(tau0, best.resources, c), best.level


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
