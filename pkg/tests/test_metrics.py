import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csmag.errors import DomainError, InsufficientDataError
from csmag.metrics import (
    SCALING_COLUMNS,
    SWEEP_COLUMNS,
    PrecisionPoint,
    SensitivitySweep,
    baseline_anchor,
    baseline_sensitivity,
    detect_peaks,
    fit_exponent,
    precision_point,
    reference_curves,
    scaling_report,
    standard_baseline,
    sweep_entry,
)
from csmag.signal_model import (
    LarmorComponent,
    LarmorConfig,
    Spectrum,
    dft,
    multi_frequency_fixture,
    single_frequency_fixture,
    synthesize,
)


def planted(exponent, c=7.0, ts=(1, 2, 5, 9, 19, 38, 75, 150)):
    return [
        PrecisionPoint(k, t, float(t), math.sqrt(c * t**exponent / t), c * t**exponent,
                       math.sqrt(c * t**exponent))
        for k, t in enumerate(ts)
    ]


def test_precision_point_zero():
    p = precision_point(3, 5, 0.5, [0, 0, 0])
    assert p.precision == 0 and p.sensitivity == 0 and p.resources == 2.5


def test_precision_point_single():
    p = precision_point(2, 4, 0.25, [0.3])
    assert p.precision == 0.3**2 * 1.0
    assert p.sensitivity == pytest.approx(0.3)


def test_precision_point_rms():
    p = precision_point(0, 10, 0.1, [3.0, 4.0])
    assert p.sigma_b == pytest.approx(math.sqrt(12.5))
    assert abs(p.precision - p.sigma_b**2 * p.resources) <= 1e-12 * p.precision
    assert abs(p.sensitivity**2 - p.precision) <= 1e-12 * p.precision


def test_precision_point_errors():
    with pytest.raises(DomainError):
        precision_point(0, 1, 1.0, [])
    with pytest.raises(DomainError):
        precision_point(0, 1, 1.0, [-1.0])


@pytest.mark.parametrize("exponent", [-1.0, -0.5])
def test_fit_exact(exponent):
    slope, _ = fit_exponent(planted(exponent))
    assert abs(slope - exponent) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(-2.0, 0.0), st.floats(1e-6, 1e3))
def test_fit_recovers_planted(exponent, c):
    slope, intercept = fit_exponent(planted(exponent, c))
    assert abs(slope - exponent) <= 1e-9
    assert abs(intercept - math.log(c)) <= 1e-8 * max(1.0, abs(math.log(c)))


def test_fit_drops_zero_points(caplog):
    pts = planted(-1.0)
    pts.append(PrecisionPoint(99, 300, 300.0, 0.0, 0.0, 0.0))
    with caplog.at_level("WARNING"):
        slope, _ = fit_exponent(pts)
    assert abs(slope + 1) < 1e-9
    assert "dropped 1" in caplog.text


def test_fit_insufficient():
    with pytest.raises(InsufficientDataError):
        fit_exponent(planted(-1.0, ts=(1, 2)))
    with pytest.raises(InsufficientDataError):
        fit_exponent(planted(-1.0, ts=(3, 3, 3, 3)))


def test_reference_curves():
    pts = planted(-0.8)
    ref = reference_curves(pts, 2)
    t_star, p_star = pts[2].resources, pts[2].precision
    assert ref.heisenberg(t_star) == pytest.approx(p_star)
    assert ref.shotnoise(t_star) == pytest.approx(p_star)
    assert ref.heisenberg(2 * t_star) == pytest.approx(p_star / 2)
    assert ref.shotnoise(2 * t_star) == pytest.approx(p_star / math.sqrt(2))
    t = np.array([0.3, 1.0, 17.0, 400.0])
    np.testing.assert_allclose(ref.heisenberg(t) / ref.shotnoise(t), np.sqrt(t_star / t))
    with pytest.raises(DomainError):
        reference_curves(pts, 42)


def test_scaling_report_csv():
    report = scaling_report(planted(-1.0))
    assert abs(report.fitted_exponent + 1) < 1e-9
    assert report.anchor_level == 0
    lines = report.to_csv().splitlines()
    assert lines[0] == ",".join(SCALING_COLUMNS)
    assert len(lines) == 1 + len(report.points)
    # pure 1/T data sits on the Heisenberg reference, below shot noise beyond the anchor
    assert report.heisenberg_reference == pytest.approx([p.precision for p in report.points])
    margins = [s - p.precision for s, p in zip(report.shotnoise_reference, report.points)]
    assert report.max_gain_level == report.points[int(np.argmax(margins))].level


def test_detect_single_sine():
    c = dft(synthesize(single_frequency_fixture(10, 600)))
    peaks = detect_peaks(c)
    assert [b for b, _ in peaks] == [10]
    assert peaks[0][1] == pytest.approx(300.0)


def test_detect_three_components():
    c = dft(synthesize(multi_frequency_fixture((10, 37, 83), 600)))
    assert [b for b, _ in detect_peaks(c)] == [10, 37, 83]


def test_detect_zero_and_threshold():
    assert detect_peaks(Spectrum(np.zeros(64, complex))) == []
    with pytest.raises(DomainError):
        detect_peaks(Spectrum(np.ones(8, complex)), 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.randoms(use_true_random=False))
def test_detect_count(count, rnd):
    n = 128
    bins = []
    while len(bins) < count:
        b = rnd.randint(1, n // 2 - 1)
        if all(abs(b - o) >= 2 for o in bins):
            bins.append(b)
    comps = tuple(LarmorComponent(b, rnd.uniform(0.6, 1.0), rnd.uniform(-3, 3)) for b in bins)
    c = dft(synthesize(LarmorConfig(comps, n)))
    assert sorted(b for b, _ in detect_peaks(c)) == sorted(bins)


def test_standard_baseline_laws():
    c = 0.7
    assert standard_baseline(0.1, 40.0, c) == pytest.approx(standard_baseline(0.1, 10.0, c) / 2)
    assert standard_baseline(0.2, 10.0, c) == pytest.approx(standard_baseline(0.1, 10.0, c) / math.sqrt(2))
    for bad in [(0, 1, c), (1, 0, c)]:
        with pytest.raises(DomainError):
            standard_baseline(*bad)


def test_baseline_anchoring():
    p = precision_point(0, 3, 0.25, [0.01])
    c = baseline_anchor(0.25, p)
    sigma = standard_baseline(0.25, p.resources, c)
    assert sigma**2 * p.resources == pytest.approx(p.precision)
    assert baseline_sensitivity(0.25, p.resources, c) == pytest.approx(p.sensitivity)


def test_sweep_degenerate_gain_one():
    sweep = SensitivitySweep([0.1, 0.2], [1.0, 2.0], [1.0, 2.0])
    assert sweep.gain == pytest.approx(1.0)
    lines = sweep.to_csv().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS) and len(lines) == 3


def test_sweep_gain_geometric_mean():
    sweep = SensitivitySweep([0.1, 0.2], [1.0, 1.0], [2.0, 8.0])
    assert sweep.gain == pytest.approx(4.0)


def test_sweep_entry_uses_best_level():
    pts = [precision_point(k, n, 0.5, [s]) for k, (n, s) in enumerate([(1, 1.0), (2, 0.2), (4, 0.05)])]
    cs, std, best = sweep_entry(0.5, pts)
    assert best == 2
    assert cs == pytest.approx(pts[2].sensitivity)
    assert std == pytest.approx(pts[0].sensitivity)
    with pytest.raises(DomainError):
        sweep_entry(0.0, pts)
