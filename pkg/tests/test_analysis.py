import math

import numpy as np
import pytest

from graphblocks.analysis import (BlockVelocityRecord, FitError,
                                  descriptor_correlation_report, extract_front,
                                  fit_butterfly_velocity,
                                  fit_butterfly_with_sensitivity,
                                  fit_entanglement_velocity)


def capped_linear(v, t_max, cap):
    t = np.arange(t_max + 1, dtype=float)
    return np.minimum(v * t, cap)


def test_exact_linear_series():
    fit = fit_entanglement_velocity(capped_linear(0.5, 400, 100.0))
    assert abs(fit.velocity - 0.5) < 1e-9
    assert fit.n_points >= 5
    assert fit.policy_id.startswith("entropy-ols")


def test_constant_series_rejected():
    with pytest.raises(FitError):
        fit_entanglement_velocity(np.zeros(200))


def test_unsaturated_series_rejected():
    with pytest.raises(FitError):
        fit_entanglement_velocity(np.arange(200, dtype=float))


def test_short_series_rejected():
    with pytest.raises(FitError):
        fit_entanglement_velocity(np.array([0.0, 1.0, 2.0]))


def test_window_respects_relative_bounds():
    series = capped_linear(1.0, 300, 80.0)
    fit = fit_entanglement_velocity(series)
    lo, hi = fit.window
    assert series[lo] >= 0.1 * 80 - 1e-9
    assert series[hi] <= 0.6 * 80 + 1e-9


def test_fit_scale_equivariance():
    series = capped_linear(0.7, 400, 90.0)
    a = fit_entanglement_velocity(series)
    b = fit_entanglement_velocity(series * math.log(2), plateau_tolerance=math.log(2))
    assert abs(b.velocity - a.velocity * math.log(2)) < 1e-12
    assert a.window == b.window


def test_noisy_round_trip_within_two_percent(rng):
    t_max = 500
    for v in (0.4, 0.8, 1.5):
        series = np.minimum(v * np.arange(t_max + 1.0), 100.0)
        noisy = series + rng.uniform(-0.5, 0.5, size=series.size)
        fit = fit_entanglement_velocity(noisy, plateau_tolerance=1.5)
        assert abs(fit.velocity - v) / v < 0.02


def test_front_extraction_strict_cone():
    N, T = 60, 12
    origin = 30
    field = np.zeros((T + 1, N))
    for t in range(T + 1):
        for x in range(1, N + 1):
            d = min(abs(x - origin), N - abs(x - origin))
            if d <= 2 * t:
                field[t, x - 1] = 1.0
    d_series = extract_front(field, 0.5, origin)
    assert d_series[0] == 0.0
    expected = np.minimum(2 * np.arange(T + 1), N // 2)
    assert np.allclose(d_series, expected)


def test_front_requires_feasible_threshold():
    field = np.zeros((5, 10))
    field[:, 4] = 0.3
    with pytest.raises(FitError):
        extract_front(field, 0.5, 5)


def test_front_one_sided_profile_averages_sides():
    N = 40
    origin = 20
    field = np.zeros((4, N))
    field[:, origin - 1] = 1.0
    field[3, origin + 9] = 1.0  # right-moving front only
    d = extract_front(field, 0.5, origin)
    assert d[3] == 5.0  # (right 10 + left 0) / 2


def test_butterfly_exact_cone():
    d = 2.0 * np.arange(101)
    fit = fit_butterfly_velocity(d, chain_length=100)
    assert abs(fit.velocity - 2.0) < 1e-9
    assert fit.monotonic


def test_butterfly_window_bounds():
    d = 1.0 * np.arange(301)
    fit = fit_butterfly_velocity(d, chain_length=200)
    lo, hi = fit.window
    assert d[lo] >= 5.0 and d[hi] <= 80.0


def test_butterfly_insufficient_window():
    with pytest.raises(FitError):
        fit_butterfly_velocity(np.zeros(50), chain_length=100)


def test_butterfly_flags_nonmonotonic():
    d = np.concatenate([np.arange(0, 30, 1.0), np.arange(30, 5, -1.0)])
    fit = fit_butterfly_velocity(d, chain_length=100)
    assert not fit.monotonic


def test_sensitivity_reported_across_thresholds():
    N, T = 100, 60
    origin = 50
    field = np.zeros((T + 1, N))
    for t in range(T + 1):
        for x in range(1, N + 1):
            d = min(abs(x - origin), N - abs(x - origin))
            field[t, x - 1] = 1.0 / (1.0 + math.exp((d - 0.8 * t) / 2.0))
    fit = fit_butterfly_with_sensitivity(field, N, origin)
    assert set(fit.sensitivity) == {0.1, 0.2, 0.3, 0.4}
    assert all(abs(v - 0.8) < 0.15 for v in fit.sensitivity.values())
    assert abs(fit.velocity - fit.sensitivity[0.2]) < 1e-12


def test_fits_are_pure_functions():
    series = capped_linear(0.6, 300, 70.0)
    a = fit_entanglement_velocity(series)
    b = fit_entanglement_velocity(series.copy())
    assert a == b


def test_descriptor_correlation_report_shapes():
    records = [
        BlockVelocityRecord("n5-g1", 5, 0.47, 0.01, 0.84, 0.02, 1.0, 10, "p"),
        BlockVelocityRecord("n5-g4", 5, 0.62, 0.01, 0.78, 0.02, 1.5, 8, "p"),
    ]
    table, ve_gamma, vb_wp = descriptor_correlation_report(records)
    assert len(table) == 2 and len(ve_gamma) == 2 and len(vb_wp) == 2
    assert table[0][0] == "n5-g1" and table[0][6] == 1.0
    assert ve_gamma[1] == (1.5, 0.62, "n5-g4", 5)
    assert vb_wp[0] == (10, 0.84, "n5-g1", 5)
    empty = descriptor_correlation_report([])
    assert empty == ([], [], [])
