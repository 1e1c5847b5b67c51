"""Velocity extraction from averaged entropy series and OTOC fields.

Both fits are ordinary least squares over policy-defined windows chosen
relative to the data (fractions of the saturation value, or absolute
front distances), so rescaling the entropy units rescales the fitted
entanglement velocity by the same constant. Every fit records a policy
tag for provenance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ENTROPY_POLICY = "entropy-ols-window10to60sat-tail20"
FRONT_POLICY = "front-ols-d5-to-40pct-unweighted"

DEFAULT_THRESHOLD = 0.2
SENSITIVITY_THRESHOLDS = (0.1, 0.2, 0.3, 0.4)


class FitError(ValueError):
    """The input series does not admit the policy's fit window."""


@dataclass(frozen=True)
class VelocityFit:
    velocity: float
    intercept: float
    window: tuple[int, int]          # first and last layer used
    residual_rms: float
    stderr: float
    n_points: int
    policy_id: str
    monotonic: bool = True
    sensitivity: dict[float, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "velocity": self.velocity,
            "intercept": self.intercept,
            "window": list(self.window),
            "residual_rms": self.residual_rms,
            "stderr": self.stderr,
            "n_points": self.n_points,
            "policy_id": self.policy_id,
            "monotonic": self.monotonic,
            "sensitivity": {str(k): v for k, v in sorted(self.sensitivity.items())},
        }


def _ols(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """slope, intercept, residual rms, slope standard error."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    k = t.size
    tm, ym = t.mean(), y.mean()
    stt = ((t - tm) ** 2).sum()
    if stt == 0:
        raise FitError("degenerate fit window (no spread in t)")
    slope = ((t - tm) * (y - ym)).sum() / stt
    intercept = ym - slope * tm
    resid = y - slope * t - intercept
    rms = float(np.sqrt((resid ** 2).mean()))
    stderr = float(np.sqrt((resid ** 2).sum() / max(k - 2, 1) / stt))
    return float(slope), float(intercept), rms, stderr


def fit_entanglement_velocity(series: np.ndarray,
                              plateau_tolerance: float = 1.0,
                              min_points: int = 5) -> VelocityFit:
    """Slope of the linear growth regime of an averaged entropy series.

    The saturation value is the mean of the trailing fifth of the
    series, which must vary by less than ``plateau_tolerance`` (1 bit in
    the series' own units); the fit window is every layer with
    0.1 * S_sat <= S(t) <= 0.6 * S_sat.
    """
    s = np.asarray(series, dtype=float)
    if s.size < 10:
        raise FitError(f"series of {s.size} points is too short to saturate")
    tail = s[int(math.floor(0.8 * s.size)):]
    if tail.max() - tail.min() >= plateau_tolerance:
        raise FitError(
            "no saturation detected: trailing-fifth spread "
            f"{tail.max() - tail.min():.3f} exceeds {plateau_tolerance}")
    s_sat = float(tail.mean())
    if s_sat <= 0:
        raise FitError("series never grows; no linear window")
    mask = (s >= 0.1 * s_sat) & (s <= 0.6 * s_sat)
    t = np.nonzero(mask)[0]
    if t.size < min_points:
        raise FitError(f"growth window holds {t.size} < {min_points} points")
    slope, intercept, rms, stderr = _ols(t, s[t])
    return VelocityFit(velocity=slope, intercept=intercept,
                       window=(int(t[0]), int(t[-1])), residual_rms=rms,
                       stderr=stderr, n_points=int(t.size),
                       policy_id=ENTROPY_POLICY)


def extract_front(field: np.ndarray, threshold: float, origin: int) -> np.ndarray:
    """Front distance series d(t) from an averaged OTOC field.

    For each layer, the farthest circular distance from ``origin`` among
    sites at or above ``threshold``, taken separately on the left- and
    right-moving sides and averaged; 0 when no site crosses.
    """
    c = np.asarray(field, dtype=float)
    if c.ndim != 2:
        raise ValueError("field must be (layers+1, sites)")
    if not 0.0 < threshold <= float(c.max()):
        raise FitError(
            f"threshold {threshold} above the field maximum {float(c.max()):.3f}")
    n = c.shape[1]
    x = np.arange(1, n + 1)
    offset = (x - origin + n // 2) % n - n // 2   # signed circular offset
    d = np.zeros(c.shape[0], dtype=float)
    for t in range(c.shape[0]):
        hit = c[t] >= threshold
        right = offset[hit & (offset > 0)]
        left = -offset[hit & (offset < 0)]
        d[t] = 0.5 * ((right.max() if right.size else 0)
                      + (left.max() if left.size else 0))
    return d


def fit_butterfly_velocity(d: np.ndarray, chain_length: int,
                           min_points: int = 5) -> VelocityFit:
    """Slope of the front trajectory over 5 <= d(t) <= 0.4 N.

    The lower cutoff drops the startup transient, the upper one stays
    clear of the wrap-around region. A non-monotone smoothed trajectory
    inside the window is flagged, not rejected.
    """
    d = np.asarray(d, dtype=float)
    mask = (d >= 5.0) & (d <= 0.4 * chain_length)
    t = np.nonzero(mask)[0]
    if t.size < min_points:
        raise FitError(f"front window holds {t.size} < {min_points} points")
    slope, intercept, rms, stderr = _ols(t, d[t])
    smooth = np.convolve(d[t], np.ones(3) / 3.0, mode="valid")
    monotonic = bool(np.all(np.diff(smooth) >= -1e-9))
    return VelocityFit(velocity=slope, intercept=intercept,
                       window=(int(t[0]), int(t[-1])), residual_rms=rms,
                       stderr=stderr, n_points=int(t.size),
                       policy_id=FRONT_POLICY, monotonic=monotonic)


def fit_butterfly_with_sensitivity(field: np.ndarray, chain_length: int,
                                   origin: int,
                                   threshold: float = DEFAULT_THRESHOLD) -> VelocityFit:
    """Butterfly fit at ``threshold`` with the velocity re-extracted at
    every sensitivity threshold recorded alongside."""
    main = fit_butterfly_velocity(extract_front(field, threshold, origin),
                                  chain_length)
    sens: dict[float, float] = {}
    for c_star in SENSITIVITY_THRESHOLDS:
        try:
            fit = fit_butterfly_velocity(
                extract_front(field, c_star, origin), chain_length)
            sens[c_star] = fit.velocity
        except FitError:
            continue
    return VelocityFit(velocity=main.velocity, intercept=main.intercept,
                       window=main.window, residual_rms=main.residual_rms,
                       stderr=main.stderr, n_points=main.n_points,
                       policy_id=main.policy_id, monotonic=main.monotonic,
                       sensitivity=sens)


# -- joined descriptor/velocity reporting -----------------------------------

@dataclass(frozen=True)
class BlockVelocityRecord:
    block_name: str
    n: int
    v_e: float
    v_e_stderr: float
    v_b: float
    v_b_stderr: float
    gamma: float
    wp: int
    policy_id: str


def descriptor_correlation_report(records: list[BlockVelocityRecord]):
    """Joined velocities/descriptors table plus the two scatter datasets.

    Returns (table_rows, ve_vs_gamma, vb_vs_wp) where each element is a
    list of column tuples ready for CSV serialization.
    """
    table = [(r.block_name, r.n, r.v_e, r.v_e_stderr, r.v_b, r.v_b_stderr,
              r.gamma, r.wp, r.policy_id) for r in records]
    ve_gamma = [(r.gamma, r.v_e, r.block_name, r.n) for r in records]
    vb_wp = [(r.wp, r.v_b, r.block_name, r.n) for r in records]
    return table, ve_gamma, vb_wp
