"""Canned wind-plant scenarios and post-processing metrics.

Two stock configurations mirror the validation study layout:

* case I -- every branch is the bare 0.75 km collector line, no virtual
  impedance, no start-up impedance.
* case II -- virtual impedance scales each branch to 20x the case-I value
  except a designated low-impedance pair at 10.5x, and every branch carries a
  (multiplier - 1)x start-up series impedance removed at ``t_z``.

The downstream load is specified in per-unit of a base impedance tied to the
aggregate branch admittance: |z_net| = load_pu * domination_ratio / |sum(Y_i)|.
A large default ratio keeps the branch admittances dominant even while the
start-up impedances are in circuit, which the reduced algebraic model needs to
stay out of the oscillator-death regime during the soft start.

Metrics quantify what the runs are meant to show: worst pairwise state
distance (synchronization), trailing-window current amplitudes and their
ratios (proportional sharing), steady amplitude, and the fitted exponential
decay rate of the synchronization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .engine import (DisturbanceSpec, InitSpec, Scenario, Trajectory,
                     build_network)
from .network import OscillatorDeath, particular_radius
from .oscillator import InverterParams

# per-km collector line constants, ohm/km and H/km
LINE_R_PER_KM = 0.1153
LINE_L_PER_KM = 1.05e-3
LINE_KM = 0.75

CASE2_HIGH_MULT = 20.0
CASE2_LOW_MULT = 10.5

SYNC_THRESHOLD = 1e-3       # pu; "synchronized" means below this
DEFAULT_WINDOW = 0.04       # s; two cycles at 50 Hz


@dataclass(frozen=True)
class SharingReport:
    """Trailing-window RMS current amplitudes and their sharing ratios."""

    amplitudes: tuple[float, ...]       # A
    ratios: tuple[float, ...]           # normalized to branch 1
    predicted: tuple[float, ...]        # |Y_i|/|Y_1| from the impedances
    error: float                        # max relative deviation from predicted
    synchronized: bool
    window: float


@dataclass(frozen=True)
class MetricsReport:
    """Quantities reported for one simulation run."""

    sync_error_series: np.ndarray       # max pairwise |x_i - x_j| per step, pu
    sync_time: Optional[float]          # s; None if never achieved
    sync_threshold: float
    sharing_ratios: tuple[float, ...]
    sharing_ratio_error: float
    synchronized: bool
    amplitude: float                    # pu, trailing-window mean of |x_1|
    fitted_rate: Optional[float]        # 1/s; None if the fit is degenerate
    window: float


def case2_low_indices(n: int) -> tuple[int, int]:
    """0-based positions of the low-impedance pair (units #11/#19 when present)."""
    if n >= 19:
        return (10, 18)
    return (1, 2)


def build_case(case_id: str, n: int, seed: int, *,
               t_end: float = 2.0, dt: float = 1e-4,
               load_pu: float = 1.0, load_angle: float = 0.0,
               domination_ratio: float = 1e4,
               zt_multiplier: float = 200.0, zt_jitter: bool = False,
               t_z: float = 0.4,
               base: Optional[InverterParams] = None,
               init: Optional[InitSpec] = None,
               disturbance: Optional[DisturbanceSpec] = None) -> Scenario:
    """Fully populated scenario for case I or II with n inverters."""
    case = str(case_id).strip().upper()
    if case in ("1", "I"):
        case = "I"
        if n < 2:
            raise ValueError(f"case I needs n >= 2, got {n}")
    elif case in ("2", "II"):
        case = "II"
        if n < 4:
            raise ValueError(f"case II needs n >= 4 so both impedance "
                             f"groups are populated, got {n}")
    else:
        raise ValueError(f"unknown case id {case_id!r}")
    if load_pu <= 0:
        raise ValueError(f"load_pu must be > 0, got {load_pu}")
    if not 0.0 <= load_angle <= math.pi / 2:
        raise ValueError(f"load_angle must be in [0, pi/2], got {load_angle}")
    if domination_ratio <= 0:
        raise ValueError(
            f"domination_ratio must be > 0, got {domination_ratio}")
    if zt_multiplier < 1:
        raise ValueError(f"zt_multiplier must be >= 1, got {zt_multiplier}")

    if base is None:
        base = InverterParams()
    r_line = LINE_KM * LINE_R_PER_KM
    x_line = LINE_KM * base.omega0 * LINE_L_PER_KM

    if case == "I":
        mults = [1.0] * n
    else:
        low = case2_low_indices(n)
        mults = [CASE2_LOW_MULT if k in low else CASE2_HIGH_MULT
                 for k in range(n)]
    # physical line plus virtual impedance scaling the branch to mult x line
    params = tuple(
        replace(base, r_f=r_line, l_f=LINE_KM * LINE_L_PER_KM,
                r_v=(m - 1.0) * r_line, x_v=(m - 1.0) * x_line)
        for m in mults)

    z_branch = np.array([complex(m * r_line, m * x_line) for m in mults])
    if case == "II" and zt_multiplier > 1:
        factors = np.ones(n)
        if zt_jitter:
            factors = np.random.default_rng([seed, 1]).uniform(0.8, 1.2, n)
        z_extras = [(zt_multiplier * f - 1.0) * z for f, z in
                    zip(factors, z_branch)]
    else:
        z_extras = [0j] * n
        t_z = 0.0

    y_sum = np.sum(1.0 / z_branch)
    z_net = (load_pu * domination_ratio / abs(y_sum)) * np.exp(1j * load_angle)
    network = build_network(params, complex(z_net), t_z=t_z, z_extras=z_extras)

    if init is None:
        init = InitSpec(seed=seed, norm_bound=1.0, overrides=((0, 10.0),))
    return Scenario(params=params, network=network, t_end=t_end, dt=dt,
                    init=init, disturbance=disturbance)


def sync_error(traj: Trajectory) -> np.ndarray:
    """Max pairwise |x_i - x_j| at each time step."""
    if traj.n < 2:
        raise ValueError("synchronization error needs at least 2 inverters")
    diff = np.abs(traj.x[:, :, None] - traj.x[:, None, :])
    return diff.max(axis=(1, 2))


def sync_time(t: np.ndarray, series: np.ndarray,
              threshold: float = SYNC_THRESHOLD) -> Optional[float]:
    """First time from which the series stays below threshold, or None."""
    below = series < threshold
    if not below[-1]:
        return None
    # last index where the series is still >= threshold
    above = np.nonzero(~below)[0]
    if len(above) == 0:
        return float(t[0])
    return float(t[above[-1] + 1])


def amplitude_estimate(traj: Trajectory, inverter: int,
                       window: float = DEFAULT_WINDOW) -> float:
    """Mean of |x_k| over the trailing window."""
    sel = traj.t >= traj.t[-1] - window
    return float(np.abs(traj.x[sel, inverter]).mean())


def steady_separation(traj: Trajectory, window: float = DEFAULT_WINDOW) -> float:
    """Mean of the max pairwise distance over the trailing window."""
    sel = traj.t >= traj.t[-1] - window
    return float(sync_error(traj)[sel].mean())


def sharing_ratio_report(traj: Trajectory,
                         window: float = DEFAULT_WINDOW,
                         threshold: float = SYNC_THRESHOLD) -> SharingReport:
    """Trailing-window RMS current amplitudes against the admittance ratios."""
    if traj.t[-1] - traj.t[0] <= window:
        raise ValueError("trajectory is shorter than the averaging window")
    sel = traj.t >= traj.t[-1] - window
    amps = np.sqrt((np.abs(traj.currents[sel]) ** 2).mean(axis=0))
    synchronized = traj.n < 2 or bool(
        (sync_error(traj)[sel] < threshold).all())
    y = np.abs(traj.scenario.network.admittances(math.inf))
    predicted = y / y[0]
    ratios = amps / amps[0] if amps[0] > 0 else np.full_like(amps, np.nan)
    error = float(np.abs(ratios / predicted - 1.0).max())
    return SharingReport(
        amplitudes=tuple(float(a) for a in amps),
        ratios=tuple(float(r) for r in ratios),
        predicted=tuple(float(p) for p in predicted),
        error=error, synchronized=synchronized, window=window)


def fit_decay_rate(t: np.ndarray, series: np.ndarray,
                   t_start: Optional[float] = None,
                   t_stop: Optional[float] = None) -> float:
    """Exponential decay rate: sign-flipped LSQ slope of log(series) vs t.

    Non-positive samples are excluded; fewer than 4 usable points in the
    window is an error.
    """
    t = np.asarray(t, dtype=float)
    series = np.asarray(series, dtype=float)
    mask = series > 0
    if t_start is not None:
        mask &= t >= t_start
    if t_stop is not None:
        mask &= t <= t_stop
    if mask.sum() < 4:
        raise ValueError(
            f"decay fit needs at least 4 positive samples, got {mask.sum()}")
    slope, _ = np.polyfit(t[mask], np.log(series[mask]), 1)
    return float(-slope)


def build_metrics(traj: Trajectory, *,
                  window: float = DEFAULT_WINDOW,
                  threshold: float = SYNC_THRESHOLD) -> MetricsReport:
    """Standard post-processing bundle for a simulation run."""
    if traj.n >= 2:
        series = sync_error(traj)
    else:
        series = np.zeros(len(traj.t))
    t_sync = sync_time(traj.t, series, threshold)
    sharing = sharing_ratio_report(traj, window, threshold)
    amplitude = amplitude_estimate(traj, 0, window)

    # fit the decay where the series is still well above the roundoff floor
    floor = max(1e-12, 1e-12 * float(series[0]))
    usable = np.nonzero(series > floor)[0]
    rate: Optional[float] = None
    if len(usable) > 4:
        stop = float(traj.t[usable[-1]])
        start = float(traj.t[min(3, len(traj.t) - 1)])
        try:
            rate = fit_decay_rate(traj.t, series, start, stop)
        except ValueError:
            rate = None
    return MetricsReport(
        sync_error_series=series, sync_time=t_sync, sync_threshold=threshold,
        sharing_ratios=sharing.ratios, sharing_ratio_error=sharing.error,
        synchronized=sharing.synchronized, amplitude=amplitude,
        fitted_rate=rate, window=window)


def predicted_r_star(scenario: Scenario):
    """Closed-form synchronized amplitude for a scenario (post start-up)."""
    from .network import k_sh
    ks = k_sh(scenario.network, math.inf)
    return particular_radius(ks.real, scenario.params[0])


__all__ = [
    "CASE2_HIGH_MULT", "CASE2_LOW_MULT", "DEFAULT_WINDOW", "SYNC_THRESHOLD",
    "MetricsReport", "SharingReport", "OscillatorDeath",
    "amplitude_estimate", "build_case", "build_metrics", "case2_low_indices",
    "fit_decay_rate", "predicted_r_star", "sharing_ratio_report",
    "steady_separation", "sync_error", "sync_time",
]
