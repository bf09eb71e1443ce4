"""Decentralized contraction certificates for the closed-loop oscillator.

The local map h(x) = (chi*I + omega0*J - kappa*beta*I)x is contracting in the
Euclidean metric whenever

    margin c = kappa*beta - xi*2*Xnom^2 > 0,

because the symmetric Jacobian part is bounded above by -c for every state.
Since all coupled inverters share the identical bus-voltage input, a positive
margin certifies that any two trajectories approach each other at least as
fast as exp(-c*t), and that a bounded disturbance d produces at most a
|d|/c-radius steady separation.  Everything here is plain algebra on the
parameters plus sampled verification of the eigenvalue bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .oscillator import InverterParams, sym_lambda_max
from .phasor import Phasor

BOUND_SLACK = 1e-9


class NotContractingError(ValueError):
    """Raised when an operation requires a positive contraction margin."""


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of the algebraic contraction check for one parameter set."""

    margin_c: float                         # kappa*beta - xi*2*Xnom^2, 1/s
    passed: bool                            # margin strictly positive
    params: InverterParams
    lambda_max_sampled: Optional[float] = None
    error_ball_radius: Optional[float] = None   # pu per unit disturbance bound


@dataclass(frozen=True)
class SampledLambdaResult:
    max_found: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class EnvelopeResult:
    ok: bool
    first_violation_time: Optional[float] = None


def certificate_margin(params: InverterParams) -> CertificateReport:
    """Algebraic certificate: margin kappa*beta - xi*2*Xnom^2, pass iff > 0."""
    margin = params.kappa_beta - params.xi * params.x_nom_sq2
    return CertificateReport(margin_c=margin, passed=margin > 0, params=params)


def sampled_lambda_check(params: InverterParams, radius: float,
                         n_samples: int, seed: int) -> SampledLambdaResult:
    """Verify the eigenvalue bound on sampled states of norm <= radius.

    The origin (the analytic maximizer of the symmetric part's top eigenvalue)
    is always included ahead of the ``n_samples`` random states.
    """
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, n_samples)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, n_samples))
    states = [Phasor(0.0, 0.0)]
    states += [Phasor(ri * np.cos(ti), ri * np.sin(ti))
               for ri, ti in zip(r, theta)]
    max_found = max(sym_lambda_max(x, params) for x in states)
    bound = params.xi * params.x_nom_sq2 - params.kappa_beta
    return SampledLambdaResult(max_found=max_found, bound=bound,
                               ok=max_found <= bound + BOUND_SLACK)


def error_ball_radius(d_bar: float, c: float) -> float:
    """Steady separation bound d_bar/c for disturbances with |d| <= d_bar."""
    if d_bar < 0:
        raise ValueError(f"d_bar must be >= 0, got {d_bar}")
    if c <= 0:
        raise NotContractingError(
            f"error ball needs a positive contraction margin, got c={c}")
    return d_bar / c


def envelope_check(t_i: np.ndarray, x_i: np.ndarray,
                   t_j: np.ndarray, x_j: np.ndarray,
                   c: float, slack: float = 0.05) -> EnvelopeResult:
    """Check |x_i(t) - x_j(t)| <= exp(-c*t)*|x_i(0) - x_j(0)|*(1 + slack).

    The two series must share one uniform time grid; the states are complex
    alpha + j*beta samples.  Reports the first grid time that exceeds the
    envelope.
    """
    t_i = np.asarray(t_i, dtype=float)
    t_j = np.asarray(t_j, dtype=float)
    if c <= 0:
        raise NotContractingError(
            f"envelope needs a positive contraction rate, got c={c}")
    if t_i.shape != t_j.shape or not np.array_equal(t_i, t_j):
        raise ValueError("trajectories are on different time grids")
    if len(t_i) != len(x_i) or len(t_j) != len(x_j):
        raise ValueError("time grid and state series lengths differ")
    if len(t_i) >= 3:
        steps = np.diff(t_i)
        if np.max(steps) - np.min(steps) > 1e-9 * max(np.max(np.abs(steps)), 1e-300):
            raise ValueError("time grid is not uniform")
    dist = np.abs(np.asarray(x_i) - np.asarray(x_j))
    envelope = dist[0] * np.exp(-c * (t_i - t_i[0])) * (1.0 + slack)
    bad = np.nonzero(dist > envelope)[0]
    if bad.size == 0:
        return EnvelopeResult(ok=True)
    return EnvelopeResult(ok=False, first_violation_time=float(t_i[bad[0]]))
