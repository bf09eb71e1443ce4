"""Algebraic phasor network: star of inverter branches into a common bus.

Every inverter drives its scaled internal voltage E_i through a series branch
impedance Z_i into the point of common coupling; the downstream grid plus load
is lumped into a single impedance z_net from the bus to ground.  Impedances
are evaluated quasi-statically at one frequency, so the network is a purely
algebraic map from internal voltages to bus voltage and branch currents:

    V = sum_i(Y_i * E_i) / Y_sigma,     I_i = (E_i - V) * Y_i,
    Y_sigma = sum_i(Y_i) + Y_net.

A start-up series impedance can be added per branch (``z_extra``); it is
active while t < t_z and dropped afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .oscillator import InverterParams
from .phasor import Phasor, ZeroImpedanceError, branch_impedance_at

_ZERO_TOL = 0.0  # impedances must be exactly representable as nonzero


@dataclass(frozen=True)
class BranchParams:
    """Series branch of one inverter: line part, virtual part, start-up extra."""

    r_f: float = 0.0
    l_f: float = 0.0
    r_v: float = 0.0
    x_v: float = 0.0
    z_extra: complex = 0j   # additional series impedance active for t < t_z

    @classmethod
    def from_inverter(cls, params: InverterParams,
                      z_extra: complex = 0j) -> "BranchParams":
        return cls(params.r_f, params.l_f, params.r_v, params.x_v, z_extra)

    def impedance_at(self, omega: float, t: float = math.inf,
                     t_z: float = 0.0) -> complex:
        z = branch_impedance_at(self.r_f, self.l_f, self.r_v, self.x_v, omega)
        if t < t_z:
            z += self.z_extra
        return z


@dataclass(frozen=True)
class NetworkConfig:
    """Star network: per-inverter branches, downstream impedance, frequency."""

    branches: tuple[BranchParams, ...]
    z_net: complex
    omega_eval: float
    t_z: float = 0.0        # removal time of every branch's z_extra, s

    def __post_init__(self) -> None:
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise ValueError("network needs at least one branch")
        if abs(self.z_net) <= _ZERO_TOL:
            raise ValueError("z_net must be nonzero")
        if self.omega_eval <= 0:
            raise ValueError(f"omega_eval must be > 0, got {self.omega_eval}")
        if self.t_z < 0:
            raise ValueError(f"t_z must be >= 0, got {self.t_z}")
        for i, b in enumerate(self.branches):
            for t in (0.0, math.inf):
                if abs(b.impedance_at(self.omega_eval, t, self.t_z)) <= _ZERO_TOL:
                    raise ZeroImpedanceError(f"branch {i + 1} has zero impedance")

    @property
    def n(self) -> int:
        return len(self.branches)

    def impedances(self, t: float = math.inf) -> np.ndarray:
        return np.array([b.impedance_at(self.omega_eval, t, self.t_z)
                         for b in self.branches])

    def admittances(self, t: float = math.inf) -> np.ndarray:
        return 1.0 / self.impedances(t)

    @property
    def y_net(self) -> complex:
        return 1.0 / self.z_net


@dataclass(frozen=True)
class NetworkSolution:
    """Bus voltage, branch currents and the synchronized voltage ratio."""

    v_pcc: Phasor
    currents: tuple[Phasor, ...]
    k_sh: complex


@dataclass(frozen=True)
class OscillatorDeath:
    """Marker for a negative amplitude radicand: the only steady amplitude is 0."""

    radicand: float


@dataclass(frozen=True)
class SynchronizedSteady:
    """Closed-form synchronized periodic solution of the coupled plant."""

    r_star: float               # internal amplitude, pu
    v_pcc_amplitude: float      # bus voltage amplitude, V
    current_amplitudes: tuple[float, ...]   # per-branch amplitude, A
    k_sh: complex


def total_admittance(cfg: NetworkConfig, t: float) -> complex:
    """Sum of active branch admittances plus the downstream admittance."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return complex(cfg.admittances(t).sum()) + cfg.y_net


def pcc_voltage(internal: Sequence[Phasor], cfg: NetworkConfig,
                t: float) -> Phasor:
    """Bus voltage: admittance-weighted average of the internal voltages."""
    if len(internal) != cfg.n:
        raise ValueError(f"expected {cfg.n} internal voltages, got {len(internal)}")
    e = np.array([p.as_complex for p in internal])
    y = cfg.admittances(t)
    v = np.dot(y, e) / total_admittance(cfg, t)
    return Phasor.from_complex(v)


def branch_currents(internal: Sequence[Phasor], v_pcc: Phasor,
                    cfg: NetworkConfig, t: float) -> list[Phasor]:
    """Per-branch currents (E_i - V) * Y_i flowing into the bus."""
    if len(internal) != cfg.n:
        raise ValueError(f"expected {cfg.n} internal voltages, got {len(internal)}")
    e = np.array([p.as_complex for p in internal])
    i = (e - v_pcc.as_complex) * cfg.admittances(t)
    return [Phasor.from_complex(c) for c in i]


def solve_network(internal: Sequence[Phasor], cfg: NetworkConfig,
                  t: float) -> NetworkSolution:
    """Solve the star network for one set of internal voltages."""
    v = pcc_voltage(internal, cfg, t)
    currents = branch_currents(internal, v, cfg, t)
    return NetworkSolution(v, tuple(currents), k_sh(cfg, t))


def k_sh(cfg: NetworkConfig, t: float) -> complex:
    """Synchronized bus-to-internal voltage ratio sum(Y_i)/Y_sigma.

    Approaches 1 when the branch admittances dominate the downstream
    admittance.  The imaginary part is a model-validity diagnostic; the
    synchronized amplitude depends only on the real part.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    y_branch = complex(cfg.admittances(t).sum())
    return y_branch / (y_branch + cfg.y_net)


def particular_radius(k_sh_real: float, params: InverterParams
                      ) -> Union[float, OscillatorDeath]:
    """Amplitude of the synchronized periodic solution.

    r*^2 = 2*Xnom^2 - kappa*beta*(1 - K_sh)/xi.  A negative radicand means the
    feedback outweighs the oscillator's amplitude regulation and the only
    steady solution is x = 0 (oscillator death) -- a modeled outcome, not an
    error.
    """
    radicand = params.x_nom_sq2 - params.kappa_beta * (1.0 - k_sh_real) / params.xi
    if radicand <= 0:
        return OscillatorDeath(radicand)
    return math.sqrt(radicand)


def synchronized_steady(params: InverterParams, cfg: NetworkConfig,
                        t: float = math.inf
                        ) -> Union[SynchronizedSteady, OscillatorDeath]:
    """Closed-form synchronized solution: amplitudes of x, bus voltage, currents.

    Evaluated by default with start-up impedances removed (t = inf).  The
    current sharing ratio |I_i| : |I_j| equals |Y_i| : |Y_j| independent of the
    downstream impedance.
    """
    ks = k_sh(cfg, t)
    r = particular_radius(ks.real, params)
    if isinstance(r, OscillatorDeath):
        return r
    y = cfg.admittances(t)
    y_sigma = complex(y.sum()) + cfg.y_net
    scale = params.beta * r
    currents = np.abs(y * cfg.y_net / y_sigma) * scale
    return SynchronizedSteady(
        r_star=r,
        v_pcc_amplitude=abs(ks) * scale,
        current_amplitudes=tuple(float(c) for c in currents),
        k_sh=ks,
    )
