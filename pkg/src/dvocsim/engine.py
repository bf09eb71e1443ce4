"""Fixed-step simulation of N oscillators coupled through the algebraic bus.

Every step evaluates the common bus voltage from the current states (the
network is algebraic, solved by substitution) and advances all inverters with
classical RK4.  The per-inverter dynamics are deliberately assembled as

    dx_k/dt = h(x_k) + kappa*v_o(t) [+ d_k(t)]

with the identical bus term for every k, which is the structure the
synchronization certificate relies on.  Fixed stepping keeps runs bit-exact
for a given scenario and seed; start-up impedance removal is aligned to the
step boundary at or after t_z.  A run is strictly sequential, but distinct
scenarios share no mutable state and can be simulated concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .network import BranchParams, NetworkConfig
from .oscillator import InverterParams

DIVERGENCE_NORM = 100.0     # pu, far outside any modeled regime
MAX_DT_OMEGA = 0.2          # resolution guard: > ~31 steps per cycle

SHARED_FIELDS = ("xi", "x_nom_sq2", "omega0", "kappa", "beta")
WAVEFORMS = ("constant", "rotating")


class SimulationDiverged(RuntimeError):
    """A state left the modeled regime; carries the partial trajectory."""

    def __init__(self, t: float, inverter: int,
                 trajectory: Optional["Trajectory"] = None):
        super().__init__(
            f"state of inverter index {inverter} diverged at t={t:.6g} s")
        self.t = t
        self.inverter = inverter
        self.trajectory = trajectory


@dataclass(frozen=True, eq=False)
class PlantState:
    """Stacked complex alpha/beta states of all inverters at one time."""

    t: float
    x: np.ndarray   # shape (N,), complex128, pu

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=complex)
        object.__setattr__(self, "x", x)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("state must be a non-empty 1-d complex array")
        if not np.all(np.isfinite(x.view(float))):
            raise ValueError("state contains non-finite components")

    @property
    def n(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class InitSpec:
    """Random initial-state policy: uniform angle, uniform norm, forced norms."""

    seed: int
    norm_bound: float = 1.0
    overrides: tuple[tuple[int, float], ...] = ()   # (0-based index, norm)

    def __post_init__(self) -> None:
        object.__setattr__(self, "overrides", tuple(
            (int(k), float(v)) for k, v in self.overrides))
        if self.norm_bound < 0:
            raise ValueError(f"norm_bound must be >= 0, got {self.norm_bound}")
        for k, v in self.overrides:
            if v < 0:
                raise ValueError(f"override norm must be >= 0, got {v}")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Bounded deterministic disturbance added to one inverter's derivative."""

    inverter: int           # 0-based index
    amplitude: float        # |d(t)| <= amplitude, pu/s
    waveform: str = "rotating"

    def __post_init__(self) -> None:
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.waveform not in WAVEFORMS:
            raise ValueError(
                f"waveform must be one of {WAVEFORMS}, got {self.waveform!r}")


@dataclass(frozen=True)
class Scenario:
    """Everything one reproducible run needs."""

    params: tuple[InverterParams, ...]
    network: NetworkConfig
    t_end: float
    dt: float
    init: InitSpec
    disturbance: Optional[DisturbanceSpec] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        if not self.params:
            raise ValueError("scenario needs at least one inverter")
        if len(self.params) != self.network.n:
            raise ValueError(
                f"{len(self.params)} inverters but {self.network.n} branches")
        ref = self.params[0]
        for k, p in enumerate(self.params[1:], start=2):
            for name in SHARED_FIELDS:
                if getattr(p, name) != getattr(ref, name):
                    raise ValueError(
                        f"inverter {k} differs in {name}: the local map must "
                        "be identical across inverters")
        for k, (p, b) in enumerate(zip(self.params, self.network.branches),
                                   start=1):
            if (p.r_f, p.l_f, p.r_v, p.x_v) != (b.r_f, b.l_f, b.r_v, b.x_v):
                raise ValueError(
                    f"branch {k} impedance parts disagree between params "
                    "and network config")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_end < self.dt:
            raise ValueError(f"t_end must be >= dt, got {self.t_end}")
        if not 0.0 < self.dt * ref.omega0 < MAX_DT_OMEGA:
            raise ValueError(
                f"dt*omega0 = {self.dt * ref.omega0:.3g} outside (0, "
                f"{MAX_DT_OMEGA}): need > ~31 steps per cycle")
        if self.disturbance is not None and not (
                0 <= self.disturbance.inverter < len(self.params)):
            raise ValueError(
                f"disturbance inverter index {self.disturbance.inverter} "
                f"out of range for {len(self.params)} inverters")
        for k, _ in self.init.overrides:
            if not 0 <= k < len(self.params):
                raise ValueError(
                    f"init override index {k} out of range for "
                    f"{len(self.params)} inverters")

    @property
    def n(self) -> int:
        return len(self.params)

    @property
    def n_steps(self) -> int:
        return max(1, round(self.t_end / self.dt))


@dataclass(eq=False)
class Trajectory:
    """Uniform-grid time series of states, bus voltage and branch currents."""

    t: np.ndarray           # (S+1,), s
    x: np.ndarray           # (S+1, N) complex, pu
    v_o: np.ndarray         # (S+1,) complex, V
    currents: np.ndarray    # (S+1, N) complex, A
    scenario: Scenario = field(repr=False)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def state(self, i: int) -> PlantState:
        return PlantState(float(self.t[i]), self.x[i])

    @property
    def final_state(self) -> PlantState:
        return self.state(len(self.t) - 1)


def build_network(params: Sequence[InverterParams], z_net: complex,
                  t_z: float = 0.0,
                  z_extras: Optional[Sequence[complex]] = None) -> NetworkConfig:
    """Assemble the star network from the per-inverter branch parts."""
    if z_extras is None:
        z_extras = [0j] * len(params)
    branches = tuple(BranchParams.from_inverter(p, z)
                     for p, z in zip(params, z_extras))
    return NetworkConfig(branches=branches, z_net=z_net,
                         omega_eval=params[0].omega0, t_z=t_z)


def init_random(scenario: Scenario) -> PlantState:
    """Seeded initial state: uniform angles, uniform norms, forced overrides."""
    rng = np.random.default_rng(scenario.init.seed)
    n = scenario.n
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    norm = rng.uniform(0.0, scenario.init.norm_bound, n)
    for k, forced in scenario.init.overrides:
        norm[k] = forced
    return PlantState(0.0, norm * np.exp(1j * theta))


def _schedule(scenario: Scenario, t: float) -> tuple[np.ndarray, complex]:
    """Branch admittances and total admittance for the step starting at t."""
    net = scenario.network
    y = net.admittances(t)
    return y, complex(y.sum()) + net.y_net


def _disturbance_at(scenario: Scenario, t: float) -> complex:
    d = scenario.disturbance
    if d is None or d.amplitude == 0.0:
        return 0j
    if d.waveform == "constant":
        return complex(d.amplitude)
    return d.amplitude * np.exp(1j * scenario.params[0].omega0 * t)


def _field(t: float, x: np.ndarray, scenario: Scenario,
           y: np.ndarray, y_sigma: complex) -> np.ndarray:
    """Coupled derivative h(x_k) + kappa*v_o (+ disturbance on one inverter)."""
    p = scenario.params[0]
    chi_v = p.xi * (p.x_nom_sq2 - (x.real ** 2 + x.imag ** 2))
    h = (chi_v - p.kappa_beta + 1j * p.omega0) * x
    v_o = p.beta * np.dot(y, x) / y_sigma
    dx = h + p.kappa * v_o
    if scenario.disturbance is not None:
        dx[scenario.disturbance.inverter] += _disturbance_at(scenario, t)
    return dx


def rk4_increment(f, t: float, y, dt: float):
    """One classical 4th-order Runge-Kutta step of dy/dt = f(t, y).

    Generic over scalars and arrays; this single kernel is what every
    simulation step in the package goes through.
    """
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + (0.5 * dt) * k1)
    k3 = f(t + 0.5 * dt, y + (0.5 * dt) * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4(t: float, x: np.ndarray, dt: float, scenario: Scenario,
         y: np.ndarray, y_sigma: complex) -> np.ndarray:
    return rk4_increment(
        lambda ts, xs: _field(ts, xs, scenario, y, y_sigma), t, x, dt)


def _check_finite(x: np.ndarray, t: float) -> None:
    bad = ~np.isfinite(x.view(float).reshape(len(x), 2)).all(axis=1)
    bad |= np.abs(x) > DIVERGENCE_NORM
    if bad.any():
        raise SimulationDiverged(t, int(np.argmax(bad)))


def deriv_coupled(state: PlantState, scenario: Scenario) -> np.ndarray:
    """Coupled derivative of all inverters at the state's time."""
    y, y_sigma = _schedule(scenario, state.t)
    return _field(state.t, state.x, scenario, y, y_sigma)


def rk4_step(state: PlantState, scenario: Scenario) -> PlantState:
    """One classical RK4 step; the impedance schedule is frozen at state.t."""
    y, y_sigma = _schedule(scenario, state.t)
    x_next = _rk4(state.t, state.x, scenario.dt, scenario, y, y_sigma)
    t_next = state.t + scenario.dt
    _check_finite(x_next, t_next)
    return PlantState(t_next, x_next)


def simulate(scenario: Scenario,
             x0: Optional[np.ndarray] = None) -> Trajectory:
    """Run the scenario on the uniform grid t_i = i*dt.

    ``x0`` overrides the seeded random initial state (used by tests and
    sweeps that need full control of initial conditions).  On divergence the
    trajectory up to the last finite state is attached to the raised
    :class:`SimulationDiverged`.
    """
    n = scenario.n
    steps = scenario.n_steps
    dt = scenario.dt
    p = scenario.params[0]

    if x0 is None:
        x = init_random(scenario).x
    else:
        x = PlantState(0.0, x0).x.copy()
        if len(x) != n:
            raise ValueError(f"x0 has {len(x)} states, scenario has {n}")

    t_grid = np.arange(steps + 1) * dt
    xs = np.empty((steps + 1, n), dtype=complex)
    vs = np.empty(steps + 1, dtype=complex)
    cs = np.empty((steps + 1, n), dtype=complex)

    # the start-up extra impedance makes the admittances piecewise constant
    y_pre, ysum_pre = _schedule(scenario, 0.0)
    y_post, ysum_post = _schedule(scenario, np.inf)
    t_z = scenario.network.t_z

    def record(i: int, xi: np.ndarray) -> None:
        y, ysum = (y_pre, ysum_pre) if t_grid[i] < t_z else (y_post, ysum_post)
        v = p.beta * np.dot(y, xi) / ysum
        xs[i] = xi
        vs[i] = v
        cs[i] = (p.beta * xi - v) * y

    record(0, x)
    for s in range(steps):
        t_s = t_grid[s]
        y, ysum = (y_pre, ysum_pre) if t_s < t_z else (y_post, ysum_post)
        x = _rk4(t_s, x, dt, scenario, y, ysum)
        try:
            _check_finite(x, t_grid[s + 1])
        except SimulationDiverged as err:
            err.trajectory = Trajectory(
                t_grid[:s + 1].copy(), xs[:s + 1].copy(),
                vs[:s + 1].copy(), cs[:s + 1].copy(), scenario)
            raise
        record(s + 1, x)
    return Trajectory(t_grid, xs, vs, cs, scenario)
