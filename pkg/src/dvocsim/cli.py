"""Command-line entry point, scenario files and report/time-series output.

Scenario files are strict JSON: unknown keys are rejected so a typo in a
physics parameter cannot silently fall back to a default.  Two forms exist:

* case form: ``{"case": "II", "n": 4, "seed": 7, ...}`` builds a stock
  scenario, with optional knobs under "network"/"oscillator"/"init"/...
* explicit form: no "case" key; per-branch impedances and the downstream
  impedance are spelled out.  This is also the fully-resolved form the tool
  echoes into every report, and it round-trips.

Complex values are written as two-element ``[re, im]`` arrays.  Inverter
numbering in files and reports is 1-based (matching column names such as
``x_alpha_1``); Python APIs are 0-based.

Exit codes: 0 success (for ``certify``: certificate passed), 1 bad
input/unsatisfied certificate/IO failure, 2 simulation divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .certificates import (CertificateReport, certificate_margin,
                           error_ball_radius, sampled_lambda_check)
from .engine import (DisturbanceSpec, InitSpec, Scenario, SimulationDiverged,
                     Trajectory, build_network, simulate)
from .network import OscillatorDeath, k_sh
from .oscillator import InverterParams
from .phasor import SQRT3_OVER_2
from .scenarios import build_case, build_metrics, predicted_r_star

OSCILLATOR_FIELDS = ("xi", "x_nom_sq2", "omega0", "kappa", "beta")
BRANCH_FIELDS = ("r_f", "l_f", "r_v", "x_v")
CASE_NETWORK_KEYS = ("t_z", "load_pu", "load_angle", "domination_ratio",
                     "zt_multiplier", "zt_jitter")


class ScenarioError(ValueError):
    """A scenario file or override is malformed."""


# ---------------------------------------------------------------------------
# scenario (de)serialization


def _check_keys(d: dict, allowed: Sequence[str], where: str) -> None:
    for key in d:
        if key not in allowed:
            raise ScenarioError(f"unknown key '{key}' in {where}")


def _as_complex(v: Any, where: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if (isinstance(v, (list, tuple)) and len(v) == 2
            and all(isinstance(c, (int, float)) for c in v)):
        return complex(v[0], v[1])
    raise ScenarioError(f"'{where}' must be a number or [re, im] pair")


def _num(d: dict, key: str, where: str, default=None) -> Any:
    v = d.get(key, default)
    if v is None:
        raise ScenarioError(f"missing required key '{key}' in {where}")
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ScenarioError(f"'{key}' in {where} must be a number")
    return v


def _parse_init(d: dict, seed: int, n: int) -> InitSpec:
    _check_keys(d, ("norm_bound", "overrides"), "init")
    norm_bound = _num(d, "norm_bound", "init", 1.0)
    overrides = []
    for key, val in d.get("overrides", {}).items():
        try:
            idx = int(key)
        except ValueError:
            raise ScenarioError(f"init override key '{key}' is not an "
                                "inverter number") from None
        if not 1 <= idx <= n:
            raise ScenarioError(f"init override inverter {idx} out of "
                                f"range 1..{n}")
        if not isinstance(val, (int, float)):
            raise ScenarioError(f"init override for inverter {idx} must "
                                "be a number")
        overrides.append((idx - 1, float(val)))
    return InitSpec(seed=seed, norm_bound=float(norm_bound),
                    overrides=tuple(sorted(overrides)))


def _parse_disturbance(d: Optional[dict], n: int) -> Optional[DisturbanceSpec]:
    if d is None:
        return None
    _check_keys(d, ("inverter", "amplitude", "waveform"), "disturbance")
    idx = int(_num(d, "inverter", "disturbance"))
    if not 1 <= idx <= n:
        raise ScenarioError(f"disturbance inverter {idx} out of range 1..{n}")
    return DisturbanceSpec(inverter=idx - 1,
                           amplitude=float(_num(d, "amplitude", "disturbance")),
                           waveform=d.get("waveform", "rotating"))


def scenario_from_dict(raw: dict) -> Scenario:
    """Strictly parse a scenario dict (case form or explicit form)."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    top = ("case", "n", "seed", "t_end", "dt", "oscillator", "branches",
           "network", "init", "disturbance")
    _check_keys(raw, top, "scenario")
    if "seed" not in raw:
        raise ScenarioError("missing required key 'seed' in scenario")
    seed = int(_num(raw, "seed", "scenario"))
    n = int(_num(raw, "n", "scenario"))
    osc = dict(raw.get("oscillator", {}))
    _check_keys(osc, OSCILLATOR_FIELDS, "oscillator")
    for key in osc:
        _num(osc, key, "oscillator")

    if "case" in raw:
        if "branches" in raw:
            raise ScenarioError("'branches' is not allowed together with "
                                "'case' (the case defines the branches)")
        net = dict(raw.get("network", {}))
        _check_keys(net, CASE_NETWORK_KEYS, "network")
        jitter = net.pop("zt_jitter", False)
        if not isinstance(jitter, bool):
            raise ScenarioError("'zt_jitter' in network must be a boolean")
        knobs = {k: float(_num(net, k, "network")) for k in net}
        base = InverterParams(**{k: float(osc[k]) for k in osc})
        scenario = build_case(
            str(raw["case"]), n, seed,
            t_end=float(_num(raw, "t_end", "scenario", 2.0)),
            dt=float(_num(raw, "dt", "scenario", 1e-4)),
            zt_jitter=jitter, base=base, **knobs)
        init = scenario.init
        if "init" in raw:
            init = _parse_init(raw["init"], seed, n)
        disturbance = _parse_disturbance(raw.get("disturbance"), n)
        if "init" in raw or disturbance is not None:
            scenario = dataclasses.replace(scenario, init=init,
                                           disturbance=disturbance)
        return scenario

    # explicit form
    if "branches" not in raw:
        raise ScenarioError("scenario needs either 'case' or 'branches'")
    branches_raw = raw["branches"]
    if not isinstance(branches_raw, list) or not branches_raw:
        raise ScenarioError("'branches' must be a non-empty list")
    if len(branches_raw) != n:
        raise ScenarioError(f"'n' is {n} but {len(branches_raw)} branches "
                            "are given")
    shared = {k: float(osc[k]) for k in osc}
    params = []
    z_extras = []
    for i, b in enumerate(branches_raw, start=1):
        where = f"branches[{i}]"
        if not isinstance(b, dict):
            raise ScenarioError(f"{where} must be an object")
        _check_keys(b, BRANCH_FIELDS + ("z_extra",), where)
        parts = {k: float(_num(b, k, where, 0.0)) for k in BRANCH_FIELDS}
        params.append(InverterParams(**shared, **parts))
        z_extras.append(_as_complex(b.get("z_extra", [0.0, 0.0]),
                                    f"{where}.z_extra"))
    net = raw.get("network")
    if not isinstance(net, dict):
        raise ScenarioError("explicit scenarios need a 'network' object")
    _check_keys(net, ("z_net", "t_z"), "network")
    if "z_net" not in net:
        raise ScenarioError("missing required key 'z_net' in network")
    z_net = _as_complex(net["z_net"], "network.z_net")
    t_z = float(_num(net, "t_z", "network", 0.0))
    network = build_network(params, z_net, t_z=t_z, z_extras=z_extras)

    init = _parse_init(dict(raw.get("init", {})), seed, n)
    return Scenario(
        params=tuple(params), network=network,
        t_end=float(_num(raw, "t_end", "scenario", 2.0)),
        dt=float(_num(raw, "dt", "scenario", 1e-4)),
        init=init, disturbance=_parse_disturbance(raw.get("disturbance"), n))


def scenario_to_dict(scenario: Scenario) -> dict:
    """Fully-resolved, round-trippable scenario dict (explicit form)."""
    p0 = scenario.params[0]
    branches = []
    for p, b in zip(scenario.params, scenario.network.branches):
        branches.append({
            "r_f": p.r_f, "l_f": p.l_f, "r_v": p.r_v, "x_v": p.x_v,
            "z_extra": [b.z_extra.real, b.z_extra.imag],
        })
    d: dict[str, Any] = {
        "n": scenario.n,
        "seed": scenario.init.seed,
        "t_end": scenario.t_end,
        "dt": scenario.dt,
        "oscillator": {k: getattr(p0, k) for k in OSCILLATOR_FIELDS},
        "branches": branches,
        "network": {
            "z_net": [scenario.network.z_net.real, scenario.network.z_net.imag],
            "t_z": scenario.network.t_z,
        },
        "init": {
            "norm_bound": scenario.init.norm_bound,
            "overrides": {str(k + 1): v for k, v in scenario.init.overrides},
        },
        "disturbance": None,
    }
    if scenario.disturbance is not None:
        d["disturbance"] = {
            "inverter": scenario.disturbance.inverter + 1,
            "amplitude": scenario.disturbance.amplitude,
            "waveform": scenario.disturbance.waveform,
        }
    return d


def load_scenario(path: str | Path) -> Scenario:
    """Parse a scenario JSON file (strict: unknown keys are errors)."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{path} is not valid JSON: {err}") from err
    return scenario_from_dict(raw)


def apply_overrides(raw: dict, sets: Sequence[str]) -> dict:
    """Apply repeatable ``--set dotted.path=value`` overrides to a raw dict."""
    out = json.loads(json.dumps(raw))     # deep copy, JSON types only
    for item in sets:
        if "=" not in item:
            raise ScenarioError(f"--set needs key=value, got {item!r}")
        key, _, text = item.partition("=")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text                   # bare strings allowed
        node = out
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ScenarioError(f"--set path '{key}' crosses a non-object")
        node[parts[-1]] = value
    return out


# ---------------------------------------------------------------------------
# outputs


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_timeseries(traj: Trajectory, path: str | Path) -> None:
    """CSV time series: states (pu), bus voltage (V), currents (A, alpha/beta
    and three-phase via the inverse Clarke transform), 17 significant digits.
    """
    n = traj.n
    header = ["t"]
    header += [f"x_{ax}_{k}" for k in range(1, n + 1) for ax in ("alpha", "beta")]
    header += ["v_o_alpha", "v_o_beta"]
    header += [f"i_{ax}_{k}" for k in range(1, n + 1) for ax in ("alpha", "beta")]
    header += [f"i_{ph}_{k}" for k in range(1, n + 1) for ph in ("a", "b", "c")]

    cols: list[np.ndarray] = [traj.t]
    for k in range(n):
        cols += [traj.x[:, k].real, traj.x[:, k].imag]
    cols += [traj.v_o.real, traj.v_o.imag]
    for k in range(n):
        cols += [traj.currents[:, k].real, traj.currents[:, k].imag]
    for k in range(n):
        re, im = traj.currents[:, k].real, traj.currents[:, k].imag
        cols += [re, -0.5 * re + SQRT3_OVER_2 * im, -0.5 * re - SQRT3_OVER_2 * im]

    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def certificate_to_dict(report: CertificateReport) -> dict:
    p = report.params
    return {
        "margin_c": report.margin_c,
        "passed": report.passed,
        "lambda_max_sampled": report.lambda_max_sampled,
        "error_ball_radius": report.error_ball_radius,
        "params": {k: getattr(p, k) for k in OSCILLATOR_FIELDS + BRANCH_FIELDS},
    }


def build_report(scenario: Scenario, cert: CertificateReport,
                 traj: Optional[Trajectory] = None,
                 diverged: Optional[SimulationDiverged] = None) -> dict:
    """Everything a run produces, as one JSON-ready dict."""
    report: dict[str, Any] = {
        "scenario": scenario_to_dict(scenario),
        "certificate": certificate_to_dict(cert),
        "metrics": None,
        "steady_state": None,
        "diverged": None,
    }
    ks = k_sh(scenario.network, math.inf)
    r_star = predicted_r_star(scenario)
    report["steady_state"] = {
        "k_sh": [ks.real, ks.imag],
        "r_star": None if isinstance(r_star, OscillatorDeath) else r_star,
        "oscillator_death": isinstance(r_star, OscillatorDeath),
    }
    if traj is not None and len(traj.t) > 1:
        try:
            m = build_metrics(traj)
        except ValueError:
            m = None    # partial trajectories can be shorter than the window
        if m is not None:
            report["metrics"] = {
                "sync_time": m.sync_time,
                "sync_threshold": m.sync_threshold,
                "synchronized": m.synchronized,
                "sharing_ratios": list(m.sharing_ratios),
                "sharing_ratio_error": m.sharing_ratio_error,
                "amplitude": m.amplitude,
                "fitted_rate": m.fitted_rate,
                "window": m.window,
                "sync_error_series": [float(v) for v in m.sync_error_series],
            }
    if diverged is not None:
        report["diverged"] = {"t": diverged.t,
                              "inverter": diverged.inverter + 1}
    return report


# ---------------------------------------------------------------------------
# commands


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario_path: Optional[str] = None
    out_dir: Optional[str] = None
    seed: Optional[int] = None
    overrides: tuple[str, ...] = ()
    n: int = 4
    samples: int = 0
    sample_radius: float = 2.0
    d_bar: Optional[float] = None
    kappas: Optional[str] = None


def _scenario_for(config: RunConfig, case: Optional[str]) -> Scenario:
    if case is not None:
        raw: dict[str, Any] = {"case": case, "n": config.n,
                               "seed": config.seed if config.seed is not None else 0}
    elif config.scenario_path is not None:
        raw = json.loads(Path(config.scenario_path).read_text())
        if config.seed is not None:
            raw["seed"] = config.seed
    else:
        raise ScenarioError("a scenario file is required (--scenario)")
    raw = apply_overrides(raw, config.overrides)
    return scenario_from_dict(raw)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _cmd_certify(config: RunConfig) -> int:
    if config.scenario_path is not None:
        params = _scenario_for(config, None).params[0]
    else:
        fields = {}
        raw = apply_overrides({}, config.overrides)
        _check_keys(raw, OSCILLATOR_FIELDS + BRANCH_FIELDS, "--set")
        for key, val in raw.items():
            fields[key] = float(val)
        params = InverterParams(**fields)
    report = certificate_margin(params)
    if config.samples > 0:
        sampled = sampled_lambda_check(params, config.sample_radius,
                                       config.samples,
                                       config.seed if config.seed is not None else 0)
        report = dataclasses.replace(report,
                                     lambda_max_sampled=sampled.max_found)
    if config.d_bar is not None and report.passed:
        report = dataclasses.replace(
            report,
            error_ball_radius=error_ball_radius(config.d_bar, report.margin_c))
    print(json.dumps(certificate_to_dict(report), indent=2))
    print(f"certificate: {'PASS' if report.passed else 'FAIL'} "
          f"(margin_c = {report.margin_c:.6g} 1/s)", file=sys.stderr)
    return 0 if report.passed else 1


def _cmd_simulate(config: RunConfig, case: Optional[str]) -> int:
    scenario = _scenario_for(config, case)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cert = certificate_margin(scenario.params[0])
    diverged: Optional[SimulationDiverged] = None
    try:
        traj = simulate(scenario)
    except SimulationDiverged as err:
        diverged = err
        traj = err.trajectory
    if traj is not None:
        write_timeseries(traj, out / "timeseries.csv")
    _write_json(out / "report.json",
                build_report(scenario, cert, traj, diverged))
    if diverged is not None:
        print(f"error: {diverged}", file=sys.stderr)
        return 2
    print(f"wrote {out / 'timeseries.csv'} and {out / 'report.json'}",
          file=sys.stderr)
    return 0


def _cmd_sweep(config: RunConfig) -> int:
    if config.scenario_path is not None:
        base = _scenario_for(config, None).params[0]
    else:
        base = InverterParams()
    text = config.kappas or "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2"
    try:
        kappas = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ScenarioError(f"--kappas must be comma-separated numbers, "
                            f"got {text!r}") from None
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["kappa,margin_c,passed"]
    print(f"{'kappa':>10} {'margin_c':>14} pass")
    for kappa in kappas:
        report = certificate_margin(dataclasses.replace(base, kappa=kappa))
        lines.append(f"{_fmt(kappa)},{_fmt(report.margin_c)},"
                     f"{str(report.passed).lower()}")
        print(f"{kappa:>10.4g} {report.margin_c:>14.6g} "
              f"{'yes' if report.passed else 'no'}")
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dvocsim",
        description="Simulate parallel grid-forming oscillators and check "
                    "their synchronization certificate.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_required: bool) -> None:
        p.add_argument("--scenario", dest="scenario_path", metavar="PATH",
                       help="scenario JSON file")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a scenario entry "
                       "(dotted path, repeatable)")
        if out_required:
            p.add_argument("--out", dest="out_dir", required=True,
                           metavar="DIR", help="output directory")

    p = sub.add_parser("certify", help="algebraic contraction certificate")
    common(p, out_required=False)
    p.add_argument("--samples", type=int, default=0,
                   help="also sample the Jacobian eigenvalue bound")
    p.add_argument("--radius", dest="sample_radius", type=float, default=2.0)
    p.add_argument("--d-bar", dest="d_bar", type=float,
                   help="disturbance bound for the error-ball radius")

    p = sub.add_parser("simulate", help="run a scenario file")
    common(p, out_required=True)

    for name, help_text in (("case1", "stock start-up scenario, equal branches"),
                            ("case2", "stock sharing scenario, 20:10.5 groups")):
        p = sub.add_parser(name, help=help_text)
        common(p, out_required=True)
        p.add_argument("--n", type=int, default=4, help="number of inverters")

    p = sub.add_parser("sweep", help="kappa grid of certificate margins")
    common(p, out_required=True)
    p.add_argument("--kappas", help="comma-separated kappa values")
    return parser


def run(config: RunConfig) -> int:
    """Dispatch one parsed command; returns the process exit code."""
    try:
        if config.command == "certify":
            return _cmd_certify(config)
        if config.command == "simulate":
            return _cmd_simulate(config, None)
        if config.command == "case1":
            return _cmd_simulate(config, "I")
        if config.command == "case2":
            return _cmd_simulate(config, "II")
        if config.command == "sweep":
            return _cmd_sweep(config)
        raise ScenarioError(f"unknown command {config.command!r}")
    except (ScenarioError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    config = RunConfig(**{k: (tuple(v) if k == "overrides" else v)
                          for k, v in vars(args).items() if k in fields})
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
