"""Regenerate the scenario files shipped in src/mzmbias/scenarios/.

The two hour-long power-stability scenarios are fitted so their open-loop
traces pass through target power waypoints: each drift component is chosen
by hand, then the thermal trajectory (piecewise linear, so exactly solvable
at its breakpoints) absorbs whatever phase is still missing.

    python scripts/make_scenarios.py
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from mzmbias import scenario as sc
from mzmbias.chain import SignalChainConfig
from mzmbias.controller import ControllerConfig, Mode
from mzmbias.device import MzmParams, dbm_to_mw
from mzmbias.drift import (
    CircuitParams,
    CircuitRelaxation,
    DriftScenario,
    IonLag,
    Photorefractive,
    StepEvent,
    ThermalModel,
    ThermalTrajectory,
    _deterministic_phase,
    thermal_phase_drift,
)
from mzmbias.sim import SimConfig, metrics, run

OUT = Path(__file__).resolve().parents[1] / "src" / "mzmbias" / "scenarios"

THERMAL = ThermalModel()
RAD_PER_K = thermal_phase_drift(THERMAL, 1.0)

CHAIN = SignalChainConfig(
    tap_monitor_fraction=0.1,
    detector_gain=3.0,
    detector_noise_sigma=40e-6,
    adc_bits=16,
    adc_full_scale=2.5,
    dac_bits=16,
    dac_min=0.0,
    dac_max=10.0,
    oversample=1024,
)
TRACKING = ControllerConfig(
    probe_step_dV=0.03,
    mode=Mode.COTANGENT_TRACKING,
    ratio_tolerance_epsR=0.005,
    slope_tolerance_epsD=0.01,
    min_slope_guard=0.01,
    compensation_schedule=((0.01, 0.002), (0.05, 0.01), (0.2, 0.04), (1.0, 0.1)),
    max_iterations=1000,
    settle_reads=0,
    converge_cycles=2,
)
HOUR = SimConfig(duration=3600.0, control_period=0.1, sample_period=60.0, seed=20240601)


def input_power_for(start_dbm: float, chain: SignalChainConfig, insertion_loss=0.5) -> float:
    """Laser power putting the quadrature through-port power at ``start_dbm``."""
    return 2.0 * dbm_to_mw(start_dbm) / ((1.0 - chain.tap_monitor_fraction) * insertion_loss)


def phase_for(dbm: float, mzm: MzmParams, chain: SignalChainConfig) -> float:
    """Drift phase away from quadrature giving through-port power ``dbm``."""
    pq = (1.0 - chain.tap_monitor_fraction) * mzm.input_power * mzm.insertion_loss / 2.0
    return math.asin((1.0 - dbm_to_mw(dbm) / pq) / mzm.modulation_depth)


def fit_thermal(waypoints, others, mzm, chain):
    """Thermal breakpoints making the total phase hit each (t, dBm) waypoint."""
    pts = []
    for t, dbm in waypoints:
        t_arr = np.asarray(t, dtype=float)
        other = sum(float(_deterministic_phase(c, t_arr)) for c in others)
        pts.append((t, (phase_for(dbm, mzm, chain) - other) / RAD_PER_K))
    return ThermalTrajectory(THERMAL, tuple(pts))


def slow_drift_step() -> sc.Scenario:
    # initial 3.44 dBm, 3.57 -> 4.96 dBm jump at minute 20, 5.14 dBm at the hour
    mzm = MzmParams(v_pi=3.8, input_power=round(input_power_for(3.44, CHAIN), 4),
                    insertion_loss=0.5, extinction_ratio=100.0)
    before = phase_for(3.57, mzm, CHAIN)
    after = phase_for(4.96, mzm, CHAIN)
    slow = [Photorefractive(amplitude=round(0.25 * before, 5), time_constant=90.0),
            IonLag(target_phase=round(0.6 * before, 5), time_constant=900.0)]
    step = StepEvent(at=1200.0, jump=round(after - before, 5))
    # the 1200 s breakpoint is fitted on the pre-step side
    pre = fit_thermal([(0.0, 3.44), (1200.0, 3.57)], slow, mzm, CHAIN)
    post = fit_thermal([(3600.0, 5.14)], slow + [step], mzm, CHAIN)
    thermal = ThermalTrajectory(THERMAL, pre.temperature_offsets + post.temperature_offsets)
    drift = DriftScenario(3600.0, slow + [thermal, step])
    return sc.Scenario(mzm, drift, CHAIN, TRACKING, HOUR, description=(
        "1 Mbps-style hour: slow drift from 3.44 dBm, sudden +1.39 dB jump at minute 20, "
        "5.14 dBm at the end (open-loop fluctuation 1.70 dB)."))


def two_plateaus() -> sc.Scenario:
    # 4.50 dBm start, a band around 4.6-4.75 dBm, then a band around 4.8-4.93 dBm
    mzm = MzmParams(v_pi=3.8, input_power=round(input_power_for(4.50, CHAIN), 4),
                    insertion_loss=0.5, extinction_ratio=100.0)
    slow = [Photorefractive(amplitude=round(phase_for(4.60, mzm, CHAIN), 5), time_constant=120.0)]
    waypoints = [
        (0.0, 4.50), (240.0, 4.63), (480.0, 4.71), (720.0, 4.66), (960.0, 4.74),
        (1200.0, 4.64), (1440.0, 4.72), (1680.0, 4.67), (1860.0, 4.73), (2040.0, 4.86),
        (2280.0, 4.90), (2520.0, 4.82), (2760.0, 4.92), (3000.0, 4.84), (3240.0, 4.91),
        (3420.0, 4.85), (3540.0, 4.93), (3600.0, 4.93),
    ]
    thermal = fit_thermal(waypoints, slow, mzm, CHAIN)
    drift = DriftScenario(3600.0, slow + [thermal])
    return sc.Scenario(mzm, drift, CHAIN, TRACKING, HOUR, description=(
        "1 Gbps-style hour at quadrature (1.9 V, 4.5 dBm): two plateau bands, "
        "open-loop fluctuation 0.43 dB."))


def zero_drift() -> sc.Scenario:
    mzm = MzmParams(v_pi=3.8, input_power=12.5, insertion_loss=0.5, extinction_ratio=100.0)
    sim = SimConfig(duration=600.0, control_period=0.1, sample_period=10.0, seed=1)
    return sc.Scenario(mzm, DriftScenario(600.0, ()), CHAIN, TRACKING, sim,
                       description="No drift at all; both loops should hold constant power.")


def extremum_ramp() -> sc.Scenario:
    mzm = MzmParams(v_pi=3.8, input_power=12.5, insertion_loss=0.5, extinction_ratio=100.0)
    # 0.001 rad/s for an hour
    thermal = ThermalTrajectory(THERMAL, ((0.0, 0.0), (3600.0, 3.6 / RAD_PER_K)))
    ctrl = ControllerConfig(
        probe_step_dV=0.03,
        mode=Mode.EXTREMUM_NULLING,
        slope_tolerance_epsD=0.02,
        compensation_schedule=((0.05, 0.002), (0.2, 0.01), (1.0, 0.05)),
        max_iterations=1000,
    )
    sim = SimConfig(duration=3600.0, control_period=0.1, sample_period=60.0, seed=7, initial_bias=3.8)
    # the lock walks ~4.4 V downwards over the hour, so the DAC must be bipolar
    chain = SignalChainConfig(**{**CHAIN.__dict__, "dac_min": -10.0, "dac_max": 10.0})
    return sc.Scenario(mzm, DriftScenario(3600.0, (thermal,)), chain, ctrl, sim, description=(
        "Transmission-minimum lock at V = v_pi under a 0.001 rad/s thermal ramp."))


def dc_relaxation() -> sc.Scenario:
    mzm = MzmParams(v_pi=3.8, input_power=12.5, insertion_loss=0.5, extinction_ratio=100.0)
    circuit = CircuitParams(r1=4e12, r2=1e12, r3=4e12, c1=1e-12, c2=1e-10, c3=2e-10, v0=1.9)
    drift = DriftScenario(1800.0, (CircuitRelaxation(circuit, coupling=0.5),
                                   IonLag(target_phase=-0.1, time_constant=600.0)))
    sim = SimConfig(duration=1800.0, control_period=0.1, sample_period=30.0, seed=3)
    return sc.Scenario(mzm, drift, CHAIN, TRACKING, sim, description=(
        "Buffer-layer RC relaxation after the bias step plus a mobile-ion lag."))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, build in [("slow_drift_step", slow_drift_step), ("two_plateaus", two_plateaus), ("zero_drift", zero_drift),
                        ("extremum_ramp", extremum_ramp), ("dc_relaxation", dc_relaxation)]:
        s = build()
        (OUT / f"{name}.json").write_text(sc.dumps(s), encoding="utf-8")
        s = sc.load(OUT / f"{name}.json")
        for open_loop in (True, False):
            sim = s.sim.__class__(**{**s.sim.__dict__, "open_loop": open_loop})
            m = metrics(run(s.drift, s.mzm, s.chain, s.controller, sim))
            print(f"{name:14s} open={open_loop!s:5s} fluct={m.fluctuation_db:.3f} dB "
                  f"dev={m.max_percent_deviation:.2f}% rms={m.residual_phase_rms:.4f} faulted={m.faulted}")


if __name__ == "__main__":
    main()
