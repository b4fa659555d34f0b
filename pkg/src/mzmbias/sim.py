"""Open- and closed-loop runs of modulator + drift + signal chain + controller."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .chain import SignalChainConfig, adc_read, dac_write, read_monitor
from .controller import (
    ApplyCompensation,
    ControllerConfig,
    ControllerState,
    Done,
    Fault,
    ReadMonitor,
    SetBias,
    action_tag,
    controller_step,
)
from .device import MzmParams, dbm_to_mw, mw_to_dbm, mzm_transmission
from .drift import DriftScenario, phase_grid


@dataclass(frozen=True)
class SimConfig:
    """Time grid and run options.

    ``sample_period`` must be a whole number of control periods and
    ``duration`` a whole number of sample periods. ``initial_bias`` defaults
    to quadrature (``v_pi / 2``).
    """

    duration: float = 3600.0
    control_period: float = 0.1
    sample_period: float = 60.0
    seed: int = 0
    open_loop: bool = False
    initial_bias: Optional[float] = None

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if not (self.control_period > 0 and self.sample_period > 0):
            raise ValueError("periods must be > 0")
        if self.sample_period > self.duration:
            raise ValueError("sample_period must be <= duration")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        _whole(self.sample_period, self.control_period, "sample_period", "control_period")
        _whole(self.duration, self.sample_period, "duration", "sample_period")

    @property
    def ticks_per_sample(self) -> int:
        return _whole(self.sample_period, self.control_period, "sample_period", "control_period")

    @property
    def n_samples(self) -> int:
        return _whole(self.duration, self.sample_period, "duration", "sample_period")


def _whole(a: float, b: float, name_a: str, name_b: str) -> int:
    n = round(a / b)
    if n < 1 or abs(n * b - a) > 1e-9 * max(a, 1.0):
        raise ValueError(f"{name_a} must be a whole multiple of {name_b}")
    return n


@dataclass
class SimTrace:
    """Records on the sample grid plus per-tick lock error.

    ``output_power_dbm`` at t > 0 is the mean linear through-port power over
    the preceding sample window, converted to dBm: a power meter's average
    optical power. The t = 0 record is instantaneous.
    """

    t: np.ndarray
    drift_phase: np.ndarray
    bias_voltage: np.ndarray
    output_power_dbm: np.ndarray
    monitor_voltage: np.ndarray
    d11: np.ndarray
    d2: np.ndarray
    r: np.ndarray
    action: list
    open_loop: bool
    v_pi: float
    step_times: tuple = ()
    tick_time: np.ndarray = field(default=None, repr=False)
    tick_phase_error: np.ndarray = field(default=None, repr=False)
    actions: list = field(default_factory=list, repr=False)
    faulted: bool = False
    fault_time: Optional[float] = None
    fault_reason: Optional[str] = None

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class Metrics:
    fluctuation_db: float
    max_percent_deviation: float
    settling_time: Optional[float] = None
    residual_phase_rms: Optional[float] = None
    max_abs_phase_error: Optional[float] = None
    faulted: bool = False


def _time_grid(sim: SimConfig) -> np.ndarray:
    n_ticks = sim.n_samples * sim.ticks_per_sample
    return np.arange(n_ticks + 1) * sim.control_period


def run(scenario: DriftScenario, mzm: MzmParams, chain: SignalChainConfig,
        ctrl: ControllerConfig, sim: SimConfig) -> SimTrace:
    """Simulate one run; deterministic for a fixed ``sim.seed``.

    Drift and detector noise use independent child streams of the seed, so an
    open-loop and a closed-loop run with the same seed see the same drift.
    """
    if sim.duration > scenario.duration:
        raise ValueError("sim duration exceeds drift scenario duration")
    ctrl = quantize_probe_step(ctrl, chain)
    times = _time_grid(sim)
    drift_ss, detector_ss = np.random.SeedSequence(int(sim.seed)).spawn(2)
    phase = phase_grid(scenario, times, np.random.default_rng(drift_ss))
    detector_rng = np.random.default_rng(detector_ss)
    base0 = mzm.v_pi / 2.0 if sim.initial_bias is None else float(sim.initial_bias)
    if sim.open_loop:
        return _run_open(scenario, mzm, chain, sim, times, phase, base0)
    return _run_closed(scenario, mzm, chain, ctrl, sim, times, phase, base0, detector_rng)


def quantize_probe_step(ctrl: ControllerConfig, chain: SignalChainConfig) -> ControllerConfig:
    """Realize the probe step as a whole number of DAC codes.

    Off-grid steps leak up to one LSB of error per probe point into the
    second difference, which the cotangent ratio amplifies by 1/dV^2.
    """
    codes = max(1, round(ctrl.probe_step_dV / chain.dac_lsb))
    return replace(ctrl, probe_step_dV=codes * chain.dac_lsb)


def _run_open(scenario, mzm, chain, sim, times, phase, base0):
    bias = dac_write(chain, float(base0))
    block = sim.ticks_per_sample
    theta = np.pi * bias / mzm.v_pi + mzm.intrinsic_phase + phase
    through_scale = (1.0 - chain.tap_monitor_fraction) * mzm.input_power * mzm.insertion_loss / 2.0
    p_through = _kernels.transmission_window_means(theta, through_scale, mzm.modulation_depth, block)

    rec = slice(0, None, block)
    p_inst = mzm_transmission(mzm, bias, phase[rec])
    monitor = adc_read(chain, chain.detector_gain * chain.tap_monitor_fraction * p_inst)
    n = len(p_through)
    nan = np.full(n, np.nan)
    return SimTrace(
        t=times[rec].copy(),
        drift_phase=phase[rec].copy(),
        bias_voltage=np.full(n, bias),
        output_power_dbm=_safe_dbm(p_through),
        monitor_voltage=np.asarray(monitor, dtype=float),
        d11=nan,
        d2=nan.copy(),
        r=nan.copy(),
        action=[""] * n,
        open_loop=True,
        v_pi=mzm.v_pi,
        step_times=tuple(scenario.step_times),
        tick_time=times,
        tick_phase_error=phase - phase[0],
    )


def _safe_dbm(p):
    return mw_to_dbm(np.maximum(np.asarray(p, dtype=float), 1e-30))


def _run_closed(scenario, mzm, chain, ctrl, sim, times, phase, base0, detector_rng):
    block = sim.ticks_per_sample
    n_rec = sim.n_samples + 1
    vpi = mzm.v_pi
    k_theta = math.pi / vpi
    theta0 = mzm.intrinsic_phase
    depth = mzm.modulation_depth
    p_scale = mzm.input_power * mzm.insertion_loss / 2.0
    tap_f = chain.tap_monitor_fraction
    gain = chain.detector_gain

    out = {name: np.full(n_rec, np.nan) for name in
           ("drift_phase", "bias_voltage", "output_power_dbm", "monitor_voltage", "d11", "d2", "r")}
    tags = [""] * n_rec
    actions = []
    tick_err = np.empty(len(times))

    state = ControllerState.initial(base0)
    bias = dac_write(chain, float(base0))
    applied_base = bias
    theta_ref = k_theta * applied_base + theta0 + phase[0]
    read = None
    faulted = False
    fault_time = fault_reason = None
    acc = 0.0
    action = None
    phase_list = phase.tolist()

    for k, ph in enumerate(phase_list):
        if not faulted:
            state, action = controller_step(state, ctrl, read)
            read = None
            actions.append(action)
            kind = type(action)
            if kind is SetBias:
                bias = dac_write(chain, float(action.volts))
            elif kind is ApplyCompensation or kind is Done:
                applied_base = dac_write(chain, float(state.base_bias))
                bias = applied_base
            elif kind is Fault:
                faulted = True
                fault_time = times[k]
                fault_reason = action.reason
                applied_base = dac_write(chain, float(state.base_bias))
                bias = applied_base
        p_mzm = p_scale * (1.0 + depth * math.cos(k_theta * bias + theta0 + ph))
        monitor = tap_f * p_mzm
        if not faulted and type(action) is ReadMonitor:
            read = read_monitor(chain, monitor, detector_rng)
        acc += p_mzm - monitor
        tick_err[k] = k_theta * applied_base + theta0 + ph - theta_ref

        if k % block == 0:
            i = k // block
            p_rec = (p_mzm - monitor) if k == 0 else acc / block
            acc = 0.0
            out["drift_phase"][i] = ph
            out["bias_voltage"][i] = bias
            out["output_power_dbm"][i] = 10.0 * math.log10(max(p_rec, 1e-30))
            out["monitor_voltage"][i] = adc_read(chain, float(gain * monitor))
            slope1 = state.d11 if state.d11 is not None else state.d12
            if slope1 is not None:
                out["d11"][i] = slope1
            if state.d2 is not None:
                out["d2"][i] = state.d2
            if state.ratio is not None:
                out["r"][i] = state.ratio
            tags[i] = "fault" if faulted else action_tag(action)

    return SimTrace(
        t=times[::block].copy(),
        action=tags,
        open_loop=False,
        v_pi=vpi,
        step_times=tuple(scenario.step_times),
        tick_time=times,
        tick_phase_error=tick_err,
        actions=actions,
        faulted=faulted,
        fault_time=fault_time,
        fault_reason=fault_reason,
        **out,
    )


def power_metrics(output_power_dbm) -> tuple[float, float]:
    """(fluctuation in dB, max percent deviation from the first record)."""
    p_dbm = np.asarray(output_power_dbm, dtype=float)
    if p_dbm.size == 0:
        raise ValueError("empty trace")
    fluctuation = float(np.max(p_dbm) - np.min(p_dbm))
    p = dbm_to_mw(p_dbm)
    p = np.atleast_1d(p)
    deviation = float(np.max(np.abs(p - p[0])) / p[0] * 100.0)
    return fluctuation, deviation


def metrics(trace: SimTrace, phase_tolerance: float = 0.05) -> Metrics:
    """Stability statistics of a trace.

    ``settling_time`` is measured from the first step event to the first tick
    after which the lock error stays within ``phase_tolerance`` until the
    next step event (or the end); ``None`` without step events and ``inf``
    if it never settles.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    fluctuation, deviation = power_metrics(trace.output_power_dbm)
    settling = rms = worst = None
    if trace.tick_phase_error is not None:
        err = trace.tick_phase_error
        rms = float(np.sqrt(np.mean(err**2)))
        worst = float(np.max(np.abs(err)))
        if trace.step_times:
            settling = _settling_time(trace.tick_time, err, trace.step_times, phase_tolerance)
    return Metrics(
        fluctuation_db=fluctuation,
        max_percent_deviation=deviation,
        settling_time=settling,
        residual_phase_rms=rms,
        max_abs_phase_error=worst,
        faulted=trace.faulted,
    )


def _settling_time(t, err, step_times, tol):
    t_step = step_times[0]
    later = [s for s in step_times if s > t_step]
    end = later[0] if later else np.inf
    window = (t >= t_step) & (t < end)
    idx = np.flatnonzero(window)
    if idx.size == 0:
        return None
    outside = np.flatnonzero(np.abs(err[idx]) > tol)
    if outside.size == 0:
        return float(t[idx[0]] - t_step)
    last_bad = outside[-1]
    if last_bad + 1 >= idx.size:
        return math.inf
    return float(t[idx[last_bad + 1]] - t_step)


# -- calibration sweep -------------------------------------------------------


@dataclass(frozen=True)
class CalibrationReport:
    v_pi: float
    quadrature_bias: float
    minimum_bias: float
    extinction_ratio: float
    sweep_step: float
    dac_lsb: float


def calibrate(mzm: MzmParams, chain: SignalChainConfig, sweep_step: float = 0.01,
              seed: int = 0) -> CalibrationReport:
    """Sweep the bias over one nominal period with zero drift.

    Vpi is the spacing of the two half-power crossings (pi apart in phase),
    which pins the transmission minimum at their midpoint. Crossings are
    located by linear interpolation, so flat quantized extrema do not bias
    the estimate.
    """
    if not sweep_step > 0:
        raise ValueError("sweep_step must be > 0")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)).spawn(2)[1])
    requested = np.arange(0.0, 2.0 * mzm.v_pi + 0.5 * sweep_step, sweep_step)
    bias = dac_write(chain, requested)
    monitor = chain.tap_monitor_fraction * mzm_transmission(mzm, bias)
    reads = np.array([read_monitor(chain, float(m), rng) for m in monitor])

    hi, lo = float(reads.max()), float(reads.min())
    level = 0.5 * (hi + lo)
    above = reads >= level
    edges = np.flatnonzero(above[:-1] != above[1:])
    if edges.size < 2:
        raise ValueError("sweep did not cross the half-power level twice; check v_pi range")
    crossings = []
    for i in edges[:2]:
        v0, v1 = reads[i], reads[i + 1]
        frac = (level - v0) / (v1 - v0)
        crossings.append((bias[i] + frac * (bias[i + 1] - bias[i]), v1 < v0))
    (c1, falling1), (c2, _) = crossings
    v_pi = c2 - c1
    quadrature = c1 if falling1 else c2
    minimum = 0.5 * (c1 + c2) if falling1 else (c2 + v_pi / 2.0)
    er = hi / lo if lo > 0 else math.inf
    return CalibrationReport(
        v_pi=float(v_pi),
        quadrature_bias=float(quadrature),
        minimum_bias=float(minimum),
        extinction_ratio=float(er),
        sweep_step=sweep_step,
        dac_lsb=chain.dac_lsb,
    )
