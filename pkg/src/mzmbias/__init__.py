"""Closed-loop simulation of Mach-Zehnder modulator bias-point stabilization."""

from .chain import SignalChainConfig, adc_read, dac_write, detect, read_monitor, tap
from .controller import (
    ApplyCompensation,
    ControllerConfig,
    ControllerState,
    Direction,
    Done,
    Extremum,
    Fault,
    Mode,
    ReadMonitor,
    SetBias,
    classify_drift,
    compensation_voltage,
    controller_step,
    cotangent_ratio,
    second_derivative,
    slope,
)
from .device import (
    ElectroOpticParams,
    MzmParams,
    dbm_to_mw,
    effective_index_shift,
    half_wave_voltage,
    local_index_shift,
    mw_to_dbm,
    mzm_transmission,
    phase_shift,
)
from .drift import (
    Axis,
    CircuitParams,
    CircuitRelaxation,
    DriftScenario,
    IonLag,
    Photorefractive,
    RandomWalk,
    StepEvent,
    ThermalModel,
    ThermalTrajectory,
    WaveguideProfile,
    effective_lateral_impedance,
    index_profile,
    normalized_frequency,
    normalized_propagation_constant,
    relaxation_time,
    scenario_phase,
    steady_state_voltage,
    thermal_index_shift,
    thermal_phase_drift,
    waveguide_voltage,
)
from .sim import CalibrationReport, Metrics, SimConfig, SimTrace, calibrate, metrics, run

__version__ = "0.1.0"
