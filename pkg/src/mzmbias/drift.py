"""Bias-phase drift sources for lithium niobate modulators.

Four physical mechanisms are modeled plus two scripted ones:

* ``CircuitRelaxation`` - the buffer-layer / substrate RC network. The
  waveguide sees a voltage that relaxes from its initial division to the
  resistive steady state; the deficit is mapped to phase by ``coupling``.
* ``IonLag`` - mobile ions (H+, K+, Na+) building a counter field, as a
  first-order lag towards ``target_phase``.
* ``Photorefractive`` - light-excited carriers trapped at impurity levels,
  also a first-order lag (seconds to minutes).
* ``ThermalTrajectory`` - thermo-optic index change driven by a
  piecewise-linear temperature offset.
* ``StepEvent`` and ``RandomWalk`` - scripted jumps and residual noise.

The waveguide helpers (index profile, normalized frequency and propagation
constant) describe a Ti-diffused channel guide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np

EXTRAORDINARY_DN_DT = 17.1e-6  # (1/n_e) dn_e/dT, 1/K
ORDINARY_DN_DT = 1.9e-6  # (1/n_o) dn_o/dT, 1/K


@dataclass(frozen=True)
class CircuitParams:
    r1: float
    r2: float
    r3: float
    c1: float = 0.0  # carried for completeness, does not enter V(t)
    c2: float = 0.0
    c3: float = 0.0
    v0: float = 1.0

    def __post_init__(self):
        for name in ("r1", "r2", "r3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("c1", "c2", "c3"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class WaveguideProfile:
    cladding_index_nc: float
    substrate_index_nb: float
    surface_index_ns: float
    depth_dx: float
    depth_dy: float
    wavenumber_k0: float

    def __post_init__(self):
        if not self.surface_index_ns >= self.substrate_index_nb:
            raise ValueError("surface index must not be below substrate index")
        if not (self.depth_dx > 0 and self.depth_dy > 0):
            raise ValueError("waveguide depths must be > 0")
        if not self.wavenumber_k0 > 0:
            raise ValueError("wavenumber_k0 must be > 0")


class Axis(str, Enum):
    EXTRAORDINARY = "extraordinary"
    ORDINARY = "ordinary"


@dataclass(frozen=True)
class ThermalModel:
    base_index: float = 2.138
    axis: Axis = Axis.EXTRAORDINARY
    length_L: float = 0.0422
    wavelength_lambda0: float = 1.55e-6
    rel_dne_dT: float = EXTRAORDINARY_DN_DT
    rel_dno_dT: float = ORDINARY_DN_DT

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        for name in ("base_index", "length_L", "wavelength_lambda0", "rel_dne_dT", "rel_dno_dT"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def relative_coefficient(self) -> float:
        return self.rel_dne_dT if self.axis is Axis.EXTRAORDINARY else self.rel_dno_dT


# -- drift components --------------------------------------------------------


@dataclass(frozen=True)
class CircuitRelaxation:
    circuit: CircuitParams
    coupling: float  # rad / V


@dataclass(frozen=True)
class IonLag:
    target_phase: float
    time_constant: float

    def __post_init__(self):
        if not self.time_constant > 0:
            raise ValueError("time_constant must be > 0")


@dataclass(frozen=True)
class Photorefractive:
    amplitude: float
    time_constant: float

    def __post_init__(self):
        if not self.time_constant > 0:
            raise ValueError("time_constant must be > 0")


@dataclass(frozen=True)
class ThermalTrajectory:
    model: ThermalModel
    temperature_offsets: tuple  # ((t_s, delta_K), ...)

    def __post_init__(self):
        pts = tuple((float(t), float(k)) for t, k in self.temperature_offsets)
        if not pts:
            raise ValueError("temperature_offsets must not be empty")
        times = [t for t, _ in pts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        object.__setattr__(self, "temperature_offsets", pts)

    def delta_t(self, t):
        times, temps = zip(*self.temperature_offsets)
        return np.interp(t, times, temps)


@dataclass(frozen=True)
class StepEvent:
    at: float
    jump: float


@dataclass(frozen=True)
class RandomWalk:
    sigma: float  # rad / sqrt(s)

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")


DriftComponent = Union[CircuitRelaxation, IonLag, Photorefractive, ThermalTrajectory, StepEvent, RandomWalk]


@dataclass(frozen=True)
class DriftScenario:
    duration: float
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        object.__setattr__(self, "components", tuple(self.components))
        for c in self.components:
            if isinstance(c, ThermalTrajectory):
                t0 = c.temperature_offsets[0][0]
                t1 = c.temperature_offsets[-1][0]
                if t0 < 0 or t1 > self.duration:
                    raise ValueError("temperature breakpoints must lie within [0, duration]")

    @property
    def step_times(self) -> list[float]:
        return sorted(c.at for c in self.components if isinstance(c, StepEvent))


# -- equivalent circuit ------------------------------------------------------


def effective_lateral_impedance(p: CircuitParams) -> float:
    """R4, the parallel combination of r1 and r3."""
    return p.r1 * p.r3 / (p.r1 + p.r3)


def relaxation_time(p: CircuitParams) -> float:
    r4 = effective_lateral_impedance(p)
    return p.r2 * r4 * (p.c2 + 2.0 * p.c3) / (2.0 * p.r2 + r4)


def transient_coefficient(p: CircuitParams) -> float:
    """Amplitude of the exponential term per volt of step, zero when c2*r2 == c3*R4."""
    r4 = effective_lateral_impedance(p)
    csum = p.c2 + 2.0 * p.c3
    if csum == 0:
        return 0.0
    return 2.0 * (p.c2 * p.r2 - p.c3 * r4) / ((2.0 * p.r2 + r4) * csum)


def steady_state_voltage(p: CircuitParams) -> float:
    r4 = effective_lateral_impedance(p)
    return p.v0 * r4 / (2.0 * p.r2 + r4)


def waveguide_voltage(p: CircuitParams, t):
    """Voltage across the waveguide ``t`` seconds after a ``v0`` step.

    With zero relaxation time the transient is taken as already decayed.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    tau = relaxation_time(p)
    steady = steady_state_voltage(p)
    if tau == 0:
        out = np.full_like(t_arr, steady)
    else:
        out = steady + p.v0 * transient_coefficient(p) * np.exp(-t_arr / tau)
    return float(out) if out.ndim == 0 else out


# -- waveguide ---------------------------------------------------------------


def index_profile(w: WaveguideProfile, x, y):
    """Squared refractive index n^2(x, y); the guided branch holds at y == 0."""
    nb2 = w.substrate_index_nb**2
    ns2 = w.surface_index_ns**2
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    guided = nb2 + (ns2 - nb2) * np.exp(-((x / w.depth_dx) ** 2) - (y / w.depth_dy) ** 2)
    out = np.where(y >= 0, guided, w.cladding_index_nc**2)
    return float(out) if out.ndim == 0 else out


def normalized_frequency(w: WaveguideProfile) -> tuple[float, float]:
    na = math.sqrt(w.surface_index_ns**2 - w.substrate_index_nb**2)
    return w.wavenumber_k0 * w.depth_dx * na, w.wavenumber_k0 * w.depth_dy * na


def normalized_propagation_constant(w: WaveguideProfile, n_eff):
    nb2 = w.substrate_index_nb**2
    contrast = w.surface_index_ns**2 - nb2
    if contrast <= 0:
        raise ValueError("normalized propagation constant needs ns > nb")
    return (np.asarray(n_eff, dtype=float) ** 2 - nb2) / contrast


# -- thermal -----------------------------------------------------------------


def thermal_index_shift(m: ThermalModel, delta_T):
    return m.base_index * m.relative_coefficient * delta_T


def thermal_phase_drift(m: ThermalModel, delta_T):
    return (2.0 * math.pi / m.wavelength_lambda0) * thermal_index_shift(m, delta_T) * m.length_L


# -- scenario evaluation -----------------------------------------------------


def _deterministic_phase(c, t: np.ndarray) -> np.ndarray:
    if isinstance(c, CircuitRelaxation):
        return c.coupling * (steady_state_voltage(c.circuit) - np.asarray(waveguide_voltage(c.circuit, t)))
    if isinstance(c, IonLag):
        return c.target_phase * -np.expm1(-t / c.time_constant)
    if isinstance(c, Photorefractive):
        return c.amplitude * -np.expm1(-t / c.time_constant)
    if isinstance(c, ThermalTrajectory):
        return thermal_phase_drift(c.model, c.delta_t(t))
    if isinstance(c, StepEvent):
        return np.where(t >= c.at, c.jump, 0.0)
    raise TypeError(f"unknown drift component {c!r}")


class ScenarioEvaluator:
    """Sequential drift-phase source for one simulation run.

    Random-walk components draw one standard normal per query (in component
    order) whenever time advances, so queries must be made at non-decreasing
    ``t``. Deterministic components are memoryless.
    """

    def __init__(self, scenario: DriftScenario, rng: np.random.Generator):
        self.scenario = scenario
        self.rng = rng
        self._walks = [c for c in scenario.components if isinstance(c, RandomWalk)]
        self._others = [c for c in scenario.components if not isinstance(c, RandomWalk)]
        self._walk_state = [0.0] * len(self._walks)
        self._t_last = 0.0

    def __call__(self, t: float) -> float:
        if not 0 <= t <= self.scenario.duration:
            raise ValueError(f"t={t} outside [0, {self.scenario.duration}]")
        if t < self._t_last:
            raise ValueError("random-walk drift must be queried at non-decreasing t")
        dt = t - self._t_last
        if dt > 0:
            for i, walk in enumerate(self._walks):
                self._walk_state[i] += walk.sigma * math.sqrt(dt) * self.rng.standard_normal()
        self._t_last = t
        t_arr = np.asarray(t, dtype=float)
        total = 0.0
        for c in self._others:
            total += float(_deterministic_phase(c, t_arr))
        for w in self._walk_state:
            total += w
        return total


def scenario_phase(s: DriftScenario, t: float, rng: np.random.Generator) -> float:
    """Drift phase at a single time.

    This is a one-shot query: the random walk is integrated from 0 to ``t`` in
    a single increment. Use :class:`ScenarioEvaluator` or :func:`phase_grid`
    for a trajectory.
    """
    return ScenarioEvaluator(s, rng)(t)


def phase_grid(s: DriftScenario, times: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """Drift phase at every time of a non-decreasing grid.

    Draws exactly the same normals, in the same order, as querying a fresh
    :class:`ScenarioEvaluator` at each grid time in turn.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-d sequence")
    if t[0] < 0 or t[-1] > s.duration:
        raise ValueError(f"times outside [0, {s.duration}]")
    dt = np.diff(t, prepend=0.0)
    if np.any(dt < 0):
        raise ValueError("times must be non-decreasing")

    total = np.zeros_like(t)
    walks = []
    for c in s.components:
        if isinstance(c, RandomWalk):
            walks.append(c)
        else:
            total += _deterministic_phase(c, t)
    if walks:
        moving = np.flatnonzero(dt > 0)
        # one row per query, one column per walk: matches the evaluator's draw order
        z = rng.standard_normal((moving.size, len(walks)))
        for j, walk in enumerate(walks):
            inc = np.zeros_like(t)
            inc[moving] = walk.sigma * np.sqrt(dt[moving]) * z[:, j]
            total += np.cumsum(inc)
    return total
