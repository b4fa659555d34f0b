"""Composite slope / cotangent bias controller.

The controller is a pure finite state machine: it consumes monitor reads and
emits one action per step, without knowledge of the plant. A probe cycle
reads the monitor at ``base``, ``base + dV`` and ``base + 2 dV``:

    d11 = (Vg2 - Vg1) / dV          first-interval slope
    d13 = (Vg4 - Vg2) / dV          second-interval slope
    d2  = (d13 - d11) / dV          second derivative
    R   = d2 / d11                  cotangent ratio

On a raised-cosine curve ``R`` is ``(pi / v_pi) * cot(theta)`` up to O(dV)
and therefore independent of optical power and detector gain. The first
ratio is latched as the reference ``r1``; every later cycle measures ``r2``.
Since ``cot`` decreases with theta, ``r2 > r1`` means the operating point
slid left (lower theta) and the bias is raised, and vice versa.

At a transmission extremum ``d11`` vanishes and the ratio is singular, so
:attr:`Mode.EXTREMUM_NULLING` instead drives the single slope ``d12`` to
zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union


class Mode(str, Enum):
    COTANGENT_TRACKING = "cotangent_tracking"
    EXTREMUM_NULLING = "extremum_nulling"


class Extremum(str, Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"


class Direction(Enum):
    LEFT = "left"
    RIGHT = "right"
    NONE = "none"


class Position(Enum):
    IDLE = "idle"
    SET_BASE = "set_base"
    READ_BASE = "read_base"
    SET_STEP1 = "set_step1"
    READ_STEP1 = "read_step1"
    SET_STEP2 = "set_step2"
    READ_STEP2 = "read_step2"
    FAULTED = "faulted"


_READ_POSITIONS = frozenset({Position.READ_BASE, Position.READ_STEP1, Position.READ_STEP2})
_NEXT_READ = {
    Position.SET_BASE: Position.READ_BASE,
    Position.SET_STEP1: Position.READ_STEP1,
    Position.SET_STEP2: Position.READ_STEP2,
}

DEFAULT_SCHEDULE = ((0.05, 0.010), (0.2, 0.025), (1.0, 0.050))


class ControllerError(ValueError):
    pass


@dataclass(frozen=True)
class ControllerConfig:
    """Controller tuning.

    ``compensation_schedule`` maps a mismatch magnitude (``|r2 - r1|`` in
    1/V, or ``|d12|`` in V/V) to a bias step: the first entry whose threshold
    is >= the magnitude wins, the last entry catches everything larger.
    """

    probe_step_dV: float = 0.03
    mode: Mode = Mode.COTANGENT_TRACKING
    ratio_tolerance_epsR: float = 0.005
    slope_tolerance_epsD: float = 0.01
    min_slope_guard: float = 1e-3
    compensation_schedule: tuple = DEFAULT_SCHEDULE
    max_iterations: int = 1000
    settle_reads: int = 0
    converge_cycles: int = 2
    extremum: Extremum = Extremum.MINIMUM
    guard_fault_cycles: int = 5

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "extremum", Extremum(self.extremum))
        sched = tuple((float(a), float(b)) for a, b in self.compensation_schedule)
        object.__setattr__(self, "compensation_schedule", sched)
        if not self.probe_step_dV > 0:
            raise ValueError("probe_step_dV must be > 0")
        for name in ("ratio_tolerance_epsR", "slope_tolerance_epsD", "min_slope_guard"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        thresholds = [a for a, _ in sched]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("compensation_schedule thresholds must be strictly increasing")
        if any(step < 0 for _, step in sched):
            raise ValueError("compensation_schedule steps must be >= 0")
        if not self.max_iterations >= 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.settle_reads >= 0:
            raise ValueError("settle_reads must be >= 0")
        if not self.converge_cycles >= 1:
            raise ValueError("converge_cycles must be >= 1")
        if not self.guard_fault_cycles >= 1:
            raise ValueError("guard_fault_cycles must be >= 1")


# -- actions -----------------------------------------------------------------


@dataclass(frozen=True)
class SetBias:
    volts: float


@dataclass(frozen=True)
class ReadMonitor:
    pass


@dataclass(frozen=True)
class ApplyCompensation:
    volts: float


@dataclass(frozen=True)
class Done:
    converged: bool = True


@dataclass(frozen=True)
class Fault:
    reason: str


ControlAction = Union[SetBias, ReadMonitor, ApplyCompensation, Done, Fault]

_READ = ReadMonitor()


def action_tag(action) -> str:
    return {
        SetBias: "set_bias",
        ReadMonitor: "read",
        ApplyCompensation: "compensate",
        Done: "done",
        Fault: "fault",
    }[type(action)]


# -- state -------------------------------------------------------------------


@dataclass(frozen=True)
class ControllerState:
    """Flowchart position plus everything the probe cycles have produced.

    Reading slots: the reference cycle fills vg1 (base), vg2 (base + dV) and
    vg4 (base + 2 dV); tracking cycles fill vg5, vg6 and vg3 at the same
    offsets. ``vg6 != vg2`` is how a moved curve shows up.
    """

    position: Position = Position.IDLE
    base_bias: float = 0.0
    vg1: Optional[float] = None
    vg2: Optional[float] = None
    vg3: Optional[float] = None
    vg4: Optional[float] = None
    vg5: Optional[float] = None
    vg6: Optional[float] = None
    d11: Optional[float] = None
    d12: Optional[float] = None
    d13: Optional[float] = None
    d2: Optional[float] = None
    r1: Optional[float] = None
    r2: Optional[float] = None
    iteration_count: int = 0
    in_tolerance_count: int = 0
    guard_trips: int = 0
    discards_left: int = 0
    fault_reason: Optional[str] = None

    @classmethod
    def initial(cls, base_bias: float) -> "ControllerState":
        return cls(base_bias=float(base_bias))

    @property
    def tracking(self) -> bool:
        """True once the reference ratio has been latched."""
        return self.r1 is not None

    @property
    def ratio(self) -> Optional[float]:
        return self.r2 if self.r2 is not None else self.r1


# -- estimators --------------------------------------------------------------


def slope(v_later: float, v_earlier: float, dV: float) -> float:
    if dV == 0:
        raise ValueError("probe step dV must be nonzero")
    return (v_later - v_earlier) / dV


def second_derivative(d11: float, d13: float, dV: float) -> float:
    if dV == 0:
        raise ValueError("probe step dV must be nonzero")
    return (d13 - d11) / dV


class SingularRatioError(ArithmeticError):
    """First derivative too small for a meaningful cotangent ratio."""


def cotangent_ratio(d1: float, d2: float, guard: float) -> float:
    if abs(d1) < guard:
        raise SingularRatioError(f"|d1|={abs(d1):.3g} below guard {guard:.3g}")
    return d2 / d1


def classify_drift(r1: float, r2: float, epsR: float) -> Direction:
    if r2 - r1 > epsR:
        return Direction.LEFT
    if r1 - r2 > epsR:
        return Direction.RIGHT
    return Direction.NONE


def _schedule_step(cfg: ControllerConfig, magnitude: float) -> float:
    if not cfg.compensation_schedule:
        raise ControllerError("compensation_schedule is empty")
    if magnitude < 0:
        raise ValueError("magnitude must be >= 0")
    for threshold, step in cfg.compensation_schedule:
        if magnitude <= threshold:
            return step
    return cfg.compensation_schedule[-1][1]


def compensation_voltage(cfg: ControllerConfig, magnitude: float, direction: Direction) -> float:
    """Signed bias correction; LEFT raises the bias, RIGHT lowers it."""
    step = _schedule_step(cfg, magnitude)
    if direction is Direction.LEFT:
        return step
    if direction is Direction.RIGHT:
        return -step
    return 0.0


# -- transition function -----------------------------------------------------


def _fault(state: ControllerState, reason: str):
    return replace(state, position=Position.FAULTED, fault_reason=reason), Fault(reason)


def _start_cycle(state: ControllerState, **changes):
    return replace(state, position=Position.SET_BASE, **changes), SetBias(state.base_bias)


def _finish_cycle(state: ControllerState, cfg: ControllerConfig, magnitude: float,
                  correction: float, in_tolerance: bool, needed: int, **changes):
    if in_tolerance:
        count = state.in_tolerance_count + 1
        state = replace(state, iteration_count=0, in_tolerance_count=count, **changes)
        if count >= needed:
            return replace(state, position=Position.IDLE), Done(True)
        return _start_cycle(state)
    iterations = state.iteration_count + 1
    if iterations > cfg.max_iterations:
        return _fault(replace(state, **changes), f"no convergence within {cfg.max_iterations} iterations")
    state = replace(
        state,
        position=Position.IDLE,
        base_bias=state.base_bias + correction,
        iteration_count=iterations,
        in_tolerance_count=0,
        **changes,
    )
    return state, ApplyCompensation(correction)


def _after_step1(state: ControllerState, cfg: ControllerConfig):
    dV = cfg.probe_step_dV
    if cfg.mode is Mode.EXTREMUM_NULLING:
        d12 = slope(state.vg2, state.vg1, dV)
        magnitude = abs(d12)
        # minimum: positive slope means we sit right of it, so lower the bias
        sign = -1.0 if cfg.extremum is Extremum.MINIMUM else 1.0
        correction = math.copysign(_schedule_step(cfg, magnitude), sign * d12)
        return _finish_cycle(state, cfg, magnitude, correction,
                             magnitude <= cfg.slope_tolerance_epsD, 1, d12=d12)
    return replace(state, position=Position.SET_STEP2), SetBias(state.base_bias + 2.0 * dV)


def _after_step2(state: ControllerState, cfg: ControllerConfig):
    dV = cfg.probe_step_dV
    if state.tracking:
        v_base, v_1, v_2 = state.vg5, state.vg6, state.vg3
    else:
        v_base, v_1, v_2 = state.vg1, state.vg2, state.vg4
    d11 = slope(v_1, v_base, dV)
    d13 = slope(v_2, v_1, dV)
    d2 = second_derivative(d11, d13, dV)
    try:
        ratio = cotangent_ratio(d11, d2, cfg.min_slope_guard)
    except SingularRatioError as exc:
        trips = state.guard_trips + 1
        state = replace(state, d11=d11, d13=d13, d2=d2, guard_trips=trips)
        if trips >= cfg.guard_fault_cycles:
            return _fault(state, f"slope guard tripped {trips} times: {exc}")
        return _start_cycle(state)

    state = replace(state, d11=d11, d13=d13, d2=d2, guard_trips=0)
    if not state.tracking:
        return _start_cycle(state, r1=ratio)
    direction = classify_drift(state.r1, ratio, cfg.ratio_tolerance_epsR)
    magnitude = abs(ratio - state.r1)
    correction = compensation_voltage(cfg, magnitude, direction)
    return _finish_cycle(state, cfg, magnitude, correction, direction is Direction.NONE,
                         cfg.converge_cycles, r2=ratio)


def controller_step(state: ControllerState, cfg: ControllerConfig,
                    latest_read: Optional[float] = None) -> tuple[ControllerState, ControlAction]:
    """Advance the controller by one action.

    ``latest_read`` must be supplied exactly when the previous action was
    :class:`ReadMonitor`; anything else is a protocol fault.
    """
    pos = state.position
    if pos is Position.FAULTED:
        return state, Fault(state.fault_reason or "faulted")

    expects_read = pos in _READ_POSITIONS
    if expects_read and latest_read is None:
        return _fault(state, f"missing monitor read at {pos.value}")
    if not expects_read and latest_read is not None:
        return _fault(state, f"unexpected monitor read at {pos.value}")

    if pos is Position.IDLE:
        return _start_cycle(state)

    if pos in _NEXT_READ:
        return replace(state, position=_NEXT_READ[pos], discards_left=cfg.settle_reads), _READ

    if state.discards_left > 0:
        return replace(state, discards_left=state.discards_left - 1), _READ

    v = float(latest_read)
    dV = cfg.probe_step_dV
    if pos is Position.READ_BASE:
        slot = "vg5" if state.tracking else "vg1"
        state = replace(state, position=Position.SET_STEP1, **{slot: v})
        return state, SetBias(state.base_bias + dV)
    if pos is Position.READ_STEP1:
        slot = "vg6" if state.tracking else "vg2"
        return _after_step1(replace(state, **{slot: v}), cfg)
    # READ_STEP2
    slot = "vg3" if state.tracking else "vg4"
    return _after_step2(replace(state, **{slot: v}), cfg)
