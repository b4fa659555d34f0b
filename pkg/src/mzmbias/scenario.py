"""JSON scenario files.

A scenario has five sections, ``mzm``, ``drift``, ``chain``, ``controller``
and ``sim``, mapping one-to-one onto the config dataclasses, plus an optional
free-text ``description``. Unknown keys are rejected and every error names
the offending field path, e.g. ``drift.components[2].time_constant``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

from .chain import SignalChainConfig
from .controller import ControllerConfig, Extremum, Mode
from .device import MzmParams
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
)
from .sim import SimConfig


class ScenarioError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Scenario:
    mzm: MzmParams
    drift: DriftScenario
    chain: SignalChainConfig
    controller: ControllerConfig
    sim: SimConfig
    description: str = ""


# -- field converters --------------------------------------------------------


def _number(path, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ScenarioError(path, "must be finite")
    return float(value)


def _integer(path, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _optional_integer(path, value):
    return None if value is None else _integer(path, value)


def _optional_number(path, value):
    return None if value is None else _number(path, value)


def _boolean(path, value):
    if not isinstance(value, bool):
        raise ScenarioError(path, f"expected true/false, got {type(value).__name__}")
    return value


def _choice(enum_type):
    def convert(path, value):
        try:
            return enum_type(value)
        except ValueError:
            allowed = ", ".join(e.value for e in enum_type)
            raise ScenarioError(path, f"expected one of {allowed}, got {value!r}") from None
    return convert


def _pairs(path, value):
    if not isinstance(value, list) or not value:
        raise ScenarioError(path, "expected a non-empty list of [a, b] pairs")
    out = []
    for i, item in enumerate(value):
        if not isinstance(item, list) or len(item) != 2:
            raise ScenarioError(f"{path}[{i}]", "expected a [a, b] pair")
        out.append((_number(f"{path}[{i}][0]", item[0]), _number(f"{path}[{i}][1]", item[1])))
    return tuple(out)


def _section(path: str, data: Any, cls, converters: dict[str, Callable], required=()):
    if not isinstance(data, dict):
        raise ScenarioError(path, "expected an object")
    unknown = sorted(set(data) - set(converters))
    if unknown:
        raise ScenarioError(f"{path}.{unknown[0]}", "unknown key")
    missing = [k for k in required if k not in data]
    if missing:
        raise ScenarioError(f"{path}.{missing[0]}", "required key missing")
    kwargs = {k: converters[k](f"{path}.{k}", v) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ValueError as exc:
        field = _blame(str(exc), kwargs)
        raise ScenarioError(f"{path}.{field}" if field else path, str(exc)) from None


def _blame(message: str, kwargs: dict) -> Optional[str]:
    keys = sorted(kwargs, key=len, reverse=True)
    for key in keys:
        if message.startswith(key + " "):
            return key
    for key in keys:
        if f" {key} " in f" {message} ":
            return key
    return None


_MZM = {
    "v_pi": _number,
    "input_power": _number,
    "insertion_loss": _number,
    "extinction_ratio": _number,
    "intrinsic_phase": _number,
}

_CHAIN = {
    "tap_monitor_fraction": _number,
    "detector_gain": _number,
    "detector_noise_sigma": _number,
    "adc_bits": _optional_integer,
    "adc_full_scale": _number,
    "dac_bits": _integer,
    "dac_min": _number,
    "dac_max": _number,
    "oversample": _integer,
}

_CONTROLLER = {
    "probe_step_dV": _number,
    "mode": _choice(Mode),
    "ratio_tolerance_epsR": _number,
    "slope_tolerance_epsD": _number,
    "min_slope_guard": _number,
    "compensation_schedule": _pairs,
    "max_iterations": _integer,
    "settle_reads": _integer,
    "converge_cycles": _integer,
    "extremum": _choice(Extremum),
    "guard_fault_cycles": _integer,
}

_SIM = {
    "duration": _number,
    "control_period": _number,
    "sample_period": _number,
    "seed": _integer,
    "open_loop": _boolean,
    "initial_bias": _optional_number,
}

_CIRCUIT = {k: _number for k in ("r1", "r2", "r3", "c1", "c2", "c3", "v0")}

_THERMAL_MODEL = {
    "base_index": _number,
    "axis": _choice(Axis),
    "length_L": _number,
    "wavelength_lambda0": _number,
    "rel_dne_dT": _number,
    "rel_dno_dT": _number,
}


def _component(path, data):
    if not isinstance(data, dict):
        raise ScenarioError(path, "expected an object")
    kind = data.get("type")
    body = {k: v for k, v in data.items() if k != "type"}
    if kind == "circuit_relaxation":
        return _section(path, body, CircuitRelaxation, {
            "circuit": lambda p, v: _section(p, v, CircuitParams, _CIRCUIT, ("r1", "r2", "r3")),
            "coupling": _number,
        }, ("circuit", "coupling"))
    if kind == "ion_lag":
        return _section(path, body, IonLag, {"target_phase": _number, "time_constant": _number},
                        ("target_phase", "time_constant"))
    if kind == "photorefractive":
        return _section(path, body, Photorefractive, {"amplitude": _number, "time_constant": _number},
                        ("amplitude", "time_constant"))
    if kind == "thermal":
        return _section(path, body, ThermalTrajectory, {
            "model": lambda p, v: _section(p, v, ThermalModel, _THERMAL_MODEL),
            "temperature_offsets": _pairs,
        }, ("model", "temperature_offsets"))
    if kind == "step":
        return _section(path, body, StepEvent, {"at": _number, "jump": _number}, ("at", "jump"))
    if kind == "random_walk":
        return _section(path, body, RandomWalk, {"sigma": _number}, ("sigma",))
    raise ScenarioError(f"{path}.type", f"unknown drift component type {kind!r}")


def _drift(path, data):
    if not isinstance(data, dict):
        raise ScenarioError(path, "expected an object")
    unknown = sorted(set(data) - {"duration", "components"})
    if unknown:
        raise ScenarioError(f"{path}.{unknown[0]}", "unknown key")
    if "duration" not in data:
        raise ScenarioError(f"{path}.duration", "required key missing")
    duration = _number(f"{path}.duration", data["duration"])
    raw = data.get("components", [])
    if not isinstance(raw, list):
        raise ScenarioError(f"{path}.components", "expected a list")
    comps = [_component(f"{path}.components[{i}]", c) for i, c in enumerate(raw)]
    for i, c in enumerate(comps):
        if isinstance(c, ThermalTrajectory):
            ts = [t for t, _ in c.temperature_offsets]
            if ts[0] < 0 or ts[-1] > duration:
                raise ScenarioError(f"{path}.components[{i}].temperature_offsets",
                                    f"breakpoint times must lie within [0, {duration}]")
    try:
        return DriftScenario(duration, comps)
    except ValueError as exc:
        raise ScenarioError(f"{path}.duration", str(exc)) from None


SECTIONS = ("mzm", "drift", "chain", "controller", "sim")


def scenario_from_dict(data: Any) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    unknown = sorted(set(data) - set(SECTIONS) - {"description"})
    if unknown:
        raise ScenarioError(unknown[0], "unknown key")
    for name in SECTIONS:
        if name not in data:
            raise ScenarioError(name, "required section missing")
    description = data.get("description", "")
    if not isinstance(description, str):
        raise ScenarioError("description", "expected a string")
    mzm = _section("mzm", data["mzm"], MzmParams, _MZM)
    drift = _drift("drift", data["drift"])
    chain = _section("chain", data["chain"], SignalChainConfig, _CHAIN)
    controller = _section("controller", data["controller"], ControllerConfig, _CONTROLLER)
    sim = _section("sim", data["sim"], SimConfig, _SIM)
    if sim.duration > drift.duration:
        raise ScenarioError("sim.duration", "exceeds drift.duration")
    return Scenario(mzm, drift, chain, controller, sim, description)


def loads(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return scenario_from_dict(data)


def load(path) -> Scenario:
    """Parse and validate a scenario file. OSError propagates for I/O problems."""
    text = Path(path).read_text(encoding="utf-8")
    return loads(text)


def builtin_path(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``"two_plateaus"``."""
    if not name.endswith(".json"):
        name += ".json"
    return Path(str(resources.files("mzmbias") / "scenarios" / name))


def builtin_names() -> list[str]:
    root = resources.files("mzmbias") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


# -- serialization -----------------------------------------------------------


def _plain(obj):
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        if hasattr(v, "value") and not isinstance(v, (int, float)):
            v = v.value
        elif isinstance(v, tuple):
            v = [list(p) for p in v]
        out[f.name] = v
    return out


def _component_dict(c) -> dict:
    if isinstance(c, CircuitRelaxation):
        return {"type": "circuit_relaxation", "circuit": _plain(c.circuit), "coupling": c.coupling}
    if isinstance(c, IonLag):
        return {"type": "ion_lag", **_plain(c)}
    if isinstance(c, Photorefractive):
        return {"type": "photorefractive", **_plain(c)}
    if isinstance(c, ThermalTrajectory):
        return {"type": "thermal", "model": _plain(c.model),
                "temperature_offsets": [list(p) for p in c.temperature_offsets]}
    if isinstance(c, StepEvent):
        return {"type": "step", **_plain(c)}
    if isinstance(c, RandomWalk):
        return {"type": "random_walk", **_plain(c)}
    raise TypeError(c)


def scenario_to_dict(s: Scenario) -> dict:
    d = {}
    if s.description:
        d["description"] = s.description
    d["mzm"] = _plain(s.mzm)
    d["drift"] = {"duration": s.drift.duration,
                  "components": [_component_dict(c) for c in s.drift.components]}
    d["chain"] = _plain(s.chain)
    d["controller"] = _plain(s.controller)
    d["sim"] = _plain(s.sim)
    return d


def dumps(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"
