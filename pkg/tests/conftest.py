import math
import sys

import pytest

from mzmbias import scenario as sc
from mzmbias.controller import ControllerState, ReadMonitor, SetBias, controller_step


def cosine_read(v_pi=3.8, peak=1.0, drift=0.0):
    """Noiseless read voltage of an ideal plant (infinite extinction), peak ``peak``."""
    k = math.pi / v_pi
    return lambda bias: peak * 0.5 * (1.0 + math.cos(k * bias + drift))


def drive(cfg, read_fn, state, stop=lambda action: False, max_steps=10_000):
    """Step the controller against ``read_fn(bias)`` until ``stop(action)``.

    The plant sees the most recent SetBias; compensations move the base.
    Returns (state, actions).
    """
    actions = []
    bias = state.base_bias
    read = None
    for _ in range(max_steps):
        state, action = controller_step(state, cfg, read)
        read = None
        actions.append(action)
        if isinstance(action, SetBias):
            bias = action.volts
        elif isinstance(action, ReadMonitor):
            read = read_fn(bias)
        if stop(action):
            return state, actions
    raise AssertionError("controller did not reach the stop condition")


@pytest.fixture(scope="session")
def builtin():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = sc.load(sc.builtin_path(name))
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
