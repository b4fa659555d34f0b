"""Command-line front end.

    mzmbias simulate  --scenario S --out trace.csv [--seed N] [--open-loop]
    mzmbias compare   --scenario S --out DIR [--seed N]
    mzmbias calibrate --scenario S [--sweep-step V] [--out report.txt]
    mzmbias metrics   trace.csv
    mzmbias list

``S`` is a scenario file path or the name of a bundled scenario. Exit codes:
0 success, 2 validation failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import scenario as sc
from .sim import Metrics, SimTrace, calibrate, metrics, power_metrics, run

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3

CSV_COLUMNS = ("t_s", "drift_phase_rad", "bias_v", "p_out_dbm", "monitor_v", "d11", "d2", "r", "action")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# -- formatting --------------------------------------------------------------


def fmt(x) -> str:
    """9 significant digits; NaN/None become an empty field."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.9g}"


def trace_csv(trace: SimTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    cols = (trace.t, trace.drift_phase, trace.bias_voltage, trace.output_power_dbm,
            trace.monitor_voltage, trace.d11, trace.d2, trace.r)
    for i in range(len(trace)):
        w.writerow([fmt(c[i]) for c in cols] + [trace.action[i]])
    return buf.getvalue()


def summary_line(m: Metrics) -> str:
    parts = [
        f"fluctuation_db={fmt(m.fluctuation_db)}",
        f"max_percent_deviation={fmt(m.max_percent_deviation)}",
    ]
    if m.residual_phase_rms is not None:
        parts.append(f"residual_phase_rms_rad={fmt(m.residual_phase_rms)}")
    if m.settling_time is not None:
        parts.append(f"settling_time_s={fmt(m.settling_time)}")
    parts.append(f"faulted={'true' if m.faulted else 'false'}")
    return " ".join(parts)


def write_atomic(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial output."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# -- argument helpers --------------------------------------------------------


def u64(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return value


def load_scenario(name_or_path: str) -> sc.Scenario:
    path = Path(name_or_path)
    if not path.exists() and name_or_path in sc.builtin_names():
        path = sc.builtin_path(name_or_path)
    try:
        return sc.load(path)
    except sc.ScenarioError as exc:
        raise CliError(f"invalid scenario {name_or_path}: {exc}", EXIT_INVALID) from None
    except UnicodeDecodeError as exc:
        raise CliError(f"invalid scenario {name_or_path}: not UTF-8 ({exc.reason})", EXIT_INVALID) from None
    except OSError as exc:
        raise CliError(f"cannot read scenario {name_or_path}: {exc.strerror or exc}", EXIT_IO) from None


def _with_overrides(s: sc.Scenario, seed=None, open_loop=None) -> sc.Scenario:
    sim = s.sim
    if seed is not None:
        sim = replace(sim, seed=seed)
    if open_loop is not None:
        sim = replace(sim, open_loop=open_loop)
    return replace(s, sim=sim)


def _simulate(s: sc.Scenario) -> SimTrace:
    return run(s.drift, s.mzm, s.chain, s.controller, s.sim)


def _write(path, text):
    try:
        write_atomic(path, text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


# -- commands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    s = _with_overrides(load_scenario(args.scenario), args.seed, True if args.open_loop else None)
    trace = _simulate(s)
    _write(args.out, trace_csv(trace))
    print(summary_line(metrics(trace)))
    return EXIT_OK


def _ratio(a, b) -> str:
    if a is None or b is None:
        return ""
    if b == 0:
        return "nan" if a == 0 else "inf"
    return fmt(a / b)


def cmd_compare(args) -> int:
    base = _with_overrides(load_scenario(args.scenario), args.seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc.strerror or exc}", EXIT_IO) from None
    results = {}
    for name, flag in (("open", True), ("closed", False)):
        trace = _simulate(_with_overrides(base, open_loop=flag))
        _write(out / f"{name}.csv", trace_csv(trace))
        results[name] = metrics(trace)

    lines = [f"seed={base.sim.seed}"]
    for name, m in results.items():
        lines.append(f"{name}: {summary_line(m)}")
    o, c = results["open"], results["closed"]
    lines.append(
        "closed/open: "
        f"fluctuation_ratio={_ratio(c.fluctuation_db, o.fluctuation_db)} "
        f"deviation_ratio={_ratio(c.max_percent_deviation, o.max_percent_deviation)}"
    )
    text = "\n".join(lines) + "\n"
    _write(out / "summary.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    s = load_scenario(args.scenario)
    seed = s.sim.seed if args.seed is None else args.seed
    try:
        rep = calibrate(s.mzm, s.chain, sweep_step=args.sweep_step, seed=seed)
    except ValueError as exc:
        raise CliError(f"calibration failed: {exc}", EXIT_INVALID) from None
    text = (
        f"v_pi_v={fmt(rep.v_pi)} quadrature_v={fmt(rep.quadrature_bias)} "
        f"minimum_v={fmt(rep.minimum_bias)} extinction_ratio={fmt(rep.extinction_ratio)} "
        f"extinction_ratio_db={fmt(10 * math.log10(rep.extinction_ratio))} "
        f"sweep_step_v={fmt(rep.sweep_step)} dac_lsb_v={fmt(rep.dac_lsb)}\n"
    )
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def read_trace_power(path) -> np.ndarray:
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except UnicodeDecodeError:
        raise CliError(f"{path}: not a UTF-8 CSV file", EXIT_INVALID) from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise CliError(f"{path}: header must be {','.join(CSV_COLUMNS)}", EXIT_INVALID)
    col = CSV_COLUMNS.index("p_out_dbm")
    values = []
    for line, row in enumerate(rows[1:], start=2):
        try:
            values.append(float(row[col]))
        except (IndexError, ValueError):
            raise CliError(f"{path}: line {line}: bad p_out_dbm value", EXIT_INVALID) from None
    if not values:
        raise CliError(f"{path}: no data rows", EXIT_INVALID)
    return np.asarray(values)


def cmd_metrics(args) -> int:
    fluctuation, deviation = power_metrics(read_trace_power(args.csv))
    print(f"fluctuation_db={fmt(fluctuation)} max_percent_deviation={fmt(deviation)}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name in sc.builtin_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mzmbias", description="MZM bias-control simulator")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one simulation and write a CSV trace")
    sim.add_argument("--scenario", required=True, help="scenario JSON path or bundled name")
    sim.add_argument("--out", required=True, help="CSV output path")
    sim.add_argument("--seed", type=u64, help="override sim.seed")
    sim.add_argument("--open-loop", action="store_true", help="bypass the controller")
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="open vs closed loop on the same seed")
    cmp_.add_argument("--scenario", required=True)
    cmp_.add_argument("--out", required=True, help="output directory")
    cmp_.add_argument("--seed", type=u64)
    cmp_.set_defaults(func=cmd_compare)

    cal = sub.add_parser("calibrate", help="sweep the bias and estimate v_pi")
    cal.add_argument("--scenario", required=True)
    cal.add_argument("--sweep-step", type=positive_float, default=0.01, help="volts (default 0.01)")
    cal.add_argument("--seed", type=u64)
    cal.add_argument("--out", help="also write the report here")
    cal.set_defaults(func=cmd_calibrate)

    met = sub.add_parser("metrics", help="recompute power metrics from a CSV trace")
    met.add_argument("csv")
    met.set_defaults(func=cmd_metrics)

    lst = sub.add_parser("list", help="list bundled scenarios")
    lst.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"mzmbias: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
