"""Electro-optic phase shift and MZM intensity transfer curve."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ElectroOpticParams:
    """Material and geometry constants of a lithium niobate phase section.

    All lengths in meters, ``eo_coefficient_r`` in m/V.
    """

    wavelength_lambda0: float = 1.55e-6
    bulk_index_n: float = 2.14
    eo_coefficient_r: float = 30.8e-12
    overlap_gamma: float = 0.32
    electrode_gap_g: float = 1e-5
    interaction_length_L: float = 0.0422

    def __post_init__(self):
        for name in (
            "wavelength_lambda0",
            "bulk_index_n",
            "eo_coefficient_r",
            "overlap_gamma",
            "electrode_gap_g",
            "interaction_length_L",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.overlap_gamma > 1:
            raise ValueError("overlap_gamma must be <= 1")


@dataclass(frozen=True)
class MzmParams:
    v_pi: float = 3.8
    input_power: float = 10.0  # mW
    insertion_loss: float = 0.5  # linear power ratio
    extinction_ratio: float = 100.0  # linear max/min
    intrinsic_phase: float = 0.0

    def __post_init__(self):
        if not self.v_pi > 0:
            raise ValueError("v_pi must be > 0")
        if not self.input_power >= 0:
            raise ValueError("input_power must be >= 0")
        if not 0 < self.insertion_loss <= 1:
            raise ValueError("insertion_loss must be in (0, 1]")
        if not self.extinction_ratio >= 1:
            raise ValueError("extinction_ratio must be >= 1")

    @property
    def modulation_depth(self) -> float:
        er = self.extinction_ratio
        if math.isinf(er):
            return 1.0
        return (er - 1.0) / (er + 1.0)

    @property
    def peak_power(self) -> float:
        return self.input_power * self.insertion_loss * (1.0 + self.modulation_depth) / 2.0

    def operating_phase(self, bias_voltage, drift_phase=0.0):
        """theta = pi * V / v_pi + intrinsic + drift."""
        return math.pi * bias_voltage / self.v_pi + self.intrinsic_phase + drift_phase


def local_index_shift(params: ElectroOpticParams, applied_field: float) -> float:
    """Pockels index change ``-n^3 r E / 2`` for a field in V/m."""
    n = params.bulk_index_n
    return -0.5 * n**3 * params.eo_coefficient_r * applied_field


def effective_index_shift(params: ElectroOpticParams, voltage: float) -> float:
    # field/mode overlap reduced to the scalar Gamma/g, so E_s -> Gamma * V / g
    n = params.bulk_index_n
    return -0.5 * n**3 * params.eo_coefficient_r * (params.overlap_gamma / params.electrode_gap_g) * voltage


def phase_shift(params: ElectroOpticParams, voltage: float) -> float:
    """Guided-mode phase shift in radians; negative for positive voltage."""
    n = params.bulk_index_n
    return (
        -(math.pi / params.wavelength_lambda0)
        * n**3
        * params.eo_coefficient_r
        * (params.overlap_gamma / params.electrode_gap_g)
        * voltage
        * params.interaction_length_L
    )


def half_wave_voltage(params: ElectroOpticParams) -> float:
    n = params.bulk_index_n
    return (params.wavelength_lambda0 * params.electrode_gap_g) / (
        n**3 * params.eo_coefficient_r * params.overlap_gamma * params.interaction_length_L
    )


def mzm_transmission(mzm: MzmParams, bias_voltage, drift_phase=0.0):
    """Output power in mW of the raised-cosine transfer curve.

    Increasing ``bias_voltage`` increases the operating phase theta; with the
    default zero intrinsic phase the curve has a maximum at 0 V, quadrature at
    ``v_pi / 2`` and a minimum at ``v_pi``. Accepts scalars or arrays.
    """
    theta = np.pi * np.asarray(bias_voltage) / mzm.v_pi + mzm.intrinsic_phase + drift_phase
    out = mzm.input_power * mzm.insertion_loss * (1.0 + mzm.modulation_depth * np.cos(theta)) / 2.0
    if np.ndim(out) == 0:
        return float(out)
    return out


def mw_to_dbm(power):
    p = np.asarray(power, dtype=float)
    if np.any(p <= 0):
        raise ValueError("power must be > 0 mW to express in dBm")
    out = 10.0 * np.log10(p)
    return float(out) if out.ndim == 0 else out


def dbm_to_mw(level):
    out = 10.0 ** (np.asarray(level, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out
