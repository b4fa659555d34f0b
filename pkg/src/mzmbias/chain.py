"""Monitoring path: tap coupler, photodetector, ADC and bias DAC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class SignalChainConfig:
    """Converter and detector settings.

    ``adc_bits=None`` selects an ideal (unquantized, unclamped) converter.
    ``oversample`` ADC samples are averaged into each controller read, the
    way an FPGA boxcar-averages a fast converter.
    """

    tap_monitor_fraction: float = 0.1
    detector_gain: float = 2.0  # V/mW
    detector_noise_sigma: float = 0.0  # V per sample
    adc_bits: Optional[int] = 12
    adc_full_scale: float = 5.0
    dac_bits: int = 16
    dac_min: float = 0.0
    dac_max: float = 10.0
    oversample: int = 1

    def __post_init__(self):
        if not 0 < self.tap_monitor_fraction < 1:
            raise ValueError("tap_monitor_fraction must be in (0, 1)")
        if not self.detector_gain > 0:
            raise ValueError("detector_gain must be > 0")
        if not self.detector_noise_sigma >= 0:
            raise ValueError("detector_noise_sigma must be >= 0")
        if self.adc_bits is not None and not (isinstance(self.adc_bits, int) and self.adc_bits >= 1):
            raise ValueError("adc_bits must be an integer >= 1 or None")
        if not self.adc_full_scale > 0:
            raise ValueError("adc_full_scale must be > 0")
        if not (isinstance(self.dac_bits, int) and self.dac_bits >= 1):
            raise ValueError("dac_bits must be an integer >= 1")
        if not self.dac_min < self.dac_max:
            raise ValueError("dac_min must be < dac_max")
        if not (isinstance(self.oversample, int) and self.oversample >= 1):
            raise ValueError("oversample must be an integer >= 1")

    @property
    def adc_lsb(self) -> float:
        if self.adc_bits is None:
            return 0.0
        return self.adc_full_scale / (2**self.adc_bits - 1)

    @property
    def dac_lsb(self) -> float:
        return (self.dac_max - self.dac_min) / (2**self.dac_bits - 1)


def tap(cfg: SignalChainConfig, power):
    """Split ``power`` into (through, monitor); 10% monitor for a 9:1 coupler."""
    monitor = cfg.tap_monitor_fraction * power
    return power - monitor, monitor


def detect(cfg: SignalChainConfig, power: float, rng: Optional[np.random.Generator] = None) -> float:
    v = cfg.detector_gain * power
    if cfg.detector_noise_sigma > 0:
        v += cfg.detector_noise_sigma * rng.standard_normal()
    return v


def adc_read(cfg: SignalChainConfig, v):
    """Nearest of ``2**adc_bits`` levels on [0, full_scale]; out-of-range clamps."""
    if cfg.adc_bits is None:
        return v
    lsb = cfg.adc_lsb
    if isinstance(v, float):
        return min(max(math.floor(v / lsb + 0.5), 0), 2**cfg.adc_bits - 1) * lsb
    code = np.clip(np.floor(np.asarray(v, dtype=float) / lsb + 0.5), 0, 2**cfg.adc_bits - 1)
    out = code * lsb
    return float(out) if out.ndim == 0 else out


def dac_write(cfg: SignalChainConfig, v):
    lsb = cfg.dac_lsb
    if isinstance(v, float):
        x = min(max(v, cfg.dac_min), cfg.dac_max)
        return cfg.dac_min + min(math.floor((x - cfg.dac_min) / lsb + 0.5), 2**cfg.dac_bits - 1) * lsb
    x = np.clip(np.asarray(v, dtype=float), cfg.dac_min, cfg.dac_max)
    code = np.clip(np.floor((x - cfg.dac_min) / lsb + 0.5), 0, 2**cfg.dac_bits - 1)
    out = cfg.dac_min + code * lsb
    return float(out) if out.ndim == 0 else out


def read_monitor(cfg: SignalChainConfig, monitor_power: float, rng: Optional[np.random.Generator] = None) -> float:
    """One controller read: mean of ``oversample`` detected, digitized samples."""
    v = cfg.detector_gain * monitor_power
    sigma = cfg.detector_noise_sigma
    n = cfg.oversample
    if sigma == 0:
        return adc_read(cfg, float(v))
    z = rng.standard_normal(n)
    if cfg.adc_bits is None:
        return float(np.mean(v + sigma * z))
    top = float(2**cfg.adc_bits - 1)
    codes = _kernels.quantized_code_sum(v, z, sigma, cfg.adc_lsb, top)
    return codes / n * cfg.adc_lsb
