"""Directional mmWave link model.

This module implements:
  - the exact uniform-linear-array beamforming pattern and its cosine
    approximation (nonzero only inside the main lobe)
  - per-link gain sampling with Nakagami-m small-scale fading, where the
    serving beam is aligned and interfering beams point at an independent
    uniform angle
  - SINR assembly at the typical user with a finite line-of-sight ball

Antenna gains carry the array factor M; transmit power and the intercept
beta are applied where SINR is assembled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelParams",
    "kernel_actual",
    "kernel_cosine",
    "sample_link_gain",
    "sinr_at_typical",
]


@dataclass(frozen=True)
class ChannelParams:
    """Link-level constants shared by the analytic and simulation paths.

    beta: path-loss intercept at 1 m (linear)
    alpha: path-loss exponent, must exceed 2
    m_nakagami: integer fading shape (1 recovers Rayleigh power fading)
    noise_power: thermal noise at the receiver (linear W)
    d_over_wavelength: antenna spacing over carrier wavelength
    """

    beta: float = 1.0
    alpha: float = 4.0
    m_nakagami: int = 1
    noise_power: float = 3e-2
    d_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.alpha <= 2:
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if self.m_nakagami < 1 or int(self.m_nakagami) != self.m_nakagami:
            raise ValueError(f"m_nakagami must be a positive integer, got {self.m_nakagami}")
        if self.beta <= 0 or self.noise_power < 0:
            raise ValueError("beta must be positive and noise_power nonnegative")


def kernel_actual(x, n_antennas: int):
    """Normalized array pattern sin^2(pi M x) / (M^2 sin^2(pi x)).

    Periodic Fejer-type kernel; equals 1 at integer x (beam aligned).
    """
    m = int(n_antennas)
    x = np.asarray(x, dtype=float)
    s = np.sin(np.pi * x)
    near_peak = np.abs(s) < 1e-12
    safe = np.where(near_peak, 1.0, s)
    out = np.where(
        near_peak,
        1.0,
        (np.sin(np.pi * m * x) / (m * safe)) ** 2,
    )
    return out if out.ndim else float(out)


def kernel_cosine(x, n_antennas: int):
    """Main-lobe cosine approximation cos^2(pi M x / 2) on |x| <= 1/M, else 0."""
    m = int(n_antennas)
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= 1.0 / m
    out = np.where(inside, np.cos(np.pi * m * x / 2.0) ** 2, 0.0)
    return out if out.ndim else float(out)


def sample_link_gain(rng: np.random.Generator, params: ChannelParams,
                     n_antennas: int, aligned: bool, size=None):
    """Sample effective antenna-plus-fading gain M * |rho|^2 * G(angle).

    The fading power |rho|^2 is Gamma(m, 1/m) with unit mean.  A serving
    link is beam-aligned (pattern factor 1).  An interfering beam points at
    an angle offset theta uniform on [-1, 1] in cosine-angle units, so with
    spacing ratio 1/2 the pattern argument is theta/2 and the gain is zero
    with probability 1 - min(2/M, 1).
    """
    m_fad = params.m_nakagami
    pw = rng.gamma(shape=m_fad, scale=1.0 / m_fad, size=size)
    gain = n_antennas * pw
    if not aligned:
        theta = rng.uniform(-1.0, 1.0, size=size)
        gain = gain * kernel_cosine(params.d_over_wavelength * theta, n_antennas)
    return gain


def sinr_at_typical(p_serv_w: float, gain_serv: float, dist_serv: float,
                    p_int_w, gains_int, dists_int,
                    params: ChannelParams, r_max: float = np.inf) -> float:
    """SINR of the typical user for one channel draw.

    Links beyond the line-of-sight radius r_max contribute nothing; a
    serving link beyond it yields SINR 0.
    """
    if dist_serv > r_max or dist_serv <= 0:
        return 0.0
    signal = params.beta * p_serv_w * gain_serv * dist_serv ** -params.alpha
    p_int_w = np.asarray(p_int_w, dtype=float)
    gains_int = np.asarray(gains_int, dtype=float)
    dists_int = np.asarray(dists_int, dtype=float)
    keep = dists_int <= r_max
    interference = float(
        np.sum(params.beta * p_int_w[keep] * gains_int[keep]
               * dists_int[keep] ** -params.alpha)
    )
    return signal / (params.noise_power + interference)
