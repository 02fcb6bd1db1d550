"""Array gains under central-frequency beamforming.

With phase-only weights matched to the center tone, each array's gain at
tone ``l`` collapses to the magnitude of a phasor sum
``|sum_n exp(j F_l x_n . rho)|``; the received amplitude is the product of
the BS and IRS gains and the two hop losses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .channel import AngleSet, ToneTable, steering_bs, steering_irs
from .geometry import ArrayLayout, SurfaceLayout


@dataclass(frozen=True, eq=False)
class Beamformers:
    bs_weights: np.ndarray
    irs_phases: np.ndarray  # diagonal of the IRS reflection matrix


@dataclass(frozen=True, eq=False)
class GainProfile:
    """Per-tone gains; ``amplitude`` and ``power`` are in raw link units."""

    g_bs: np.ndarray
    g_irs: np.ndarray
    amplitude: np.ndarray
    power: np.ndarray
    alpha: np.ndarray
    bs_size: int
    irs_size: int
    freqs: np.ndarray = None

    def __len__(self):
        return self.g_bs.shape[0]

    @property
    def normalized_gain(self) -> np.ndarray:
        """``g_bs * g_irs / (M * K * J)``, 1 means no squint loss."""
        return self.g_bs * self.g_irs / (self.bs_size * self.irs_size)


def central_beamformers(bs: ArrayLayout, irs: SurfaceLayout, f_c: float,
                        angles: AngleSet) -> Beamformers:
    f = steering_bs(bs, f_c, angles.rho_bs)
    theta = steering_irs(irs, f_c, angles.rho_departure) * steering_irs(irs, f_c, angles.rho_arrival).conj()
    return Beamformers(f, theta)


def phasor_sums(points: np.ndarray, wavenumbers, rho) -> np.ndarray:
    """``sum_n exp(j F_l x_n . rho)`` for every tone; shape ``(len(F),)``."""
    proj = np.asarray(points, dtype=float).reshape(-1, 2) @ np.asarray(rho, dtype=float)
    F = np.atleast_1d(np.asarray(wavenumbers, dtype=float))
    return np.exp(1j * np.outer(F, proj)).sum(axis=1)


def bs_gain(layout: ArrayLayout, F_l, rho_bs):
    g = np.abs(phasor_sums(layout.positions, F_l, rho_bs))
    return float(g[0]) if np.ndim(F_l) == 0 else g


def irs_gain(layout: SurfaceLayout, F_l, delta_rho):
    g = np.abs(phasor_sums(layout.elements, F_l, delta_rho))
    return float(g[0]) if np.ndim(F_l) == 0 else g


def gain_profile(bs: ArrayLayout, irs: SurfaceLayout, tones: ToneTable,
                 angles: AngleSet) -> GainProfile:
    g_bs = bs_gain(bs, tones.wavenumbers, angles.rho_bs)
    g_irs = irs_gain(irs, tones.wavenumbers, angles.delta_rho)
    alpha = tones.alpha
    amplitude = alpha * g_irs * g_bs
    return GainProfile(g_bs, g_irs, amplitude, amplitude ** 2, alpha,
                       bs.count, irs.count * irs.elements_per_subarray, tones.freqs)


def cascade_amplitude(G: np.ndarray, h: np.ndarray, beams: Beamformers) -> float:
    """``|h^H Theta G f|`` from explicit channel matrices."""
    return float(abs(np.vdot(h, beams.irs_phases * (G @ beams.bs_weights))))


def min_band_power(profile: GainProfile) -> Tuple[int, float]:
    """Weakest tone and its power; ties go to the lowest index."""
    idx = int(np.argmin(profile.power))
    return idx, float(profile.power[idx])


def reference_power(tones: ToneTable, bs_size: int, irs_size: int) -> float:
    """Center-frequency power of a squint-free link, used to normalize reports."""
    return (tones.alpha_center * bs_size * irs_size) ** 2
