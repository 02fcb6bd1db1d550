"""Wideband line-of-sight channel of the BS -> IRS -> user link.

Every subcarrier shares the same far-field geometry; only the
wavenumber and the free-space/absorption loss change across the band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import ArrayLayout, SurfaceLayout

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class LinkParams:
    """Hop distances, absorption and path delays.

    Delays default to ``d / c``; they rotate the channel phase only.
    """

    d_g: float
    d_h: float
    kappa_abs_db_per_m: float = 0.0
    tau_g: Optional[float] = None
    tau_h: Optional[float] = None

    def __post_init__(self):
        if not (self.d_g > 0 and self.d_h > 0):
            raise ValueError("link distances must be positive")
        if self.kappa_abs_db_per_m < 0:
            raise ValueError("absorption coefficient must be non-negative")
        if self.tau_g is None:
            object.__setattr__(self, "tau_g", self.d_g / SPEED_OF_LIGHT)
        if self.tau_h is None:
            object.__setattr__(self, "tau_h", self.d_h / SPEED_OF_LIGHT)
        if self.tau_g < 0 or self.tau_h < 0:
            raise ValueError("path delays must be non-negative")


@dataclass(frozen=True)
class AngleSet:
    """Azimuth/elevation pairs (radians) at the BS and at both sides of the IRS."""

    bs_azimuth: float
    bs_elevation: float
    irs_arrival_azimuth: float
    irs_arrival_elevation: float
    irs_departure_azimuth: float
    irs_departure_elevation: float

    def __post_init__(self):
        for name in ("bs", "irs_arrival", "irs_departure"):
            az = getattr(self, f"{name}_azimuth")
            el = getattr(self, f"{name}_elevation")
            if not -math.pi < az <= math.pi:
                raise ValueError(f"{name} azimuth {az} outside (-pi, pi]")
            if not 0.0 < el < math.pi:
                raise ValueError(f"{name} elevation {el} outside (0, pi)")

    @property
    def rho_bs(self) -> np.ndarray:
        return direction_vector("bs", self.bs_azimuth, self.bs_elevation)

    @property
    def rho_arrival(self) -> np.ndarray:
        return direction_vector("irs", self.irs_arrival_azimuth, self.irs_arrival_elevation)

    @property
    def rho_departure(self) -> np.ndarray:
        return direction_vector("irs", self.irs_departure_azimuth, self.irs_departure_elevation)

    @property
    def delta_rho(self) -> np.ndarray:
        """Departure minus arrival direction; what the IRS squint depends on."""
        return self.rho_departure - self.rho_arrival


DEFAULT_ANGLES = AngleSet(
    bs_azimuth=math.pi / 6, bs_elevation=math.pi / 3,
    irs_arrival_azimuth=-math.pi / 4, irs_arrival_elevation=math.pi / 3,
    irs_departure_azimuth=math.pi / 4, irs_departure_elevation=2 * math.pi / 5,
)


@dataclass(frozen=True, eq=False)
class ToneTable:
    """Subcarrier grid with squint wavenumbers and per-hop amplitude loss."""

    freqs: np.ndarray
    wavenumbers: np.ndarray  # F_l = 2*pi*(f_c - f_l)/c, rad/m
    alpha_g: np.ndarray
    alpha_h: np.ndarray
    f_c: float
    alpha_center: float  # alpha_G * alpha_h evaluated at f_c
    c: float = SPEED_OF_LIGHT

    def __len__(self):
        return self.freqs.shape[0]

    @property
    def center_index(self) -> Optional[int]:
        hits = np.flatnonzero(self.wavenumbers == 0.0)
        return int(hits[0]) if hits.size else None

    @property
    def alpha(self) -> np.ndarray:
        """Cascaded amplitude loss ``alpha_G * alpha_h`` per tone."""
        return self.alpha_g * self.alpha_h


def path_loss(f, d, kappa_db_per_m: float = 0.0):
    """Free-space amplitude loss with molecular absorption.

    ``kappa_db_per_m`` is a power attenuation in dB/m; it is converted to
    nepers before entering the exponential.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    if d <= 0:
        raise ValueError("distance must be positive (far-field model)")
    if kappa_db_per_m < 0:
        raise ValueError("absorption coefficient must be non-negative")
    kappa_nat = kappa_db_per_m * math.log(10.0) / 10.0
    out = SPEED_OF_LIGHT / (4.0 * math.pi * f * d) * math.exp(-0.5 * kappa_nat * d)
    return float(out) if out.ndim == 0 else out


def build_tone_table(f0: float, fL: float, L: int, link: LinkParams) -> ToneTable:
    """``L + 1`` equally spaced tones from ``f0`` to ``fL`` inclusive."""
    if f0 <= 0 or fL <= 0:
        raise ValueError("band edges must be positive frequencies")
    if not f0 < fL:
        raise ValueError(f"need f0 < fL, got {f0} >= {fL}")
    if L < 1:
        raise ValueError("need at least two tones (L >= 1)")
    l = np.arange(L + 1)
    freqs = f0 + l / L * (fL - f0)
    f_c = (f0 + fL) / 2.0
    # Offset from the center computed symmetrically so the middle tone of an
    # even grid lands on F = 0 exactly and F_0 = -F_L.
    offsets = (L - 2 * l) / (2.0 * L) * (fL - f0)
    wavenumbers = 2.0 * math.pi * offsets / SPEED_OF_LIGHT
    freqs.setflags(write=False)
    wavenumbers.setflags(write=False)
    return ToneTable(
        freqs=freqs,
        wavenumbers=wavenumbers,
        alpha_g=path_loss(freqs, link.d_g, link.kappa_abs_db_per_m),
        alpha_h=path_loss(freqs, link.d_h, link.kappa_abs_db_per_m),
        f_c=f_c,
        alpha_center=path_loss(f_c, link.d_g, link.kappa_abs_db_per_m)
        * path_loss(f_c, link.d_h, link.kappa_abs_db_per_m),
    )


def direction_vector(kind: str, azimuth: float, elevation: float) -> np.ndarray:
    """Planar projection of the propagation direction.

    The BS and the IRS use different azimuth conventions: the BS takes the
    cosine of the azimuth, the IRS the sine.
    """
    if kind == "bs":
        return np.array([math.cos(azimuth) * math.sin(elevation), math.cos(elevation)])
    if kind == "irs":
        return np.array([math.sin(azimuth) * math.sin(elevation), math.cos(elevation)])
    raise ValueError(f"unknown array kind {kind!r}; expected 'bs' or 'irs'")


def _steering(points: np.ndarray, f: float, rho) -> np.ndarray:
    return np.exp(1j * (2.0 * math.pi * f / SPEED_OF_LIGHT) * (points @ np.asarray(rho, dtype=float)))


def steering_bs(layout: ArrayLayout, f: float, rho) -> np.ndarray:
    return _steering(layout.positions, f, rho)


def steering_irs(layout: SurfaceLayout, f: float, rho) -> np.ndarray:
    """Stacked per-subarray steering vectors (subarray-major)."""
    return _steering(layout.elements, f, rho)


def assemble_cascade(bs: ArrayLayout, irs: SurfaceLayout, tones: ToneTable,
                     angles: AngleSet, link: LinkParams, tone_index: int):
    """Full BS->IRS matrix ``G`` (N x M) and IRS->user vector ``h`` (N,) at one tone.

    Only used to cross-check the factorized gain; the optimizer never
    builds these matrices.
    """
    f = tones.freqs[tone_index]
    a_r = steering_irs(irs, f, angles.rho_arrival)
    a_t = steering_irs(irs, f, angles.rho_departure)
    b = steering_bs(bs, f, angles.rho_bs)
    G = tones.alpha_g[tone_index] * np.exp(-2j * math.pi * link.tau_g * f) * np.outer(a_r, b.conj())
    h = tones.alpha_h[tone_index] * np.exp(-2j * math.pi * link.tau_h * f) * a_t
    return G, h
