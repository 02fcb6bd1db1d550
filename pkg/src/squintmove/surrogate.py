"""Concave quadratic minorizers of the per-tone received power.

Moving one element (an antenna or a whole subarray) while the others stay
put changes the power at tone ``l`` as

    h_l(x) = beta_l * |T_l(x) + C_l|^2,

where ``C_l`` is the phasor sum of the fixed elements, ``T_l`` that of the
moving one, and ``beta_l`` collects the hop losses and the other array's
gain.  Expanding to second order and replacing the Hessian by a matrix
that is below it everywhere gives a quadratic that touches ``h_l`` at the
anchor and stays under it globally.  Minimum-spacing constraints are
handled the same way: the distance to a fixed neighbour is convex, so its
tangent plane at the anchor is an inner approximation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import AngleSet, ToneTable
from .gain import bs_gain, irs_gain, phasor_sums
from .geometry import ArrayLayout, SurfaceLayout


class DegenerateGeometryError(ValueError):
    """Two elements coincide, so the spacing linearization has no direction."""


@dataclass(frozen=True, eq=False)
class QuadraticSurrogate:
    """``value + gradient.(x - anchor) + 0.5 (x - anchor)^T curvature (x - anchor)``."""

    anchor: np.ndarray
    value: float
    gradient: np.ndarray
    curvature: np.ndarray

    def __call__(self, x) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.anchor
        return self.value + d @ self.gradient + 0.5 * np.einsum("...i,ij,...j->...", d, self.curvature, d)


@dataclass(frozen=True, eq=False)
class SurrogateStack:
    """One quadratic per tone, all sharing the same anchor.

    ``value`` has shape ``(T,)``, ``gradient`` ``(T, 2)`` and ``curvature``
    ``(T, 2, 2)``.
    """

    anchor: np.ndarray
    value: np.ndarray
    gradient: np.ndarray
    curvature: np.ndarray

    @classmethod
    def from_list(cls, surrogates: Sequence[QuadraticSurrogate]) -> "SurrogateStack":
        anchor = np.asarray(surrogates[0].anchor, dtype=float)
        for s in surrogates[1:]:
            if not np.array_equal(s.anchor, anchor):
                raise ValueError("all surrogates in a stack must share one anchor")
        return cls(anchor,
                   np.array([s.value for s in surrogates], dtype=float),
                   np.array([s.gradient for s in surrogates], dtype=float).reshape(-1, 2),
                   np.array([s.curvature for s in surrogates], dtype=float).reshape(-1, 2, 2))

    def __len__(self):
        return self.value.shape[0]

    def __getitem__(self, l) -> QuadraticSurrogate:
        return QuadraticSurrogate(self.anchor, float(self.value[l]), self.gradient[l], self.curvature[l])

    def evaluate(self, x) -> np.ndarray:
        """Every tone's surrogate at every point: shape ``(P, T)`` (or ``(T,)``)."""
        d = np.asarray(x, dtype=float) - self.anchor
        lin = d @ self.gradient.T
        quad = np.einsum("...i,tij,...j->...t", d, self.curvature, d)
        return self.value + lin + 0.5 * quad

    def minimum(self, x) -> np.ndarray:
        return np.min(self.evaluate(x), axis=-1)


@dataclass(frozen=True)
class HalfPlane:
    """``normal . (x - other) >= distance``."""

    normal: np.ndarray
    other: np.ndarray
    distance: float

    def margin(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.other) @ self.normal - self.distance


def distance_halfplane(anchor, other, D: float) -> HalfPlane:
    """Tangent of ``||x - other|| >= D`` at ``anchor``."""
    anchor = np.asarray(anchor, dtype=float)
    other = np.asarray(other, dtype=float)
    diff = anchor - other
    norm = float(np.hypot(diff[0], diff[1]))
    if norm == 0.0:
        raise DegenerateGeometryError(f"anchor coincides with neighbour at {other.tolist()}")
    return HalfPlane(diff / norm, other, float(D))


def residual_bs(m: int, layout: ArrayLayout, F_l, rho_bs):
    """Phasor sum of every antenna except ``m`` (0-based)."""
    others = np.delete(layout.positions, m, axis=0)
    C = phasor_sums(others, F_l, rho_bs)
    return complex(C[0]) if np.ndim(F_l) == 0 else C


def residual_irs(k: int, layout: SurfaceLayout, F_l, delta_rho):
    """Summed effective gain of every subarray except ``k`` (0-based)."""
    others = np.delete(layout.centers, k, axis=0)
    pts = (others[:, None, :] + layout.offsets[None, :, :]).reshape(-1, 2)
    C = phasor_sums(pts, F_l, delta_rho)
    return complex(C[0]) if np.ndim(F_l) == 0 else C


def _curvature_shape(rho: np.ndarray) -> np.ndarray:
    # diag(rho^2) + |rho_x rho_y| I dominates cos(.) rho rho^T for any phase
    return np.diag(rho ** 2) + abs(rho[0] * rho[1]) * np.eye(2)


def _stack(anchor, beta, C, F, rho, moving, curvature_scale):
    """Shared algebra for the BS and IRS bounds.

    ``moving`` holds the moving element's own phasors per tone, shape
    ``(T, J)``; ``curvature_scale`` is ``J`` (the largest possible
    ``|sum_j exp(.)|``).
    """
    absC = np.abs(C)
    angC = np.angle(C)
    T = moving.sum(axis=1)
    value = beta * np.abs(T + C) ** 2
    phases = np.angle(moving)
    sines = np.sin(phases - angC[:, None]).sum(axis=1)
    gradient = (-2.0 * beta * absC * F * sines)[:, None] * rho[None, :]
    curvature = (-2.0 * beta * absC * F ** 2 * curvature_scale)[:, None, None] * _curvature_shape(rho)[None]
    return SurrogateStack(np.array(anchor, dtype=float), value, gradient, curvature)


def bs_surrogates(m: int, bs: ArrayLayout, irs: SurfaceLayout, tones: ToneTable,
                  angles: AngleSet, anchor=None) -> SurrogateStack:
    """Lower bounds on every tone's power as a function of antenna ``m``'s position."""
    anchor = bs.positions[m] if anchor is None else np.asarray(anchor, dtype=float)
    F = tones.wavenumbers
    rho = angles.rho_bs
    beta = (tones.alpha * irs_gain(irs, F, angles.delta_rho)) ** 2
    C = residual_bs(m, bs, F, rho)
    # Wrapping F * (anchor . rho) through angle() keeps sin() arguments small.
    moving = np.exp(1j * F * (anchor @ rho))[:, None]
    return _stack(anchor, beta, C, F, rho, moving, 1.0)


def irs_surrogates(k: int, bs: ArrayLayout, irs: SurfaceLayout, tones: ToneTable,
                   angles: AngleSet, anchor=None) -> SurrogateStack:
    """Lower bounds on every tone's power as a function of subarray ``k``'s center."""
    anchor = irs.centers[k] if anchor is None else np.asarray(anchor, dtype=float)
    F = tones.wavenumbers
    drho = angles.delta_rho
    beta = (tones.alpha * bs_gain(bs, F, angles.rho_bs)) ** 2
    C = residual_irs(k, irs, F, drho)
    proj = (anchor[None, :] + irs.offsets) @ drho
    moving = np.exp(1j * np.outer(F, proj))
    return _stack(anchor, beta, C, F, drho, moving, float(irs.elements_per_subarray))


def bs_surrogate(m, l, bs, irs, tones, angles, anchor=None) -> QuadraticSurrogate:
    return bs_surrogates(m, bs, irs, tones, angles, anchor)[l]


def irs_surrogate(k, l, bs, irs, tones, angles, anchor=None) -> QuadraticSurrogate:
    return irs_surrogates(k, bs, irs, tones, angles, anchor)[l]
