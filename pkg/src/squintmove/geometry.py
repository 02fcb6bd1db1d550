"""Planar element positions, feasible regions and spacing rules.

All coordinates are in meters and relative to the center of the array
(BS) or surface (IRS).  Layouts are value objects; the optimizer builds
new ones instead of mutating them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Union

import numpy as np

# Slack used when accepting positions produced by a numerical solver.
SOLVER_SLACK = 1e-12


@dataclass(frozen=True)
class Region:
    """Closed axis-aligned box ``[-hx, hx] x [-hy, hy]``."""

    half_width_x: float
    half_width_y: float

    def __post_init__(self):
        if not (self.half_width_x > 0 and self.half_width_y > 0):
            raise ValueError(
                f"region half widths must be positive, got "
                f"({self.half_width_x}, {self.half_width_y})")

    @classmethod
    def from_size(cls, size_x: float, size_y: float) -> "Region":
        return cls(size_x / 2.0, size_y / 2.0)

    @property
    def half_widths(self) -> np.ndarray:
        return np.array([self.half_width_x, self.half_width_y])

    def excess(self, points) -> np.ndarray:
        """Per-point distance outside the box along the worst axis (<= 0 inside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.max(np.abs(pts) - self.half_widths, axis=1)

    def contains(self, point, slack: float = 0.0) -> bool:
        return bool(self.excess(point)[0] <= slack)

    def shrink(self, dx: float, dy: float) -> "Region":
        return Region(self.half_width_x - dx, self.half_width_y - dy)


@dataclass(frozen=True, eq=False)
class ArrayLayout:
    """Positions of the BS movable antennas."""

    positions: np.ndarray
    region: Region
    min_spacing: float

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def with_position(self, index: int, point) -> "ArrayLayout":
        pos = self.positions.copy()
        pos[index] = point
        return replace(self, positions=pos)


@dataclass(frozen=True, eq=False)
class SurfaceLayout:
    """IRS subarray centers plus the element offsets shared by every subarray."""

    centers: np.ndarray
    offsets: np.ndarray
    region: Region
    min_spacing: float

    def __post_init__(self):
        c = np.array(self.centers, dtype=float).reshape(-1, 2)
        t = np.array(self.offsets, dtype=float).reshape(-1, 2)
        if t.shape[0] == 0:
            raise ValueError("a subarray needs at least one element offset")
        c.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "offsets", t)

    @property
    def count(self) -> int:
        return self.centers.shape[0]

    @property
    def elements_per_subarray(self) -> int:
        return self.offsets.shape[0]

    @property
    def elements(self) -> np.ndarray:
        """Absolute element positions, subarray-major, shape ``(K*J, 2)``."""
        return (self.centers[:, None, :] + self.offsets[None, :, :]).reshape(-1, 2)

    def center_region(self) -> Region:
        """Box the centers must stay in so every element stays on the surface."""
        reach = np.max(np.abs(self.offsets), axis=0)
        return self.region.shrink(reach[0], reach[1])

    def with_center(self, index: int, point) -> "SurfaceLayout":
        c = self.centers.copy()
        c[index] = point
        return replace(self, centers=c)


Layout = Union[ArrayLayout, SurfaceLayout]


@dataclass(frozen=True)
class Violation:
    kind: str  # "region" or "spacing"
    indices: tuple
    margin: float

    def __str__(self):
        return f"{self.kind} violation at {self.indices}: margin {self.margin:.3e} m"


def make_uniform_grid(rows: int, cols: int, spacing: float) -> np.ndarray:
    """Centered ``rows x cols`` lattice, row-major with x varying fastest.

    The pitch is nudged up by as few ulps as needed for every computed
    neighbour distance to be ``>= spacing``.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid needs at least one row and column, got {rows}x{cols}")
    if not spacing > 0:
        raise ValueError(f"grid spacing must be positive, got {spacing}")
    hx = np.arange(cols) - (cols - 1) / 2.0
    hy = np.arange(rows) - (rows - 1) / 2.0
    pitch = float(spacing)
    while True:
        gx, gy = np.meshgrid(hx * pitch, hy * pitch)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        if pts.shape[0] < 2 or pairwise_min_distance(pts) >= spacing:
            return pts
        pitch = float(np.nextafter(pitch, np.inf))


def grid_shape(n: int) -> tuple:
    """Most square ``(rows, cols)`` factorization of ``n`` with rows <= cols."""
    if n < 1:
        raise ValueError("need at least one element")
    rows = max(d for d in range(1, math.isqrt(n) + 1) if n % d == 0)
    return rows, n // rows


def pairwise_distances(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def pairwise_min_distance(points) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise ValueError("need at least two points for a pairwise distance")
    d = pairwise_distances(pts)
    iu = np.triu_indices(pts.shape[0], k=1)
    return float(np.min(d[iu]))


def validate_layout(layout: Layout, slack: float = 0.0) -> List[Violation]:
    """List every region and spacing violation of ``layout``.

    ``slack`` loosens both checks; the default is an exact test.
    """
    report = []
    if isinstance(layout, SurfaceLayout):
        excess = layout.region.excess(layout.elements)
        J = layout.elements_per_subarray
        for n in np.flatnonzero(excess > slack):
            report.append(Violation("region", (int(n // J), int(n % J)), float(excess[n])))
        pts = layout.centers
    else:
        excess = layout.region.excess(layout.positions)
        for n in np.flatnonzero(excess > slack):
            report.append(Violation("region", (int(n),), float(excess[n])))
        pts = layout.positions

    if pts.shape[0] >= 2:
        d = pairwise_distances(pts)
        iu, ju = np.triu_indices(pts.shape[0], k=1)
        short = layout.min_spacing - d[iu, ju]
        for a, b, m in zip(iu, ju, short):
            if m > slack:
                report.append(Violation("spacing", (int(a), int(b)), float(m)))
    return report
