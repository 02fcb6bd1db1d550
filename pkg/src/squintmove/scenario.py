"""Experiment configuration and its JSON form."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

from .channel import DEFAULT_ANGLES, SPEED_OF_LIGHT, AngleSet, LinkParams, ToneTable, build_tone_table
from .geometry import (ArrayLayout, Region, SurfaceLayout, grid_shape, make_uniform_grid,
                       validate_layout)


@dataclass(frozen=True)
class SolveOptions:
    rel_tol: float = 1e-4
    max_outer_iters: int = 50
    subsolver_tol: float = 1e-6

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.subsolver_tol > 0):
            raise ValueError("tolerances must be positive")
        if int(self.max_outer_iters) != self.max_outer_iters or self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be an integer >= 1")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one run.

    Geometry fields left as ``None`` are filled from the band center:
    antenna spacing ``lambda/2``, subarray spacing
    ``(1 + sqrt((J1-1)^2 + (J2-1)^2)) lambda/2``, BS aperture ``25 lambda``
    and IRS aperture ``50 lambda`` (both square).

    The optimizer starts from grids whose pitch is ``init_pitch_factor``
    times the minimum spacing; the fixed-position baseline always uses the
    minimum spacing itself.
    """

    M: int = 16
    K: int = 256
    J1: int = 1
    J2: int = 1
    L: int = 128
    f0_hz: float = 287.28e9
    fL_hz: float = 291.60e9
    a_bs_x_m: Optional[float] = None
    a_bs_y_m: Optional[float] = None
    a_irs_x_m: Optional[float] = None
    a_irs_y_m: Optional[float] = None
    d_bs_m: Optional[float] = None
    d_irs_m: Optional[float] = None
    d_g_m: float = 10.0
    d_h_m: float = 5.0
    kappa_abs_db_per_m: float = 5.157e-4
    init_pitch_factor: float = 2.0
    angles: AngleSet = DEFAULT_ANGLES
    solver: SolveOptions = field(default_factory=SolveOptions)
    normalize: bool = False

    def __post_init__(self):
        for name in ("M", "K", "J1", "J2", "L"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ScenarioError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not (self.f0_hz > 0 and self.fL_hz > 0):
            raise ScenarioError("band edges must be positive")
        if not self.f0_hz < self.fL_hz:
            raise ScenarioError(f"f0_hz ({self.f0_hz}) must be below fL_hz ({self.fL_hz})")
        half_lambda = SPEED_OF_LIGHT / (2.0 * self.f_c)
        defaults = {
            "a_bs_x_m": 25 * SPEED_OF_LIGHT / self.f_c,
            "a_bs_y_m": 25 * SPEED_OF_LIGHT / self.f_c,
            "a_irs_x_m": 50 * SPEED_OF_LIGHT / self.f_c,
            "a_irs_y_m": 50 * SPEED_OF_LIGHT / self.f_c,
            "d_bs_m": half_lambda,
            "d_irs_m": (1 + math.hypot(self.J1 - 1, self.J2 - 1)) * half_lambda,
        }
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
            elif not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be positive")
        if not (self.d_g_m > 0 and self.d_h_m > 0):
            raise ScenarioError("link distances must be positive")
        if self.kappa_abs_db_per_m < 0:
            raise ScenarioError("absorption coefficient must be non-negative")
        if not self.init_pitch_factor >= 1.0:
            raise ScenarioError("init_pitch_factor must be >= 1")
        self._check_initial_fit()

    def _check_initial_fit(self):
        for what, factor in (("baseline", 1.0), ("initial", self.init_pitch_factor)):
            try:
                bs, irs = self._grids(factor)
            except ValueError as exc:
                raise ScenarioError(f"cannot build the {what} grids: {exc}") from exc
            for label, layout, count in (("BS", bs, self.M), ("IRS", irs, self.K)):
                bad = validate_layout(layout)
                if bad:
                    rows, cols = grid_shape(count)
                    raise ScenarioError(
                        f"{label} {what} {rows}x{cols} grid does not fit its aperture: {bad[0]}")

    @property
    def f_c(self) -> float:
        return (self.f0_hz + self.fL_hz) / 2.0

    @property
    def J(self) -> int:
        return self.J1 * self.J2

    @property
    def element_pitch(self) -> float:
        """Spacing of elements inside one IRS subarray (half a center wavelength)."""
        return SPEED_OF_LIGHT / (2.0 * self.f_c)

    @property
    def link(self) -> LinkParams:
        return LinkParams(self.d_g_m, self.d_h_m, self.kappa_abs_db_per_m)

    @cached_property
    def tones(self) -> ToneTable:
        return build_tone_table(self.f0_hz, self.fL_hz, self.L, self.link)

    @property
    def bs_region(self) -> Region:
        return Region.from_size(self.a_bs_x_m, self.a_bs_y_m)

    @property
    def irs_region(self) -> Region:
        return Region.from_size(self.a_irs_x_m, self.a_irs_y_m)

    def _grids(self, factor: float):
        rows, cols = grid_shape(self.M)
        bs = ArrayLayout(make_uniform_grid(rows, cols, factor * self.d_bs_m), self.bs_region, self.d_bs_m)
        rows, cols = grid_shape(self.K)
        irs = SurfaceLayout(make_uniform_grid(rows, cols, factor * self.d_irs_m),
                            make_uniform_grid(self.J2, self.J1, self.element_pitch),
                            self.irs_region, self.d_irs_m)
        return bs, irs

    def baseline_layouts(self):
        """Fixed-position arrays: centered grids at exactly the minimum spacing."""
        return self._grids(1.0)

    def initial_layouts(self):
        """Optimizer start: the baseline grids stretched by ``init_pitch_factor``.

        A grid at exactly the minimum spacing puts every element on the
        boundary of its neighbours' linearized spacing constraints, so
        interior elements cannot move during the first sweeps.
        """
        return self._grids(self.init_pitch_factor)

    # ---- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
               if f.name not in ("angles", "solver")}
        out["angles"] = {f"{f.name}_rad": getattr(self.angles, f.name)
                         for f in dataclasses.fields(AngleSet)}
        out["solver"] = dataclasses.asdict(self.solver)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ScenarioError(f"unknown scenario keys: {', '.join(unknown)}")
        if "angles" in data:
            raw = dict(data["angles"])
            names = {f"{f.name}_rad": f.name for f in dataclasses.fields(AngleSet)}
            bad = sorted(set(raw) - set(names))
            if bad:
                raise ScenarioError(f"unknown angle keys: {', '.join(bad)}")
            base = dataclasses.asdict(DEFAULT_ANGLES)
            base.update({names[k]: float(v) for k, v in raw.items()})
            try:
                data["angles"] = AngleSet(**base)
            except ValueError as exc:
                raise ScenarioError(str(exc)) from exc
        if "solver" in data:
            raw = dict(data["solver"])
            bad = sorted(set(raw) - {f.name for f in dataclasses.fields(SolveOptions)})
            if bad:
                raise ScenarioError(f"unknown solver keys: {', '.join(bad)}")
            try:
                data["solver"] = SolveOptions(**raw)
            except ValueError as exc:
                raise ScenarioError(str(exc)) from exc
        return cls(**data)


PRESETS = {
    "paper": {},
    "desk": {"M": 8, "K": 32, "J1": 1, "J2": 1, "L": 32},
}


def preset(name: str) -> Scenario:
    try:
        return Scenario.from_dict(PRESETS[name])
    except KeyError:
        raise ScenarioError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    if not text.strip():
        return Scenario()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be a JSON object")
    return Scenario.from_dict(data)


def write_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")
