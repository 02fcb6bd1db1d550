"""Alternating position updates for the max-min received power problem.

One outer iteration moves every BS antenna in turn, then every IRS
subarray, each time solving the convexified single-element program built
around its current position.  A move is kept only if the true band
minimum does not drop, so the objective trace is monotone.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .channel import AngleSet, ToneTable
from .gain import gain_profile, min_band_power, reference_power
from .geometry import SOLVER_SLACK, ArrayLayout, SurfaceLayout, validate_layout
from .scenario import Scenario, SolveOptions
from .subsolver import SubproblemSpec, halfplanes_for, solve
from .surrogate import bs_surrogates, irs_surrogates

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MoveRecord:
    sweep: int
    kind: str  # "bs" or "irs"
    index: int
    old: Tuple[float, float]
    new: Tuple[float, float]
    delta_objective: float
    accepted: bool


@dataclass
class SolveReport:
    objective_trace: List[float]
    bs: ArrayLayout
    irs: SurfaceLayout
    iterations_used: int
    converged: bool
    reference_power: float
    moves: List[MoveRecord] = field(default_factory=list)

    @property
    def normalized_trace(self) -> np.ndarray:
        return np.asarray(self.objective_trace) / self.reference_power


def band_minimum(bs, irs, tones, angles) -> float:
    return min_band_power(gain_profile(bs, irs, tones, angles))[1]


def has_converged(trace, opts: SolveOptions, scale: float = 1.0) -> bool:
    """Stop when the last outer iteration gained less than ``rel_tol``.

    ``scale`` maps raw powers to O(1) numbers (the solver passes the inverse
    of the squint-free center-tone power), so the test is
    ``(k_n - k_{n-1}) * scale <= rel_tol * (1 + k_{n-1} * scale)``.
    """
    if len(trace) < 2:
        raise ValueError("convergence needs at least two trace entries")
    if len(trace) - 1 >= opts.max_outer_iters:
        return True
    prev, last = trace[-2] * scale, trace[-1] * scale
    return last - prev <= opts.rel_tol * (1.0 + prev)


def _accept(kind, index, sweep, old_layout, new_layout, old_obj, tones, angles, bs, irs):
    bad = validate_layout(new_layout, slack=SOLVER_SLACK)
    if bad:
        log.debug("%s %d: rejected infeasible move (%s)", kind, index, bad[0])
        return False, old_obj
    new_obj = band_minimum(bs, irs, tones, angles)
    return new_obj >= old_obj, new_obj


def update_ma(m: int, bs: ArrayLayout, irs: SurfaceLayout, tones: ToneTable, angles: AngleSet,
              tol: float = 1e-6, sweep: int = 0, objective: Optional[float] = None):
    """Re-position antenna ``m``; returns ``(layout, objective, record)``."""
    if objective is None:
        objective = band_minimum(bs, irs, tones, angles)
    anchor = bs.positions[m]
    spec = SubproblemSpec(
        bs_surrogates(m, bs, irs, tones, angles),
        bs.region,
        halfplanes_for(anchor, np.delete(bs.positions, m, axis=0), bs.min_spacing),
    )
    sol = solve(spec, tol)
    if np.array_equal(sol.point, anchor):
        return bs, objective, MoveRecord(sweep, "bs", m, tuple(anchor), tuple(anchor), 0.0, False)
    cand = bs.with_position(m, sol.point)
    ok, new_obj = _accept("bs", m, sweep, bs, cand, objective, tones, angles, cand, irs)
    rec = MoveRecord(sweep, "bs", m, tuple(anchor), tuple(sol.point), new_obj - objective, ok)
    return (cand, new_obj, rec) if ok else (bs, objective, rec)


def update_subarray(k: int, bs: ArrayLayout, irs: SurfaceLayout, tones: ToneTable, angles: AngleSet,
                    tol: float = 1e-6, sweep: int = 0, objective: Optional[float] = None):
    """Re-position subarray ``k``; the box is shrunk so all its elements stay on the surface."""
    if objective is None:
        objective = band_minimum(bs, irs, tones, angles)
    anchor = irs.centers[k]
    spec = SubproblemSpec(
        irs_surrogates(k, bs, irs, tones, angles),
        irs.center_region(),
        halfplanes_for(anchor, np.delete(irs.centers, k, axis=0), irs.min_spacing),
    )
    sol = solve(spec, tol)
    if np.array_equal(sol.point, anchor):
        return irs, objective, MoveRecord(sweep, "irs", k, tuple(anchor), tuple(anchor), 0.0, False)
    cand = irs.with_center(k, sol.point)
    ok, new_obj = _accept("irs", k, sweep, irs, cand, objective, tones, angles, bs, cand)
    rec = MoveRecord(sweep, "irs", k, tuple(anchor), tuple(sol.point), new_obj - objective, ok)
    return (cand, new_obj, rec) if ok else (irs, objective, rec)


def bcd_solve(scenario: Scenario, bs: Optional[ArrayLayout] = None, irs: Optional[SurfaceLayout] = None,
              opts: Optional[SolveOptions] = None, callback=None) -> SolveReport:
    """Run the alternating MM updates from a feasible start until converged.

    ``callback(sweep, bs, irs, objective)`` is invoked after every outer
    iteration if given.
    """
    if bs is None or irs is None:
        init_bs, init_irs = scenario.initial_layouts()
        bs = init_bs if bs is None else bs
        irs = init_irs if irs is None else irs
    opts = scenario.solver if opts is None else opts
    for label, layout in (("BS", bs), ("IRS", irs)):
        bad = validate_layout(layout)
        if bad:
            raise ValueError(f"infeasible initial {label} layout: {bad[0]}")

    tones, angles = scenario.tones, scenario.angles
    ref = reference_power(tones, bs.count, irs.count * irs.elements_per_subarray)
    objective = band_minimum(bs, irs, tones, angles)
    trace = [objective]
    moves: List[MoveRecord] = []
    converged = False
    sweep = 0
    while not converged:
        sweep += 1
        for m in range(bs.count):
            bs, objective, rec = update_ma(m, bs, irs, tones, angles, opts.subsolver_tol, sweep, objective)
            moves.append(rec)
        for k in range(irs.count):
            irs, objective, rec = update_subarray(k, bs, irs, tones, angles, opts.subsolver_tol, sweep, objective)
            moves.append(rec)
        trace.append(objective)
        log.info("sweep %d: min-band power %.6e (normalized %.9f)", sweep, objective, objective / ref)
        if callback is not None:
            callback(sweep, bs, irs, objective)
        converged = has_converged(trace, opts, 1.0 / ref)
    hit_cap = sweep >= opts.max_outer_iters and not (
        trace[-1] / ref - trace[-2] / ref <= opts.rel_tol * (1 + trace[-2] / ref))
    return SolveReport(trace, bs, irs, sweep, not hit_cap, ref, moves)
