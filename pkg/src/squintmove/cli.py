"""Command-line driver: run the baseline and/or the optimizer, write CSVs.

Artifacts written to ``--out``:

* ``convergence.csv``  iteration, min_band_power, normalized_min_band_gain
* ``amplitude.csv``    variant, tone_index, f_hz, g_bs, g_irs, amplitude,
  normalized_amplitude
* ``layouts.csv``      variant, array, index, x_m, y_m
* ``scenario.json``    the fully resolved scenario
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .gain import GainProfile, gain_profile, min_band_power, reference_power
from .optimizer import SolveReport, bcd_solve
from .scenario import PRESETS, Scenario, ScenarioError, SolveOptions, load_scenario, preset, write_scenario
from .subsolver import InfeasibleSubproblemError

log = logging.getLogger("squintmove")


def _fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class BandStats:
    min: float
    max: float
    spread: float  # (max - min) / max of the normalized gain


@dataclass(frozen=True)
class Comparison:
    ratio: np.ndarray  # per-tone amplitude of b over a
    a: BandStats
    b: BandStats
    spread_ratio: float  # b.spread / a.spread


def band_stats(profile: GainProfile) -> BandStats:
    g = profile.normalized_gain
    hi, lo = float(np.max(g)), float(np.min(g))
    return BandStats(lo, hi, (hi - lo) / hi if hi > 0 else 0.0)


def compare(profile_a: GainProfile, profile_b: GainProfile) -> Comparison:
    if len(profile_a) != len(profile_b) or (
            profile_a.freqs is not None and profile_b.freqs is not None
            and not np.array_equal(profile_a.freqs, profile_b.freqs)):
        raise ValueError("profiles are defined on different tone grids")
    a, b = band_stats(profile_a), band_stats(profile_b)
    if a.spread > 0:
        spread_ratio = b.spread / a.spread
    else:
        spread_ratio = 1.0 if b.spread == 0 else math.inf
    return Comparison(profile_b.amplitude / profile_a.amplitude, a, b, spread_ratio)


@dataclass
class RunResult:
    profiles: Dict[str, GainProfile]
    report: Optional[SolveReport]
    reference_power: float
    out_dir: Path


def _write_amplitude(path: Path, scenario: Scenario, profiles: Dict[str, GainProfile], ref_amp: float):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "tone_index", "f_hz", "g_bs", "g_irs", "amplitude", "normalized_amplitude"])
        for name, p in profiles.items():
            for l in range(len(p)):
                w.writerow([name, l, _fmt(scenario.tones.freqs[l]), _fmt(p.g_bs[l]), _fmt(p.g_irs[l]),
                            _fmt(p.amplitude[l]), _fmt(p.amplitude[l] / ref_amp)])


def _write_layouts(path: Path, layouts: Dict[str, tuple]):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "array", "index", "x_m", "y_m"])
        for name, (bs, irs) in layouts.items():
            for i, (x, y) in enumerate(bs.positions):
                w.writerow([name, "bs", i, _fmt(x), _fmt(y)])
            for k, (x, y) in enumerate(irs.centers):
                w.writerow([name, "irs", k, _fmt(x), _fmt(y)])


def _write_convergence(path: Path, trace, ref: float):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "min_band_power", "normalized_min_band_gain"])
        for n, v in enumerate(trace):
            w.writerow([n, _fmt(v), _fmt(math.sqrt(v / ref))])


def run(scenario: Scenario, mode: str = "both", out_dir="out") -> RunResult:
    """Evaluate the baseline and/or optimize, then write every artifact."""
    if mode not in ("optimize", "baseline", "both"):
        raise ValueError(f"unknown mode {mode!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tones, angles = scenario.tones, scenario.angles
    N = scenario.K * scenario.J
    ref = reference_power(tones, scenario.M, N)
    ref_amp = tones.alpha_center * scenario.M * N

    profiles: Dict[str, GainProfile] = {}
    layouts: Dict[str, tuple] = {}
    if mode in ("baseline", "both"):
        layouts["fpa"] = scenario.baseline_layouts()
        profiles["fpa"] = gain_profile(*layouts["fpa"], tones, angles)
    report = None
    if mode in ("optimize", "both"):
        init = scenario.initial_layouts()
        if scenario.init_pitch_factor != 1.0 or mode == "optimize":
            layouts["initial"] = init
            profiles["initial"] = gain_profile(*init, tones, angles)
        report = bcd_solve(scenario, *init)
        layouts["optimized"] = (report.bs, report.irs)
        profiles["optimized"] = gain_profile(report.bs, report.irs, tones, angles)
        _write_convergence(out / "convergence.csv", report.objective_trace, ref)

    _write_amplitude(out / "amplitude.csv", scenario, profiles, ref_amp)
    _write_layouts(out / "layouts.csv", layouts)
    write_scenario(scenario, out / "scenario.json")
    return RunResult(profiles, report, ref, out)


def _summary(result: RunResult, normalize: bool) -> str:
    unit = result.reference_power if normalize else 1.0
    label = "normalized min-band power" if normalize else "min-band power"
    parts = []
    before = result.profiles.get("fpa") or result.profiles.get("initial")
    if before is not None:
        parts.append(f"{label} before {min_band_power(before)[1] / unit:.6e}")
    if result.report is not None:
        after = result.report.objective_trace[-1]
        parts.append(f"after {after / unit:.6e}")
        parts.append(f"iterations {result.report.iterations_used}")
        if "fpa" in result.profiles:
            cmp = compare(result.profiles["fpa"], result.profiles["optimized"])
            parts.append(f"gain spread {cmp.a.spread:.3e} -> {cmp.b.spread:.3e}")
    return "; ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="squintmove", description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", type=Path, help="JSON scenario file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="named scenario (default: desk)")
    p.add_argument("--mode", choices=["optimize", "baseline", "both"], default="both")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--max-iters", type=int, help="override solver max_outer_iters")
    p.add_argument("--rel-tol", type=float, help="override solver rel_tol")
    p.add_argument("--normalize", action="store_true",
                   help="report powers relative to the squint-free center-tone power")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = load_scenario(args.scenario) if args.scenario else preset(args.preset or "desk")
        solver = scenario.solver
        if args.max_iters is not None or args.rel_tol is not None:
            solver = SolveOptions(
                rel_tol=solver.rel_tol if args.rel_tol is None else args.rel_tol,
                max_outer_iters=solver.max_outer_iters if args.max_iters is None else args.max_iters,
                subsolver_tol=solver.subsolver_tol)
        if solver != scenario.solver or args.normalize:
            scenario = dataclasses.replace(scenario, solver=solver,
                                           normalize=scenario.normalize or args.normalize)
        result = run(scenario, args.mode, args.out)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"squintmove: error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleSubproblemError as exc:
        print(f"squintmove: solver failure: {exc}", file=sys.stderr)
        return 1
    print(_summary(result, scenario.normalize))
    return 0


if __name__ == "__main__":
    sys.exit(main())
