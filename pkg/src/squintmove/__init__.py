"""Beam-squint suppression for IRS-aided wideband THz links by moving the
BS antennas and IRS subarrays."""
from .channel import DEFAULT_ANGLES, SPEED_OF_LIGHT, AngleSet, LinkParams, ToneTable, build_tone_table, path_loss
from .cli import Comparison, compare, run
from .gain import GainProfile, gain_profile, min_band_power, reference_power
from .geometry import ArrayLayout, Region, SurfaceLayout, make_uniform_grid, validate_layout
from .optimizer import SolveReport, bcd_solve, has_converged, update_ma, update_subarray
from .scenario import PRESETS, Scenario, ScenarioError, SolveOptions, load_scenario, preset, write_scenario
from .subsolver import SubproblemSpec, brute_force_oracle, solve
from .surrogate import bs_surrogates, irs_surrogates

__version__ = "0.1.0"
