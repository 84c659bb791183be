"""Pursuit-evasion linear-quadratic games with prospect-theoretic players."""

from .capturability import check_capture_conditions, check_rational_capture, search_bounds
from .engine import (SolverOptions, decay_check, monte_carlo_J, nash_spot_check,
                     performance_stats, simulate, solve_fixed_point, y_hat)
from .equilibrium import GameConfig, classify_scenario, solve_equilibrium
from .prospect import CptParams, chi, cpt_index, cpt_value_direct, psi

__all__ = [
    "CptParams", "GameConfig", "SolverOptions", "check_capture_conditions",
    "check_rational_capture", "chi", "classify_scenario", "cpt_index", "cpt_value_direct",
    "decay_check", "monte_carlo_J", "nash_spot_check", "performance_stats", "psi", "search_bounds", "simulate",
    "solve_equilibrium", "solve_fixed_point", "y_hat",
]
