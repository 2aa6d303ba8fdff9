"""Experiments: windowed plateaus, scaling fits and normal-form checks."""

from .asymptotics import asymptotic_comparison, fit_harmonic
from .bounds import RandomFunction, norm_bound_checks, random_function
from .degenerate import degenerate_experiment, i1_amplitude
from .fitting import ScalingFit, fit_scaling
from .report import Check, Report, Table
from .runs import (ExperimentConfig, PlateauRun, ball_start, initial_state, cold_start,
                   plateau_sweep, run_plateau)
from .scaling import dissipation_experiment, scaling_experiment, symmetry_experiment
from .transformed import (coordinate_scalings, decoupled_comparison,
                          dissipation_decomposition, m1_window_integrals,
                          normal_form_for, p1_approximation, stability_monitor,
                          window_integrals)
from .verify import algebra_properties, verify_chain
from .windows import (PlateauNotFound, UndersampledError, WindowSeries,
                      detect_quasi_stationary, running_median, series_from_stats,
                      window_maxima)

__all__ = [
    "asymptotic_comparison", "fit_harmonic", "RandomFunction", "norm_bound_checks",
    "random_function", "degenerate_experiment", "i1_amplitude", "ScalingFit",
    "fit_scaling", "Check", "Report", "Table", "ExperimentConfig", "PlateauRun",
    "ball_start", "initial_state", "cold_start", "plateau_sweep", "run_plateau",
    "dissipation_experiment", "scaling_experiment", "symmetry_experiment",
    "coordinate_scalings", "decoupled_comparison", "dissipation_decomposition",
    "m1_window_integrals", "normal_form_for", "p1_approximation", "stability_monitor",
    "window_integrals", "PlateauNotFound", "UndersampledError", "WindowSeries",
    "detect_quasi_stationary", "running_median", "series_from_stats", "window_maxima",
    "algebra_properties", "verify_chain",
]
