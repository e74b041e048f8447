"""Day-ahead HVAC on/off scheduling under ambient-temperature uncertainty.

Deterministic, scenario-based, robust and Wasserstein distributionally robust
formulations share one building model and one built-in MILP solver.
"""

from .distributions import (
    DiscreteDistribution,
    ForecastSeries,
    ScenarioSet,
    cdf_distance,
    discretize_forecast,
    forecast_distributions,
    sample_extreme,
    sample_regular,
    wasserstein_distance,
    worst_two_point,
)
from .evaluation import EvaluationReport, compare_methods, evaluate_one, evaluate_set
from .formulations import (
    DroConfig,
    InfeasibleScheduleError,
    MethodConfig,
    ProblemInstance,
    UncertaintyInterval,
    build_do,
    build_dro,
    build_ro,
    build_sp,
    dro_offsets,
    inner_worst_expectation,
    run_method,
    solve_method,
)
from .instances import instance_from_dict, intuitive_instance, practical_instance
from .milp import ModelSpec, Solution, brute_force_binary, solve_lp, solve_milp
from .model import (
    BuildingModel,
    ComfortBand,
    HorizonConfig,
    Schedule,
    TariffSchedule,
    check_min_updown,
    power_series,
    simulate_indoor,
    total_cost,
    unroll_affine,
)

__version__ = "0.1.0"

__all__ = [
    "BuildingModel",
    "ComfortBand",
    "DiscreteDistribution",
    "DroConfig",
    "EvaluationReport",
    "ForecastSeries",
    "HorizonConfig",
    "InfeasibleScheduleError",
    "MethodConfig",
    "ModelSpec",
    "ProblemInstance",
    "ScenarioSet",
    "Schedule",
    "Solution",
    "TariffSchedule",
    "UncertaintyInterval",
    "brute_force_binary",
    "build_do",
    "build_dro",
    "build_ro",
    "build_sp",
    "cdf_distance",
    "check_min_updown",
    "compare_methods",
    "discretize_forecast",
    "dro_offsets",
    "evaluate_one",
    "evaluate_set",
    "forecast_distributions",
    "inner_worst_expectation",
    "instance_from_dict",
    "intuitive_instance",
    "power_series",
    "practical_instance",
    "run_method",
    "sample_extreme",
    "sample_regular",
    "simulate_indoor",
    "solve_lp",
    "solve_method",
    "solve_milp",
    "total_cost",
    "unroll_affine",
    "wasserstein_distance",
    "worst_two_point",
]
