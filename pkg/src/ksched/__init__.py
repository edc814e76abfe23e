"""Budgeted sensor scheduling for Kalman filtering.

Greedy and randomized-greedy selection of measurement subsets that minimize
the filter's mean squared error, with curvature-based suboptimality
certificates, sampling diagnostics, Monte-Carlo benchmark runners, and a
multi-object radar tracking scenario.
"""

from .curvature import (
    ApproxFactor,
    CurvatureReport,
    aggregated_curvature,
    approx_factor,
    condition_number_bound,
    curvature_bound,
    curvature_bruteforce,
    curvature_report,
    mse_bound,
    phi_probabilistic,
    subset_tables,
)
from .experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentReport,
    run_budget_sweep,
    run_experiment,
    run_histogram,
    run_scaling,
    run_tracking,
)
from .kalman import (
    FilterState,
    RunResult,
    StepRecord,
    predict,
    run_filter,
    update,
)
from .model import (
    FORMAT_VERSION,
    SELECTION_FORMAT_VERSION,
    InstanceFormatError,
    MeasurementGeneratorSpec,
    ParameterError,
    ProblemInstance,
    generate_instance,
    load_instance,
    load_selection,
    predicted_prior,
    save_instance,
    save_selection,
)
from .objective import (
    FisherState,
    NumericalError,
    add_sensor,
    f_value,
    marginal_gain,
    score_selection,
)
from .rng import derive_seed, seed_sequence, substream
from .selection import (
    AllSensorsPolicy,
    EnumerationCapError,
    ExhaustivePolicy,
    GreedyPolicy,
    Policy,
    RandomPolicy,
    RandomizedGreedyPolicy,
    SamplingConfig,
    SelectionResult,
    beta_exponent,
    exact_hit_probability,
    exhaustive_select,
    greedy_select,
    hit_probability_lower_bound,
    make_policy,
    random_select,
    randomized_greedy_select,
    sample_size,
    sampling_hit_rate,
)
from .uav import (
    Beliefs,
    RadarMeasurement,
    ScenarioConfig,
    WorldState,
    calibrate_detection_radius,
    ekf_step,
    init_beliefs,
    init_world,
    measurement_jacobians,
    run_uav_experiment,
    sense,
    step_world,
    wrap_angle,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxFactor",
    "AllSensorsPolicy",
    "Beliefs",
    "CSV_COLUMNS",
    "CurvatureReport",
    "EnumerationCapError",
    "ExhaustivePolicy",
    "ExperimentConfig",
    "ExperimentReport",
    "FORMAT_VERSION",
    "FilterState",
    "FisherState",
    "GreedyPolicy",
    "InstanceFormatError",
    "MeasurementGeneratorSpec",
    "NumericalError",
    "ParameterError",
    "Policy",
    "ProblemInstance",
    "RadarMeasurement",
    "RandomPolicy",
    "RandomizedGreedyPolicy",
    "RunResult",
    "SELECTION_FORMAT_VERSION",
    "SamplingConfig",
    "ScenarioConfig",
    "SelectionResult",
    "StepRecord",
    "WorldState",
    "add_sensor",
    "aggregated_curvature",
    "approx_factor",
    "beta_exponent",
    "calibrate_detection_radius",
    "condition_number_bound",
    "curvature_bound",
    "curvature_bruteforce",
    "curvature_report",
    "derive_seed",
    "ekf_step",
    "exact_hit_probability",
    "exhaustive_select",
    "f_value",
    "generate_instance",
    "greedy_select",
    "hit_probability_lower_bound",
    "init_beliefs",
    "init_world",
    "load_instance",
    "load_selection",
    "make_policy",
    "marginal_gain",
    "measurement_jacobians",
    "mse_bound",
    "phi_probabilistic",
    "predict",
    "predicted_prior",
    "random_select",
    "randomized_greedy_select",
    "run_budget_sweep",
    "run_experiment",
    "run_filter",
    "run_histogram",
    "run_scaling",
    "run_tracking",
    "run_uav_experiment",
    "sample_size",
    "sampling_hit_rate",
    "save_instance",
    "save_selection",
    "score_selection",
    "seed_sequence",
    "sense",
    "step_world",
    "subset_tables",
    "substream",
    "update",
    "wrap_angle",
]
