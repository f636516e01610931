"""Monte Carlo lab for Poisson process limits of runs and Voronoi radii."""
from .convergence import (
    IntervalRing,
    TargetLaw,
    consecutive_ratio_statistic,
    count_distribution,
    ks_distance,
    poisson_process_gof,
    sandwich_bound_check,
)
from .errors import *  # noqa: F401,F403
from .experiments import ExperimentConfig, emit_report, run_experiment
from .measure import (
    DensityModel,
    Window,
    ball_measure,
    constant_density,
    density_from_config,
    invert_ball_measure,
    linear_density,
    piecewise_linear_density,
    quadratic_density,
    step_density,
    threshold_radii,
    unit_ball_volume,
    window_mass,
)
from .point_process import PointConfig, restrict, sample_binomial, sample_coupled_sandwich, sample_poisson
from .rescaled import RescaledSample
from .runs import BernoulliModel, build_run_process, sample_runs, simulate_bernoulli_array
from .tessellation import (
    circumradius_process,
    coupled_min_statistics,
    extreme_statistics,
    inradius_process,
    intensity_estimate,
)
from .voronoi import alpha2, circumradius, estimate_p_k, inradius, is_cell_bounded

__version__ = "0.1.0"
