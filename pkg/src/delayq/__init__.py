"""Moments, bounds, expansions and simulation of discounted delayed batch renewal processes."""

from .distributions import (
    Deterministic,
    Erlang,
    Exponential,
    HazardClass,
    Hyperexponential,
    Uniform,
    density_sup,
    laplace,
    omega_bar,
)
from .errors import DelayqError
from .expansion import expansion_coeffs, expansion_eval, find_roots, v_expansion
from .model import ModelSpec, load_model
from .moment_engine import MomentTable, chi, chi_first_general_delay, covariance_pair, d_value, mgf_series
from .multi_index import ExplicitTable, IndependentMarginals, MultiIndex, Multinomial
from .simulator import estimate_joint_moment, estimate_workload, simulate_paths
from .transient import Grid, bound_R, bound_transient, solve_renewal
from .workload import little_generalized, workload_cov_limit, workload_mean_limit

__version__ = "0.1.0"
