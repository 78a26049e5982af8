"""Limiting workload of the G/M/inf queue and the discounted form of Little's law."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Exponential
from .errors import ScopeError
from .model import ModelSpec
from .moment_engine import chi_first_general_delay
from .transient import Grid, solve_renewal

__all__ = [
    "WorkloadLimits",
    "workload_limits",
    "workload_mean_limit",
    "workload_cov_limit",
    "little_generalized",
    "workload_mean_fd",
]


def _check_single_unit(model: ModelSpec) -> None:
    if model.k != 1:
        raise ScopeError(f"workload results need a single type, model has k={model.k}")
    if not model.batch.is_unit():
        raise ScopeError("workload results need unit batches (X = 1)")


def _exponential_rate(model: ModelSpec) -> float:
    _check_single_unit(model)
    delay = model.delays[0]
    if not isinstance(delay, Exponential):
        raise ScopeError(f"closed-form workload needs exponential service, got {delay.family}")
    return delay.rate


def workload_mean_limit(model: ModelSpec) -> float:
    """``lim E[D(t)] = 1 / (mu^2 E[tau])``, which also equals ``E[L^2] / (2 E[tau])``."""
    mu = _exponential_rate(model)
    e1 = model.mean_interarrival
    value = 1.0 / (mu**2 * e1)
    alt = model.delays[0].second_moment / (2 * e1)
    if not math.isclose(value, alt, rel_tol=1e-12):
        raise AssertionError(f"workload limits disagree: {value!r} vs {alt!r}")
    return value


def workload_cov_limit(model: ModelSpec) -> float:
    """``lim Cov[D(t), Z(t)]`` with ``Z`` the undiscounted queue size."""
    mu = _exponential_rate(model)
    e1 = model.mean_interarrival
    lt = float(np.real(model.interarrival.laplace(mu)))
    return (1.0 + lt / (1.0 - lt) - 1.0 / (mu * e1)) / (mu**2 * e1)


@dataclass(frozen=True)
class WorkloadLimits:
    mean_limit: float
    cov_limit: float

    def to_dict(self) -> dict:
        return {"mean_limit": self.mean_limit, "cov_limit": self.cov_limit}


def workload_limits(model: ModelSpec) -> WorkloadLimits:
    return WorkloadLimits(workload_mean_limit(model), workload_cov_limit(model))


def little_generalized(model: ModelSpec) -> float:
    """Arrival rate times expected discounted horizon: ``Pr(L > E_delta) / (delta E[tau])``.

    ``E_delta`` is an independent exponential clock of rate ``delta``, so
    ``Pr(L > E_delta) = delta int_0^inf exp(-delta s) Pr(L > s) ds``.
    """
    _check_single_unit(model)
    delta = model.delta
    if not delta > 0:
        raise ScopeError("the discounted Little identity needs delta > 0")
    prob = delta * model.delays[0].discounted_survival_integral(delta)
    value = prob / delta / model.mean_interarrival
    ref = chi_first_general_delay(0, model)
    if not math.isclose(value, ref, rel_tol=1e-12):
        raise AssertionError(f"Little identity {value!r} differs from first-moment limit {ref!r}")
    return value


def workload_mean_fd(model: ModelSpec, t: float, *, eps: float = 1e-4, grid: Grid | None = None) -> float:
    """``E[D(t)]`` as ``-d/d delta`` of the rescaled first moment at ``delta = 0``.

    Central difference at ``delta = +-eps`` on the transient solver.  The
    rescaled sum weighs each customer by ``exp(-delta (T + L - t))``, whose
    derivative at zero is minus its residual time.
    """
    _check_single_unit(model)
    if grid is None:
        grid = Grid(1e-3 * model.mean_interarrival, t)
    if t > (grid.size - 1) * grid.h + 1e-12:
        raise ValueError(f"t={t} lies beyond the grid horizon")
    plus = solve_renewal((1,), model.with_delta(eps), grid).at(t)
    minus = solve_renewal((1,), model.with_delta(-eps), grid).at(t)
    return float(-(plus - minus) / (2 * eps))
