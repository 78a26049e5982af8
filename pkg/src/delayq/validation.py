"""Three-way agreement check between the analytic, numerical and Monte-Carlo engines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import ConfigError
from .model import ModelSpec
from .moment_engine import MomentTable, chi
from .multi_index import MultiIndex, indices_upto
from .simulator import estimate_joint_moment, simulate_paths
from .transient import Grid, default_grid, solve_all

__all__ = ["ValidationRow", "ValidationReport", "run_validation", "REL_TOL", "SE_TOL"]

REL_TOL = 1e-3
SE_TOL = 3.0


@dataclass(frozen=True)
class ValidationRow:
    n: MultiIndex
    chi: float
    m_tilde: float
    rel_err: float
    mc_estimate: float
    mc_se: float
    z_score: float

    @property
    def volterra_ok(self) -> bool:
        return self.rel_err <= REL_TOL

    @property
    def mc_ok(self) -> bool:
        return self.z_score <= SE_TOL

    @property
    def passed(self) -> bool:
        return self.volterra_ok and self.mc_ok

    def to_dict(self) -> dict:
        return {
            "n": list(self.n),
            "chi": self.chi,
            "M_tilde": self.m_tilde,
            "rel_err": self.rel_err,
            "mc_estimate": self.mc_estimate,
            "mc_se": self.mc_se,
            "z_score": self.z_score,
            "volterra_ok": self.volterra_ok,
            "mc_ok": self.mc_ok,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ValidationReport:
    rows: tuple
    t_sim: float
    reps: int
    seed: int
    grid: Grid = field(repr=False)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[ValidationRow]:
        return [r for r in self.rows if not r.passed]

    header = ("n", "chi", "M_tilde", "rel_err", "mc_estimate", "mc_se", "z_score", "volterra_ok", "mc_ok", "passed")

    def csv_rows(self):
        for r in self.rows:
            yield (
                ";".join(str(x) for x in r.n),
                r.chi,
                r.m_tilde,
                r.rel_err,
                r.mc_estimate,
                r.mc_se,
                r.z_score,
                r.volterra_ok,
                r.mc_ok,
                r.passed,
            )

    def to_dict(self) -> dict:
        return {
            "command": "validate",
            "passed": self.passed,
            "t_sim": self.t_sim,
            "t_max": (self.grid.size - 1) * self.grid.h,
            "h": self.grid.h,
            "reps": self.reps,
            "seed": self.seed,
            "rows": [r.to_dict() for r in self.rows],
        }


def run_validation(
    model: ModelSpec,
    upto: int,
    *,
    grid: Grid | None = None,
    t_sim: float | None = None,
    reps: int = 100_000,
    seed: int = 0,
    workers: int | None = None,
    chi_perturbation: Mapping | None = None,
) -> ValidationReport:
    """Compare ``chi_n``, ``M~_n(t_max)`` and a simulated ``M~_n(t_sim)`` for ``1 <= eta_n <= upto``.

    ``chi_perturbation`` maps indices to multiplicative factors applied to
    the analytic values; it exists to demonstrate that the check can fail.
    """
    if upto < 0:
        raise ConfigError("upto must be >= 0")
    if not model.has_common_exponential_delays():
        raise ConfigError("validation needs exponential delays with a common rate")
    grid = grid or default_grid(model)
    if t_sim is None:
        t_sim = 30.0 / model.common_exponential_rate()
    indices = indices_upto(model.k, upto)
    if not indices:
        return ValidationReport((), t_sim, reps, seed, grid)
    perturb = {MultiIndex(k): float(v) for k, v in (chi_perturbation or {}).items()}
    table = MomentTable(model)
    solutions: dict = {}
    for n in sorted(indices, key=lambda m: -m.eta):
        if n not in solutions:
            solutions.update(solve_all(n, model, grid))
    paths = simulate_paths(model, t_sim, reps, seed, workers=workers)
    rows = []
    for n in indices:
        c = chi(n, table) * perturb.get(n, 1.0)
        m = solutions[n].last
        est = estimate_joint_moment(model, n, t_sim, reps, seed, paths=paths)
        rel = abs(m - c) / abs(c) if c != 0 else abs(m)
        z = abs(est.estimate - c) / est.std_error if est.std_error > 0 else (0.0 if est.estimate == c else math.inf)
        rows.append(ValidationRow(n, c, m, rel, est.estimate, est.std_error, z))
    return ValidationReport(tuple(rows), t_sim, reps, seed, grid)
