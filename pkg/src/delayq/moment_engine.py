"""Limiting joint moments of the rescaled process under exponential delays.

The limits ``chi_n = lim_t exp(eta_n delta t) E[prod Z_j(t)^{n_j}]`` are
computed from the Laplace-transform recursion on ``D_n(j)``, the transform
of ``b~_n`` at ``j mu``.  A :class:`MomentTable` memoizes both ``chi`` and
``D`` so that repeated queries reuse earlier work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, DivergenceError, RadiusError
from .model import ModelSpec
from .multi_index import MultiIndex, binom_product, indices_upto, iterate_below, support_set

__all__ = [
    "MomentTable",
    "CovarianceResult",
    "MgfResult",
    "coeff_B",
    "d_value",
    "chi",
    "chi_table",
    "chi_first_general_delay",
    "chi11_closed_form",
    "covariance_pair",
    "mgf_series",
]

# 1 - L(s) below this is treated as a vanished denominator
_DIVERGENCE_FLOOR = 1e-300


def _as_index(n: Sequence[int], k: int) -> MultiIndex:
    n = MultiIndex(n)
    if len(n) != k:
        raise DimensionError(f"index {tuple(n)} has length {len(n)} but the model has k={k}")
    return n


def coeff_B(l: Sequence[int], n: Sequence[int], model: ModelSpec) -> float:
    """``binom(n, l) E[X^(n-l)] prod_{j in C_l} mu / (mu + (n_j - l_j) delta)``."""
    mu = model.common_exponential_rate()
    l, n = _as_index(l, model.k), _as_index(n, model.k)
    support = support_set(l, n)
    factor = math.prod(mu / (mu + (n[j] - l[j]) * model.delta) for j in sorted(support))
    return binom_product(l, n) * model.batch.moment(n - l) * factor


@dataclass
class MomentTable:
    """Memo of ``chi_n`` and ``D_n(j)`` for one model."""

    model: ModelSpec
    chi: dict = field(default_factory=dict)
    d_table: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mu = self.model.common_exponential_rate()
        if self.mu + self.model.delta <= 0:
            raise DivergenceError("mu + delta must be positive")
        self._b: dict = {}
        self._lt: dict = {}
        self.chi.setdefault(MultiIndex.zero(self.model.k), 1.0)

    def B(self, l: MultiIndex, n: MultiIndex) -> float:
        key = (l, n)
        if key not in self._b:
            self._b[key] = coeff_B(l, n, self.model)
        return self._b[key]

    def arrival_transform(self, j: int) -> float:
        """``L^tau(j mu)``, cached by the integer multiple ``j``."""
        if j not in self._lt:
            self._lt[j] = float(np.real(self.model.interarrival.laplace(j * self.mu)))
        return self._lt[j]

    def one_minus_transform(self, j: int) -> float:
        gap = 1.0 - self.arrival_transform(j)
        if not gap > _DIVERGENCE_FLOOR:
            raise DivergenceError(f"1 - L({j} mu) = {gap!r} vanished")
        return gap


def d_value(n: Sequence[int], j: int, table: MomentTable) -> float:
    """``D_n(j)``, the Laplace transform of ``b~_n`` at ``j mu``."""
    n = _as_index(n, table.model.k)
    if n.eta < 1:
        raise ValueError("D_n(j) needs eta_n >= 1")
    if j < 1:
        raise ValueError("D_n(j) needs j >= 1")
    key = (n, j)
    cached = table.d_table.get(key)
    if cached is not None:
        return cached
    mu = table.mu
    lt = table.arrival_transform(j)
    zero = MultiIndex.zero(n.k)
    terms = [table.B(zero, n) * lt / ((j + len(support_set(zero, n))) * mu)]
    for l in iterate_below(n):
        if l.eta == 0:
            continue
        c = len(support_set(l, n))
        terms.append(table.B(l, n) * lt / table.one_minus_transform(j + c) * d_value(l, j + c, table))
    value = math.fsum(terms)
    table.d_table[key] = value
    return value


def chi(n: Sequence[int], table: MomentTable) -> float:
    """Limiting rescaled joint moment ``chi_n``."""
    n = _as_index(n, table.model.k)
    cached = table.chi.get(n)
    if cached is not None:
        return cached
    mu = table.mu
    zero = MultiIndex.zero(n.k)
    terms = [table.B(zero, n) / (len(support_set(zero, n)) * mu)]
    for l in iterate_below(n):
        if l.eta == 0:
            continue
        c = len(support_set(l, n))
        terms.append(table.B(l, n) * d_value(l, c, table) / table.one_minus_transform(c))
    value = math.fsum(terms) / table.model.mean_interarrival
    table.chi[n] = value
    return value


def chi_table(table: MomentTable, upto: int) -> list[tuple[MultiIndex, float]]:
    """``chi_n`` for every ``n`` with ``1 <= eta_n <= upto``."""
    return [(n, chi(n, table)) for n in indices_upto(table.model.k, upto)]


def chi_first_general_delay(i: int, model: ModelSpec) -> float:
    """First-order limit ``E[X_i] int_0^inf exp(-delta x) Pr(L_i > x) dx / E[tau]`` for any delay law.

    ``i`` is the 0-based type index.
    """
    if not 0 <= i < model.k:
        raise DimensionError(f"type {i} outside 0..{model.k - 1}")
    ex = model.batch.moment(MultiIndex.unit(i, model.k))
    integral = model.delays[i].discounted_survival_integral(model.delta)
    return ex * integral / model.mean_interarrival


def chi11_closed_form(model: ModelSpec, *, halved_cross_term: bool = False) -> float:
    """Closed form of ``chi_(1,1)`` for two types with a common exponential delay.

    The cross term collects one contribution from each of ``l = (1,0)`` and
    ``l = (0,1)``, so its weight is ``E[X_1] E[X_2]``.  ``halved_cross_term``
    uses half that weight; it exists only so the discrepancy can be shown.
    """
    if model.k != 2:
        raise DimensionError(f"closed form needs k=2, model has k={model.k}")
    mu, delta = model.common_exponential_rate(), model.delta
    batch = model.batch
    ex1, ex2 = batch.moment((1, 0)), batch.moment((0, 1))
    ex12 = batch.moment((1, 1))
    lt = float(model.interarrival.laplace(mu))
    cross = ex1 * ex2 / 2 if halved_cross_term else ex1 * ex2
    bracket = ex12 / 2 + cross * lt / (1 - lt)
    return mu / (mu + delta) ** 2 * bracket / model.mean_interarrival


@dataclass(frozen=True)
class CovarianceResult:
    chi11: float
    chi11_closed: float
    covariance: float


def covariance_pair(table: MomentTable) -> CovarianceResult:
    """Limiting covariance ``chi_(1,1) - chi_(1,0) chi_(0,1)`` of the two rescaled types."""
    model = table.model
    if model.k != 2:
        raise DimensionError(f"covariance pair needs k=2, model has k={model.k}")
    c11 = chi((1, 1), table)
    closed = chi11_closed_form(model)
    if not math.isclose(c11, closed, rel_tol=1e-12, abs_tol=1e-300):
        raise AssertionError(f"recursion gives chi_(1,1)={c11!r}, closed form {closed!r}")
    cov = c11 - chi((1, 0), table) * chi((0, 1), table)
    return CovarianceResult(c11, closed, cov)


@dataclass(frozen=True)
class MgfResult:
    value: float
    tail_bound: float
    order: int


def _majorant_tail(s: float, growth: float, scale: float, order: int) -> float:
    """Bound on ``sum_{N > order} h_N s^N`` for ``h(s) = 1 / (1 - growth (exp(scale s) - 1))``.

    Cauchy's estimate ``h_N <= h(r) / r^N`` on the real circle of radius
    ``r`` inside the radius of convergence, optimized over a grid of ``r``.
    """
    if s == 0.0:
        return 0.0
    rho = math.log1p(1.0 / growth) / scale
    if s >= rho:
        return math.inf
    best = math.inf
    for r in np.linspace(s, rho, 402)[1:-1]:
        h = 1.0 / (1.0 - growth * math.expm1(scale * r))
        ratio = s / r
        best = min(best, h * ratio ** (order + 1) / (1.0 - ratio))
    return best


def mgf_series(q: Sequence[float], table: MomentTable, max_order: int = 10) -> MgfResult:
    """Truncated series ``sum_n prod q_i^{n_i} / n_i! chi_n`` over ``eta_n <= max_order``.

    The tail bound uses ``chi_n <= R_n / E[tau]`` and a coefficientwise
    majorant of the ``R_n`` recursion, which needs an almost-sure bound on
    the batch entries.  :class:`RadiusError` is raised when that bound is
    unavailable or the tail exceeds ``1e-6``.
    """
    from .distributions import density_sup

    model = table.model
    q = np.asarray(q, dtype=float)
    if q.shape != (model.k,):
        raise DimensionError(f"q must have {model.k} entries")
    terms = [1.0]
    for n in indices_upto(model.k, max_order):
        coef = math.prod(qi**ni / math.factorial(ni) for qi, ni in zip(q, n))
        if coef != 0.0:
            terms.append(coef * chi(n, table))
    value = math.fsum(terms)
    s = float(np.abs(q).sum())
    if s == 0.0:
        return MgfResult(value, 0.0, max_order)
    bound = model.batch.upper_bound()
    if bound is None:
        raise RadiusError("tail bound needs an almost-sure bound on the batch entries")
    if bound == 0.0:
        return MgfResult(value, 0.0, max_order)
    growth = density_sup(model.interarrival) * max(d.mean for d in model.delays)
    tail = float(_majorant_tail(s, growth, bound, max_order)) / model.mean_interarrival
    if not tail < 1e-6:
        raise RadiusError(f"tail bound {tail:.3g} at |q|={s:g} exceeds 1e-6; reduce q or raise max_order")
    return MgfResult(value, tail, max_order)
