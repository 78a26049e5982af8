"""Monte-Carlo simulation of the delayed batch renewal process.

Each replication draws from its own counter-based Philox stream, keyed by
the master seed and indexed by the replication number, so estimates do not
depend on how replications are split across worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, ScopeError
from .model import ModelSpec
from .multi_index import MultiIndex

__all__ = [
    "PathSample",
    "PathBatch",
    "SimEstimate",
    "SweepRow",
    "replication_stream",
    "simulate_path",
    "simulate_paths",
    "estimate_joint_moment",
    "estimate_workload",
    "convergence_sweep",
]

MIN_REPS = 100


@dataclass(frozen=True)
class PathSample:
    """State of one path at the horizon ``t``.

    ``z`` holds the rescaled sums ``exp(delta t) Z_j(t)``, ``counts`` the
    number of type-``j`` units still in the system and ``workload`` the sum
    of their residual delays.
    """

    t: float
    z: np.ndarray
    counts: np.ndarray
    workload: float


@dataclass(frozen=True)
class PathBatch:
    t: float
    z: np.ndarray  # (reps, k)
    counts: np.ndarray  # (reps, k)
    workload: np.ndarray  # (reps,)
    seed: int

    @property
    def reps(self) -> int:
        return self.workload.shape[0]


@dataclass(frozen=True)
class SimEstimate:
    statistic: str
    estimate: float
    std_error: float
    replications: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "replications": self.replications,
            "seed": self.seed,
        }


def _master_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)


def replication_stream(seed: int, rep: int, key: np.ndarray | None = None) -> np.random.Generator:
    """Generator for replication ``rep``: the replication index occupies the top counter word."""
    if key is None:
        key = _master_key(seed)
    counter = np.array([0, 0, 0, rep], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _arrival_times(model: ModelSpec, t: float, rng: np.random.Generator) -> np.ndarray:
    mean = model.mean_interarrival
    expected = t / mean
    chunk = int(expected + 6.0 * math.sqrt(expected + 1.0)) + 16
    times = np.cumsum(model.interarrival.sample(rng, chunk))
    while times[-1] <= t:
        more = times[-1] + np.cumsum(model.interarrival.sample(rng, chunk))
        times = np.concatenate([times, more])
    return times[times <= t]


def simulate_path(model: ModelSpec, t: float, rng: np.random.Generator) -> PathSample:
    """One path of the process observed at time ``t``."""
    if not t > 0:
        raise ConfigError(f"horizon must be positive, got {t!r}")
    arrivals = _arrival_times(model, t, rng)
    k = model.k
    if arrivals.size == 0:
        return PathSample(t, np.zeros(k), np.zeros(k), 0.0)
    batch = np.asarray(model.batch.sample(rng, arrivals.size), dtype=float).reshape(arrivals.size, k)
    # delays are drawn independently per type, even inside one batch
    delays = np.column_stack([d.sample(rng, arrivals.size) for d in model.delays])
    residual = arrivals[:, None] + delays - t
    active = residual > 0
    weight = np.where(active, batch, 0.0)
    z = (weight * np.exp(-model.delta * np.where(active, residual, 0.0))).sum(axis=0)
    counts = weight.sum(axis=0)
    workload = float((weight * np.where(active, residual, 0.0)).sum())
    return PathSample(t, z, counts, workload)


def _run_block(model: ModelSpec, t: float, seed: int, start: int, stop: int):
    key = _master_key(seed)
    size = stop - start
    z = np.empty((size, model.k))
    counts = np.empty((size, model.k))
    work = np.empty(size)
    for r in range(start, stop):
        path = simulate_path(model, t, replication_stream(seed, r, key))
        z[r - start], counts[r - start], work[r - start] = path.z, path.counts, path.workload
    return z, counts, work


def _worker_count(workers: int | None) -> int:
    cap = os.environ.get("DELAYQ_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise ConfigError(f"DELAYQ_THREADS must be an integer, got {cap!r}") from None
    if workers is None:
        return 1
    return max(1, min(int(workers), limit))


def simulate_paths(
    model: ModelSpec, t: float, reps: int, seed: int, *, workers: int | None = None
) -> PathBatch:
    """``reps`` independent paths at horizon ``t``, in replication order."""
    if reps < 1:
        raise ConfigError("need at least one replication")
    nproc = min(_worker_count(workers), reps)
    if nproc == 1:
        z, counts, work = _run_block(model, t, seed, 0, reps)
    else:
        bounds = np.linspace(0, reps, nproc + 1).astype(int)
        with ProcessPoolExecutor(max_workers=nproc) as pool:
            futures = [pool.submit(_run_block, model, t, seed, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
            parts = [f.result() for f in futures]
        z = np.concatenate([p[0] for p in parts])
        counts = np.concatenate([p[1] for p in parts])
        work = np.concatenate([p[2] for p in parts])
    return PathBatch(t, z, counts, work, seed)


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def _jackknife_cov(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Sample covariance and its leave-one-out jackknife standard error."""
    n = x.size
    xc = x - math.fsum(x) / n
    yc = y - math.fsum(y) / n
    sx, sy, sxy = math.fsum(xc), math.fsum(yc), math.fsum(xc * yc)
    cov = (sxy - sx * sy / n) / (n - 1)
    loo = ((sxy - xc * yc) - (sx - xc) * (sy - yc) / (n - 1)) / (n - 2)
    loo_mean = math.fsum(loo) / n
    se = math.sqrt((n - 1) / n * math.fsum((loo - loo_mean) ** 2))
    return cov, se


def _moment_values(batch: PathBatch, n: MultiIndex) -> np.ndarray:
    out = np.ones(batch.reps)
    for j, nj in enumerate(n):
        if nj:
            out = out * batch.z[:, j] ** nj
    return out


def estimate_joint_moment(
    model: ModelSpec,
    n: Sequence[int],
    t: float,
    reps: int,
    seed: int,
    *,
    workers: int | None = None,
    paths: PathBatch | None = None,
) -> SimEstimate:
    """Monte-Carlo estimate of ``M~_n(t) = E[prod (exp(delta t) Z_j(t))^{n_j}]``."""
    n = MultiIndex(n)
    if len(n) != model.k:
        raise ConfigError(f"index {tuple(n)} does not match k={model.k}")
    if reps < MIN_REPS:
        raise ConfigError(f"need at least {MIN_REPS} replications, got {reps}")
    name = f"M_tilde[{n}]@t={t:g}"
    if n.eta == 0:
        return SimEstimate(name, 1.0, 0.0, reps, seed)
    if paths is None:
        paths = simulate_paths(model, t, reps, seed, workers=workers)
    mean, se = _mean_and_se(_moment_values(paths, n))
    return SimEstimate(name, mean, se, reps, seed)


def estimate_workload(
    model: ModelSpec,
    t: float,
    reps: int,
    seed: int,
    *,
    workers: int | None = None,
    paths: PathBatch | None = None,
) -> tuple[SimEstimate, SimEstimate]:
    """Mean workload ``E[D(t)]`` and ``Cov(D(t), Z(t))`` with ``Z`` the queue size."""
    if model.k != 1:
        raise ScopeError(f"workload estimates need a single type, model has k={model.k}")
    if not model.batch.is_unit():
        raise ScopeError("workload estimates need unit batches (X = 1)")
    if reps < MIN_REPS:
        raise ConfigError(f"need at least {MIN_REPS} replications, got {reps}")
    if paths is None:
        paths = simulate_paths(model, t, reps, seed, workers=workers)
    mean, se = _mean_and_se(paths.workload)
    cov, cov_se = _jackknife_cov(paths.workload, paths.counts[:, 0])
    return (
        SimEstimate(f"workload_mean@t={t:g}", mean, se, reps, seed),
        SimEstimate(f"workload_cov@t={t:g}", cov, cov_se, reps, seed),
    )


@dataclass(frozen=True)
class SweepRow:
    t: float
    estimate: SimEstimate
    chi: float | None
    gap: float | None

    def to_dict(self) -> dict:
        return {"t": self.t, **self.estimate.to_dict(), "chi": self.chi, "gap": self.gap}


def convergence_sweep(
    model: ModelSpec,
    n: Sequence[int],
    t_list: Sequence[float],
    reps: int,
    seed: int,
    *,
    workers: int | None = None,
) -> list[SweepRow]:
    """Estimates of ``M~_n(t)`` along increasing horizons, with the gap to ``chi_n`` when available.

    Every horizon reuses ``seed``, so a one-point sweep reproduces
    :func:`estimate_joint_moment` exactly.
    """
    t_list = [float(t) for t in t_list]
    if any(b <= a for a, b in zip(t_list, t_list[1:])):
        raise ConfigError("sweep horizons must be strictly increasing")
    limit = None
    if model.has_common_exponential_delays():
        from .moment_engine import MomentTable, chi

        limit = chi(n, MomentTable(model)) if MultiIndex(n).eta > 0 else 1.0
    rows = []
    for t in t_list:
        est = estimate_joint_moment(model, n, t, reps, seed, workers=workers)
        rows.append(SweepRow(t, est, limit, None if limit is None else abs(est.estimate - limit)))
    return rows
