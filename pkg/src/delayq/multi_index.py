"""Multi-indices over N^k and joint moments of the batch vector."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigError, OrderError, RangeError

__all__ = [
    "MultiIndex",
    "iterate_below",
    "support_set",
    "binom_product",
    "indices_upto",
    "BatchMomentProvider",
    "ExplicitTable",
    "IndependentMarginals",
    "Multinomial",
    "batch_moment",
    "batch_from_dict",
]


class MultiIndex(tuple):
    """Immutable vector of non-negative integers ``(n_1, ..., n_k)``."""

    def __new__(cls, entries: Iterable[int]):
        entries = tuple(entries)
        if not entries:
            raise ValueError("a multi-index needs k >= 1 entries")
        for e in entries:
            if isinstance(e, bool) or int(e) != e or e < 0:
                raise ValueError(f"multi-index entries must be non-negative integers, got {entries!r}")
        return super().__new__(cls, (int(e) for e in entries))

    @classmethod
    def zero(cls, k: int) -> "MultiIndex":
        return cls((0,) * k)

    @classmethod
    def unit(cls, i: int, k: int) -> "MultiIndex":
        """Kronecker vector with a one in (0-based) position ``i``."""
        if not 0 <= i < k:
            raise ValueError(f"unit index {i} outside 0..{k - 1}")
        return cls(1 if j == i else 0 for j in range(k))

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        try:
            return cls(int(p) for p in text.replace(" ", "").split(","))
        except ValueError as exc:
            raise ConfigError(f"cannot parse multi-index {text!r}: {exc}") from None

    @property
    def k(self) -> int:
        return len(self)

    @property
    def eta(self) -> int:
        return sum(self)

    def is_unit(self) -> bool:
        return self.eta == 1

    def __lt__(self, other):
        """Strict partial order: componentwise <= and different."""
        return len(self) == len(other) and self != other and all(a <= b for a, b in zip(self, other))

    def __le__(self, other):
        return len(self) == len(other) and all(a <= b for a, b in zip(self, other))

    def __gt__(self, other):
        return MultiIndex(other) < self

    def __ge__(self, other):
        return MultiIndex(other) <= self

    def __sub__(self, other):
        return MultiIndex(a - b for a, b in zip(self, other))

    def __add__(self, other):
        return MultiIndex(a + b for a, b in zip(self, other))

    def __repr__(self):
        return f"MultiIndex({tuple(self)!r})"

    def __str__(self):
        return ",".join(str(x) for x in self)


def iterate_below(n: Sequence[int]) -> list[MultiIndex]:
    """All ``l < n`` in lexicographic order (``prod(n_i + 1) - 1`` of them)."""
    n = MultiIndex(n)
    return [MultiIndex(l) for l in itertools.product(*(range(x + 1) for x in n)) if l != tuple(n)]


def support_set(l: Sequence[int], n: Sequence[int]) -> frozenset[int]:
    """0-based coordinates ``j`` with ``l_j < n_j``."""
    l, n = MultiIndex(l), MultiIndex(n)
    if not l < n:
        raise OrderError(f"{tuple(l)} is not below {tuple(n)}")
    return frozenset(j for j, (a, b) in enumerate(zip(l, n)) if a < b)


def binom_product(l: Sequence[int], n: Sequence[int]) -> int:
    if len(l) != len(n) or any(a > b for a, b in zip(l, n)):
        raise OrderError(f"{tuple(l)} is not componentwise below {tuple(n)}")
    return math.prod(math.comb(b, a) for a, b in zip(l, n))


def indices_upto(k: int, order: int, *, include_zero: bool = False) -> list[MultiIndex]:
    """Every multi-index of length ``k`` with ``eta <= order``, by degree then lexicographic."""
    out = []
    for eta in range(0 if include_zero else 1, order + 1):
        for combo in itertools.product(range(eta + 1), repeat=k):
            if sum(combo) == eta:
                out.append(MultiIndex(combo))
    return out


class BatchMomentProvider:
    """Source of joint raw moments ``E[prod X_j^{m_j}]`` of the batch vector."""

    kind: str = ""
    k: int

    def moment(self, m: Sequence[int]) -> float:
        raise NotImplementedError

    def upper_bound(self) -> float | None:
        """Almost-sure bound on every ``X_j``, when known."""
        return None

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise ConfigError(f"{self.kind} batches cannot be sampled; use a multinomial or degenerate batch")

    def is_unit(self) -> bool:
        """True when the batch is the single-type constant ``X = 1``."""
        if self.k != 1:
            return False
        try:
            return math.isclose(self.moment((1,)), 1.0, rel_tol=1e-12) and math.isclose(
                self.moment((2,)), 1.0, rel_tol=1e-12
            )
        except RangeError:
            return False

    def _check(self, m: Sequence[int]) -> MultiIndex:
        m = MultiIndex(m)
        if len(m) != self.k:
            raise RangeError(f"index {tuple(m)} has length {len(m)}, provider has k={self.k}")
        return m


@dataclass(frozen=True)
class ExplicitTable(BatchMomentProvider):
    entries: Mapping[tuple, float]
    k: int
    kind = "table"

    def __post_init__(self):
        table = {}
        for key, value in dict(self.entries).items():
            key = MultiIndex(key)
            if len(key) != self.k:
                raise ConfigError(f"table index {tuple(key)} has wrong length for k={self.k}")
            value = float(value)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"table moment at {tuple(key)} must be finite and >= 0")
            table[key] = value
        zero = MultiIndex.zero(self.k)
        if zero in table and table[zero] != 1.0:
            raise ConfigError("the zero-order moment must equal 1")
        table[zero] = 1.0
        object.__setattr__(self, "entries", table)

    def moment(self, m):
        m = self._check(m)
        try:
            return self.entries[m]
        except KeyError:
            raise RangeError(f"moment table has no entry for {tuple(m)}") from None

    def scaled(self, m: Sequence[int], factor: float) -> "ExplicitTable":
        table = dict(self.entries)
        table[MultiIndex(m)] = table[MultiIndex(m)] * factor
        return ExplicitTable(table, self.k)

    def to_dict(self):
        return {
            "kind": self.kind,
            "entries": [{"m": list(key), "value": v} for key, v in self.entries.items() if key.eta > 0],
        }


@dataclass(frozen=True)
class IndependentMarginals(BatchMomentProvider):
    """Independent ``X_j`` given by their univariate raw moments ``[1, E X, E X^2, ...]``."""

    moments: tuple
    kind = "independent"

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in row) for row in self.moments)
        if not rows:
            raise ConfigError("independent batch needs at least one marginal")
        for row in rows:
            if not row or row[0] != 1.0:
                raise ConfigError("each marginal moment list must start with E[X^0] = 1")
            if any(not math.isfinite(v) or v < 0 for v in row):
                raise ConfigError("marginal moments must be finite and >= 0")
        object.__setattr__(self, "moments", rows)

    @property
    def k(self) -> int:
        return len(self.moments)

    def moment(self, m):
        m = self._check(m)
        out = 1.0
        for row, mj in zip(self.moments, m):
            if mj >= len(row):
                raise RangeError(f"marginal moment of order {mj} not supplied")
            out *= row[mj]
        return out

    def upper_bound(self):
        # only degenerate marginals (zero variance) are known to be bounded
        if all(len(row) >= 3 and math.isclose(row[2], row[1] ** 2, rel_tol=1e-12, abs_tol=0.0) for row in self.moments):
            return max(row[1] for row in self.moments)
        return None

    def sample(self, rng, size):
        if self.upper_bound() is None:
            return super().sample(rng, size)
        # degenerate marginals: every batch is the vector of means
        return np.tile(np.array([row[1] for row in self.moments]), (size, 1))

    def to_dict(self):
        return {"kind": self.kind, "moments": [list(r) for r in self.moments]}


@dataclass(frozen=True)
class Multinomial(BatchMomentProvider):
    """``M`` customers per batch, each of class ``j`` with probability ``p_j``."""

    M: int
    p: tuple
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    kind = "multinomial"

    def __post_init__(self):
        if isinstance(self.M, bool) or int(self.M) != self.M or self.M < 0:
            raise ConfigError(f"multinomial M must be a non-negative integer, got {self.M!r}")
        p = tuple(float(x) for x in self.p)
        if not p or any(x < 0 for x in p):
            raise ConfigError("multinomial probabilities must be non-negative")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ConfigError(f"multinomial probabilities sum to {math.fsum(p)!r}, not 1")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "p", p)

    @property
    def k(self) -> int:
        return len(self.p)

    def _outcomes(self):
        key = "outcomes"
        if key not in self._cache:
            counts, probs = [], []
            for combo in itertools.product(range(self.M + 1), repeat=self.k):
                if sum(combo) != self.M:
                    continue
                coef = math.factorial(self.M)
                for c in combo:
                    coef //= math.factorial(c)
                prob = coef * math.prod(pj**c for pj, c in zip(self.p, combo))
                counts.append(combo)
                probs.append(prob)
            self._cache[key] = (counts, probs)
        return self._cache[key]

    def moment(self, m):
        m = self._check(m)
        if m.eta == 0:
            return 1.0
        counts, probs = self._outcomes()
        return math.fsum(pr * math.prod(c**e for c, e in zip(combo, m)) for combo, pr in zip(counts, probs))

    def upper_bound(self):
        return float(self.M)

    def sample(self, rng, size):
        return rng.multinomial(self.M, self.p, size=size).astype(float)

    def to_dict(self):
        return {"kind": self.kind, "M": self.M, "p": list(self.p)}


def batch_moment(provider: BatchMomentProvider, m: Sequence[int]) -> float:
    return provider.moment(m)


def batch_from_dict(obj: dict, k: int | None = None) -> BatchMomentProvider:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("batch must be an object with a 'kind' key")
    kind = obj["kind"]
    try:
        if kind == "multinomial":
            prov = Multinomial(obj["M"], tuple(obj["p"]))
        elif kind == "independent":
            prov = IndependentMarginals(tuple(obj["moments"]))
        elif kind == "table":
            entries = {tuple(e["m"]): e["value"] for e in obj["entries"]}
            size = k if k is not None else len(next(iter(entries))) if entries else None
            if size is None:
                raise ConfigError("empty moment table needs an explicit k")
            prov = ExplicitTable(entries, size)
        else:
            raise ConfigError(f"unknown batch kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"batch kind {kind!r} is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad batch specification: {exc}") from None
    if k is not None and prov.k != k:
        raise ConfigError(f"batch describes {prov.k} types, model has k={k}")
    return prov
