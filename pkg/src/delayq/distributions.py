"""Parametric interarrival and delay laws.

Every family exposes its Laplace transform, first two moments, density,
survival function and a sampler.  Delay laws additionally expose the
discounted survival ``omega_bar``; interarrival laws expose the renewal
density bound, the hazard class and, for rational families, the transform
``E[exp(z * tau)]`` as an explicit ratio of polynomials.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Any, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize, special

from .errors import ConfigError, PoleError, UnsupportedFamily

__all__ = [
    "HazardClass",
    "RationalTransform",
    "Exponential",
    "Erlang",
    "Hyperexponential",
    "Uniform",
    "Deterministic",
    "InterarrivalModel",
    "DelayModel",
    "laplace",
    "omega_bar",
    "sample",
    "density_sup",
    "interarrival_from_dict",
    "delay_from_dict",
]

_WEIGHT_TOL = 1e-12


class HazardClass(enum.Enum):
    IFR = "IFR"
    DFR = "DFR"
    CONSTANT = "ConstantHazard"
    UNKNOWN = "Unknown"

    @property
    def is_ifr(self) -> bool:
        return self in (HazardClass.IFR, HazardClass.CONSTANT)

    @property
    def is_dfr(self) -> bool:
        return self in (HazardClass.DFR, HazardClass.CONSTANT)


@dataclass(frozen=True)
class RationalTransform:
    """``E[exp(z * tau)] = numerator(z) / denominator(z)`` on its continuation.

    Polynomials are stored with ascending coefficients.
    """

    numerator: Polynomial
    denominator: Polynomial
    # exact pole locations when known; repeated roots are ill-conditioned numerically
    known_poles: tuple = ()

    def __post_init__(self):
        if self.numerator.degree() > self.denominator.degree():
            raise ValueError("numerator degree exceeds denominator degree")

    def __call__(self, z):
        den = self.denominator(z)
        if np.any(den == 0):
            raise PoleError(f"transform evaluated at a pole z={z}")
        return self.numerator(z) / den

    def derivative(self, z):
        p, q = self.numerator, self.denominator
        qz = q(z)
        if np.any(qz == 0):
            raise PoleError(f"transform derivative evaluated at a pole z={z}")
        return (p.deriv()(z) * qz - p(z) * q.deriv()(z)) / qz**2

    def poles(self) -> np.ndarray:
        if self.known_poles:
            return np.asarray(self.known_poles, dtype=complex)
        return self.denominator.roots()

    @property
    def abscissa(self) -> float:
        """Smallest real part among the poles: the light-tail boundary."""
        return float(np.min(self.poles().real))


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be a finite positive number, got {value!r}")
    return value


class _Law:
    """Shared behaviour of the parametric families."""

    family: str = ""

    # overridden by subclasses
    mean: float
    second_moment: float

    def laplace(self, s):
        raise NotImplementedError

    def rational_transform(self) -> RationalTransform:
        raise UnsupportedFamily(f"{self.family} has no rational transform")

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(_Law):
    rate: float
    family = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "rate", _check_positive("rate", self.rate))

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    @property
    def second_moment(self) -> float:
        return 2.0 / self.rate**2

    def laplace(self, s):
        if np.any(s == -self.rate):
            raise PoleError(f"s={s} is the pole of Exponential({self.rate})")
        return self.rate / (self.rate + s)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * np.maximum(t, 0)), 0.0)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-self.rate * np.maximum(t, 0))

    def omega_bar(self, delta, t):
        t = np.asarray(t, dtype=float)
        mu = self.rate
        return mu / (mu + delta) * np.exp(-(mu + delta) * t)

    def discounted_survival_integral(self, delta: float) -> float:
        return 1.0 / (self.rate + delta)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def rational_transform(self) -> RationalTransform:
        return RationalTransform(Polynomial([self.rate]), Polynomial([self.rate, -1.0]), (self.rate,))

    @property
    def hazard_class(self) -> HazardClass:
        return HazardClass.CONSTANT

    @property
    def density_at_zero(self) -> float:
        return self.rate

    def to_dict(self):
        return {"family": self.family, "rate": self.rate}


@dataclass(frozen=True)
class Erlang(_Law):
    shape: int
    rate: float
    family = "erlang"

    def __post_init__(self):
        if isinstance(self.shape, bool) or int(self.shape) != self.shape or self.shape < 1:
            raise ConfigError(f"Erlang shape must be a positive integer, got {self.shape!r}")
        object.__setattr__(self, "shape", int(self.shape))
        object.__setattr__(self, "rate", _check_positive("rate", self.rate))

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def second_moment(self) -> float:
        return self.shape * (self.shape + 1) / self.rate**2

    def laplace(self, s):
        if np.any(s == -self.rate):
            raise PoleError(f"s={s} is the pole of Erlang({self.shape}, {self.rate})")
        return (self.rate / (self.rate + s)) ** self.shape

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tp = np.maximum(t, 0)
        m, b = self.shape, self.rate
        logf = m * math.log(b) + (m - 1) * np.log(np.where(tp > 0, tp, 1.0)) - b * tp - math.lgamma(m)
        out = np.exp(logf)
        if m > 1:
            out = np.where(tp > 0, out, 0.0)
        return np.where(t >= 0, out, 0.0)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return special.gammaincc(self.shape, self.rate * np.maximum(t, 0))

    def omega_bar(self, delta, t):
        t = np.asarray(t, dtype=float)
        b = self.rate + delta
        return (self.rate / b) ** self.shape * special.gammaincc(self.shape, b * t)

    def discounted_survival_integral(self, delta: float) -> float:
        b = self.rate + delta
        r = self.rate / b
        return math.fsum(r**j for j in range(self.shape)) / b

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def rational_transform(self) -> RationalTransform:
        den = Polynomial([self.rate, -1.0]) ** self.shape
        return RationalTransform(Polynomial([self.rate**self.shape]), den, (self.rate,) * self.shape)

    @property
    def hazard_class(self) -> HazardClass:
        return HazardClass.CONSTANT if self.shape == 1 else HazardClass.IFR

    @property
    def density_at_zero(self) -> float:
        return self.rate if self.shape == 1 else 0.0

    def renewal_density(self, t):
        """Closed-form density of ``E[N_t]`` (roots-of-unity filter)."""
        t = np.asarray(t, dtype=float)
        m, b = self.shape, self.rate
        omegas = np.exp(2j * np.pi * np.arange(m) / m)[:, None]
        flat = t.reshape(1, -1)
        u = (b / m) * (omegas * np.exp(-b * (1 - omegas) * flat)).sum(axis=0).real
        return u.reshape(t.shape)

    def to_dict(self):
        return {"family": self.family, "shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class Hyperexponential(_Law):
    weights: tuple
    rates: tuple
    family = "hyperexponential"

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        r = tuple(_check_positive("rate", x) for x in self.rates)
        if len(w) != len(r) or not w:
            raise ConfigError("hyperexponential weights and rates must have equal nonzero length")
        if any(x <= 0 for x in w):
            raise ConfigError("hyperexponential weights must be positive")
        if abs(math.fsum(w) - 1.0) > _WEIGHT_TOL:
            raise ConfigError(f"hyperexponential weights sum to {math.fsum(w)!r}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", r)

    @property
    def _w(self) -> np.ndarray:
        return np.asarray(self.weights)

    @property
    def _r(self) -> np.ndarray:
        return np.asarray(self.rates)

    @property
    def mean(self) -> float:
        return math.fsum(w / r for w, r in zip(self.weights, self.rates))

    @property
    def second_moment(self) -> float:
        return math.fsum(2 * w / r**2 for w, r in zip(self.weights, self.rates))

    def laplace(self, s):
        total = 0
        for w, r in zip(self.weights, self.rates):
            if np.any(s == -r):
                raise PoleError(f"s={s} is a pole of the hyperexponential transform")
            total = total + w * r / (r + s)
        return total

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tp = np.maximum(t, 0)[..., None]
        out = (self._w * self._r * np.exp(-self._r * tp)).sum(axis=-1)
        return np.where(t >= 0, out, 0.0)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        tp = np.maximum(t, 0)[..., None]
        return (self._w * np.exp(-self._r * tp)).sum(axis=-1)

    def omega_bar(self, delta, t):
        t = np.asarray(t, dtype=float)[..., None]
        r = self._r
        return (self._w * r / (r + delta) * np.exp(-(r + delta) * t)).sum(axis=-1)

    def discounted_survival_integral(self, delta: float) -> float:
        return math.fsum(w / (r + delta) for w, r in zip(self.weights, self.rates))

    def sample(self, rng: np.random.Generator, size=None):
        comp = rng.choice(len(self.weights), p=self._w, size=size)
        return rng.exponential(1.0 / self._r[comp])

    def _merged(self) -> dict[float, float]:
        merged: dict[float, float] = {}
        for w, r in zip(self.weights, self.rates):
            merged[r] = merged.get(r, 0.0) + w
        return merged

    def rational_transform(self) -> RationalTransform:
        merged = self._merged()
        rates = list(merged)
        den = Polynomial([1.0])
        for r in rates:
            den = den * Polynomial([r, -1.0])
        num = Polynomial([0.0])
        for i, r in enumerate(rates):
            term = Polynomial([merged[r] * r])
            for j, q in enumerate(rates):
                if j != i:
                    term = term * Polynomial([q, -1.0])
            num = num + term
        return RationalTransform(num, den, tuple(rates))

    @property
    def hazard_class(self) -> HazardClass:
        return HazardClass.CONSTANT if len(self._merged()) == 1 else HazardClass.DFR

    @property
    def density_at_zero(self) -> float:
        return math.fsum(w * r for w, r in zip(self.weights, self.rates))

    def to_dict(self):
        return {"family": self.family, "weights": list(self.weights), "rates": list(self.rates)}


@dataclass(frozen=True)
class Uniform(_Law):
    """Uniform law on ``[0, b]``."""

    b: float
    family = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "b", _check_positive("b", self.b))

    @property
    def mean(self) -> float:
        return self.b / 2

    @property
    def second_moment(self) -> float:
        return self.b**2 / 3

    def laplace(self, s):
        x = s * self.b
        if np.ndim(x) == 0:
            if abs(x) < 1e-8:
                return 1 - x / 2 + x * x / 6
            if isinstance(x, complex):
                return -cmath.exp(-x) / x + 1 / x
            return -math.expm1(-x) / x
        x = np.asarray(x)
        small = np.abs(x) < 1e-8
        safe = np.where(small, 1.0, x)
        return np.where(small, 1 - x / 2 + x * x / 6, -np.expm1(-safe) / safe)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0) & (t <= self.b), 1.0 / self.b, 0.0)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip(1 - t / self.b, 0.0, 1.0)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.uniform(0.0, self.b, size)

    @property
    def hazard_class(self) -> HazardClass:
        return HazardClass.IFR

    @property
    def density_at_zero(self) -> float:
        return 1.0 / self.b

    def to_dict(self):
        return {"family": self.family, "b": self.b}


@dataclass(frozen=True)
class Deterministic(_Law):
    d: float
    family = "deterministic"

    def __post_init__(self):
        object.__setattr__(self, "d", _check_positive("d", self.d))

    @property
    def mean(self) -> float:
        return self.d

    @property
    def second_moment(self) -> float:
        return self.d**2

    def laplace(self, s):
        if np.ndim(s) == 0 and isinstance(s, complex):
            return cmath.exp(-s * self.d)
        return np.exp(-s * self.d) if np.ndim(s) else math.exp(-s * self.d)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.d, 1.0, 0.0)

    def omega_bar(self, delta, t):
        t = np.asarray(t, dtype=float)
        return np.where(self.d > t, math.exp(-delta * self.d), 0.0)

    def discounted_survival_integral(self, delta: float) -> float:
        if delta == 0:
            return self.d
        return -math.expm1(-delta * self.d) / delta

    def sample(self, rng: np.random.Generator, size=None):
        if size is None:
            return self.d
        return np.full(size, self.d)

    def to_dict(self):
        return {"family": self.family, "d": self.d}


InterarrivalModel = Union[Exponential, Erlang, Hyperexponential, Uniform]
DelayModel = Union[Exponential, Deterministic, Erlang, Hyperexponential]

_INTERARRIVAL_TYPES = (Exponential, Erlang, Hyperexponential, Uniform)
_DELAY_TYPES = (Exponential, Deterministic, Erlang, Hyperexponential)


def laplace(model, s):
    """``E[exp(-s X)]`` for the law ``model``; ``s`` may be complex."""
    return model.laplace(s)


def omega_bar(delay, delta: float, t):
    """Discounted survival ``E[exp(-delta L); L > t]`` of a delay law."""
    if not isinstance(delay, _DELAY_TYPES):
        raise UnsupportedFamily(f"{delay.family} is not a delay family")
    if np.any(np.asarray(t) < 0):
        raise ValueError("omega_bar needs t >= 0")
    return delay.omega_bar(delta, t)


def sample(model, rng: np.random.Generator, size=None):
    """Draw from ``model`` using the explicit generator ``rng``."""
    return model.sample(rng, size)


def _erlang_renewal_sup(model: Erlang) -> float:
    m, b = model.shape, model.rate
    if m == 1:
        return b
    # slowest decaying oscillation sets the horizon
    decay = b * (1 - math.cos(2 * math.pi / m))
    grid = np.linspace(0.0, 40.0 / decay, 20001)
    u = model.renewal_density(grid)
    i = int(np.argmax(u))
    best = float(u[i])
    if 0 < i < grid.size - 1:
        res = optimize.minimize_scalar(
            lambda x: -float(model.renewal_density(np.array([x]))[0]),
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, -float(res.fun))
    return best


def density_sup(model) -> float:
    """Upper bound ``C`` on the renewal density of the interarrival law.

    Returns ``max(sup f, 1 / E[tau])`` raised, where needed, to the true
    supremum of the renewal density (Erlang shapes >= 3 overshoot their
    limit, and the uniform renewal density peaks at ``e / b``).
    """
    if not isinstance(model, _INTERARRIVAL_TYPES):
        raise UnsupportedFamily(f"{getattr(model, 'family', model)!r} has no bounded density")
    base = 1.0 / model.mean
    if isinstance(model, Exponential):
        return max(model.rate, base)
    if isinstance(model, Erlang):
        m, b = model.shape, model.rate
        if m == 1:
            return max(b, base)
        f_max = math.exp(m * math.log(b) + (m - 1) * math.log((m - 1) / b) - (m - 1) - math.lgamma(m))
        return max(f_max, base, _erlang_renewal_sup(model))
    if isinstance(model, Hyperexponential):
        # DFR: the renewal density decreases from f(0)
        return max(model.density_at_zero, base)
    return max(1.0 / model.b, base, math.e / model.b)


def _law_from_dict(obj: dict, allowed: tuple, role: str):
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError(f"{role} must be an object with a 'family' key")
    fam = str(obj["family"]).lower()
    try:
        if fam == "exponential":
            law = Exponential(obj["rate"])
        elif fam == "erlang":
            law = Erlang(obj["shape"], obj["rate"])
        elif fam == "hyperexponential":
            law = Hyperexponential(tuple(obj["weights"]), tuple(obj["rates"]))
        elif fam == "uniform":
            law = Uniform(obj["b"])
        elif fam == "deterministic":
            law = Deterministic(obj["d"])
        else:
            raise ConfigError(f"unknown {role} family {fam!r}")
    except KeyError as exc:
        raise ConfigError(f"{role} family {fam!r} is missing parameter {exc}") from None
    except TypeError as exc:
        raise ConfigError(f"bad {role} parameters: {exc}") from None
    if not isinstance(law, allowed):
        raise ConfigError(f"family {fam!r} is not allowed as {role}")
    return law


def interarrival_from_dict(obj: dict) -> InterarrivalModel:
    return _law_from_dict(obj, _INTERARRIVAL_TYPES, "interarrival")


def delay_from_dict(obj: dict) -> DelayModel:
    return _law_from_dict(obj, _DELAY_TYPES, "delay")
