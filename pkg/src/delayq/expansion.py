"""Exponential asymptotic expansion of the first-order transient moments.

For a type ``i`` with exponential delay of rate ``mu``,

    M~_{n(i)}(t) = chi + A* exp(-mu t) + sum_k B_k exp(-z_k t) + smaller terms,

where the ``z_k`` solve ``E[exp(z tau)] = 1``.  For rational arrival
transforms the roots are the zeros of a polynomial, found here from its
companion matrix and polished by Newton steps on the transform itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .distributions import Exponential
from .errors import MultipleRootError, NondegeneracyError, NonExponentialDelay, PoleError
from .model import ModelSpec
from .multi_index import MultiIndex

__all__ = [
    "RootSet",
    "ExpansionResult",
    "find_roots",
    "v_expansion",
    "expansion_coeffs",
    "expansion_eval",
]

_NEWTON_STEPS = 8


@dataclass(frozen=True)
class RootSet:
    """Characteristic roots ordered by real part, with their residue weights ``gamma``."""

    roots: tuple
    gammas: tuple
    tail_rate: float

    def __len__(self) -> int:
        return len(self.roots)


def _polish(rt, z: complex) -> complex:
    for _ in range(_NEWTON_STEPS):
        d = rt.derivative(z)
        if d == 0:
            break
        step = (rt(z) - 1.0) / d
        z = z - step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return complex(z)


def _pair_conjugates(roots: list[complex]) -> list[complex]:
    """Snap near-real roots to the real axis and make complex roots exact conjugate pairs."""
    out, pending = [], []
    for z in roots:
        if abs(z.imag) <= 1e-12 * max(1.0, abs(z)):
            out.append(complex(z.real, 0.0))
        elif z.imag > 0:
            pending.append(z)
    for z in pending:
        out.extend([z, z.conjugate()])
    return out


def find_roots(model, search_bound: float | None = None) -> RootSet:
    """Roots of ``E[exp(z tau)] = 1`` with ``0 < Re z <= search_bound`` on the rational continuation.

    ``search_bound=None`` keeps every root.  Roots past the first pole of the
    transform are legitimate: for Erlang(2, b) the only root is ``2b``, twice
    the pole.
    """
    rt = model.rational_transform()
    poly = rt.denominator - rt.numerator
    coef = poly.coef
    if abs(coef[0]) > 1e-9 * max(1.0, np.abs(coef).max()):
        raise ValueError("transform is not normalized at z = 0")
    deflated = Polynomial(coef[1:])
    if deflated.degree() < 1:
        raw = []
    else:
        raw = [_polish(rt, complex(z)) for z in deflated.roots()]
    roots = _pair_conjugates(raw)
    scale = max([1.0] + [abs(p) for p in rt.poles()])
    roots = [z for z in roots if z.real > 1e-12 * scale]
    if search_bound is not None:
        roots = [z for z in roots if z.real <= search_bound]
    roots.sort(key=lambda z: (z.real, z.imag))
    gammas = []
    for a, z in enumerate(roots):
        d = complex(rt.derivative(z))
        if abs(z * d) < 1e-8:
            raise MultipleRootError(f"root {z} is not simple")
        for w in roots[a + 1 :]:
            if abs(w - z) < 1e-8 * scale:
                raise MultipleRootError(f"roots {z} and {w} coincide")
        gammas.append(-1.0 / (z * d))
    return RootSet(tuple(roots), tuple(gammas), float(rt.abscissa))


def v_expansion(roots: RootSet, x) -> float | np.ndarray:
    """``sum_j gamma_j exp(-z_j x)``: deviation of the renewal function from its linear asymptote."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("v_expansion needs x >= 0")
    total = np.zeros(x.shape, dtype=complex)
    for z, g in zip(roots.roots, roots.gammas):
        total = total + g * np.exp(-z * x)
    scale = max(1.0, float(np.abs(total.real).max(initial=0.0)))
    if np.abs(total.imag).max(initial=0.0) > 1e-12 * scale:
        raise AssertionError("roots do not close under conjugation")
    out = total.real
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ExpansionResult:
    """Coefficients of the expansion for one type.

    ``b_terms`` holds every root with its coefficient; only the first
    ``truncation_order`` of them (those with ``Re z < mu``) enter the
    evaluation.  ``error_rate`` is the guaranteed decay rate of what is left.
    """

    type_index: int
    chi: float
    mu: float
    a: float
    a_star: float
    b_terms: tuple
    truncation_order: int
    error_rate: float
    sign_convention: str

    def to_dict(self) -> dict:
        return {
            "type": self.type_index + 1,
            "chi": self.chi,
            "mu": self.mu,
            "A": self.a,
            "A_star": self.a_star,
            "B_terms": [
                {"z_re": z.real, "z_im": z.imag, "B_re": b.real, "B_im": b.imag, "used": k < self.truncation_order}
                for k, (z, b) in enumerate(self.b_terms)
            ],
            "truncation_order": self.truncation_order,
            "error_rate": self.error_rate,
            "sign_convention": self.sign_convention,
        }


def expansion_coeffs(
    i: int, model: ModelSpec, roots: RootSet | None = None, *, paper_literal_sign: bool = False
) -> ExpansionResult:
    """Expansion coefficients of ``M~_{n(i)}`` for the 0-based type ``i``.

    The constant ``A`` carries the bracket
    ``-E[tau^2] / (2 E[tau]^2) + sum_{Re z_k < mu} gamma_k mu / (z_k - mu)``
    with an overall minus sign; the exact Poisson transient
    ``(lambda / mu)(1 - exp(-mu t))`` pins that sign.  ``paper_literal_sign``
    flips it for comparison.
    """
    if not 0 <= i < model.k:
        raise IndexError(f"type {i} outside 0..{model.k - 1}")
    delay = model.delays[i]
    if not isinstance(delay, Exponential):
        raise NonExponentialDelay(f"type {i + 1} delay is {delay.family}, not exponential")
    arrival = model.interarrival
    rt = arrival.rational_transform()
    if roots is None:
        roots = find_roots(arrival)
    mu, delta = delay.rate, model.delta
    if mu >= roots.tail_rate:
        raise PoleError(f"mu={mu} is not below the transform pole {roots.tail_rate}")
    for z in roots.roots:
        if abs(z - mu) < 1e-9 * max(1.0, mu):
            raise NondegeneracyError(f"root {z} coincides with mu={mu}")
    ex = model.batch.moment(MultiIndex.unit(i, model.k))
    e1, e2 = arrival.mean, arrival.second_moment
    phi_mu = float(np.real(rt(mu)))
    chi = ex / (e1 * (mu + delta))
    i0 = sum(1 for z in roots.roots if z.real < mu)
    bracket = -e2 / (2 * e1**2) + sum(
        (g * mu / (z - mu) for z, g in zip(roots.roots[:i0], roots.gammas[:i0])), 0j
    )
    if abs(bracket.imag) > 1e-10 * max(1.0, abs(bracket.real)):
        raise AssertionError("truncated bracket is not real")
    sign = 1.0 if paper_literal_sign else -1.0
    a = sign * ex * mu / (mu + delta) * phi_mu * bracket.real
    a_star = a - ex / e1 / (mu + delta) * phi_mu
    b_terms = tuple(
        (z, ex * mu / (mu + delta) * g * z / (z - mu) * complex(rt(z))) for z, g in zip(roots.roots, roots.gammas)
    )
    error_rate = min(mu, roots.roots[i0].real) if i0 < len(roots) else mu
    return ExpansionResult(
        type_index=i,
        chi=chi,
        mu=mu,
        a=float(a),
        a_star=float(a_star),
        b_terms=b_terms,
        truncation_order=i0,
        error_rate=float(error_rate),
        sign_convention="literal" if paper_literal_sign else "corrected",
    )


def expansion_eval(result: ExpansionResult, t) -> float | np.ndarray:
    """``chi + A* exp(-mu t) + sum_{k < i0} Re(B_k exp(-z_k t))``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("expansion_eval needs t >= 0")
    out = result.chi + result.a_star * np.exp(-result.mu * t)
    for z, b in result.b_terms[: result.truncation_order]:
        out = out + (b * np.exp(-z * t)).real
    return float(out) if out.ndim == 0 else out
