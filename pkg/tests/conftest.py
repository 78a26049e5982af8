import numpy as np
import pytest

from delayq.distributions import Exponential
from delayq.model import ModelSpec
from delayq.multi_index import IndependentMarginals, Multinomial


def unit_batch(order: int = 8) -> IndependentMarginals:
    """Single-type batch fixed at X = 1, with moments up to ``order``."""
    return IndependentMarginals(((1.0,) * (order + 1),))


def single_type(arrival, delay=None, delta=0.0, order=8) -> ModelSpec:
    return ModelSpec(arrival, (delay or Exponential(1.0),), delta, unit_batch(order))


def triad(arrival=None) -> ModelSpec:
    """Two-type model used for the three-way checks: lambda = mu = 1, delta = 0.2."""
    return ModelSpec(
        arrival or Exponential(1.0),
        (Exponential(1.0), Exponential(1.0)),
        0.2,
        Multinomial(2, (0.5, 0.5)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def mm_inf():
    return single_type(Exponential(1.0))


@pytest.fixture
def triad_model():
    return triad()
