import json

import pytest

from delayq.distributions import Deterministic, Erlang, Exponential, Hyperexponential, Uniform
from delayq.errors import ConfigError, NonExponentialDelay
from delayq.model import ModelSpec, load_model, model_schema
from delayq.multi_index import Multinomial

TRIAD = {
    "k": 2,
    "interarrival": {"family": "exponential", "rate": 1.0},
    "delays": [{"family": "exponential", "rate": 1.0}, {"family": "exponential", "rate": 1.0}],
    "delta": 0.2,
    "batch": {"kind": "multinomial", "M": 2, "p": [0.5, 0.5]},
}


def test_from_dict_builds_triad():
    model = ModelSpec.from_dict(TRIAD)
    assert model.k == 2
    assert model.delta == 0.2
    assert isinstance(model.batch, Multinomial)
    assert model.common_exponential_rate() == 1.0
    assert model.mean_interarrival == 1.0


@pytest.mark.parametrize(
    "arrival",
    [
        {"family": "exponential", "rate": 2.0},
        {"family": "erlang", "shape": 2, "rate": 2.0},
        {"family": "hyperexponential", "weights": [0.5, 0.5], "rates": [1.0, 3.0]},
        {"family": "uniform", "b": 2.0},
    ],
)
def test_round_trip(arrival):
    obj = dict(TRIAD, interarrival=arrival)
    model = ModelSpec.from_dict(obj)
    again = ModelSpec.from_dict(json.loads(json.dumps(model.to_dict())))
    assert again.to_dict() == model.to_dict()


def test_other_batch_kinds():
    ind = dict(TRIAD, batch={"kind": "independent", "moments": [[1, 1, 2], [1, 0.5, 0.5]]})
    assert ModelSpec.from_dict(ind).batch.moment((1, 1)) == 0.5
    tab = dict(TRIAD, batch={"kind": "table", "entries": [{"m": [1, 1], "value": 0.5}]})
    assert ModelSpec.from_dict(tab).batch.moment((1, 1)) == 0.5


@pytest.mark.parametrize(
    "change",
    [
        {"k": 3},
        {"delta": -0.1},
        {"delta": "0.2"},
        {"interarrival": {"family": "deterministic", "d": 1.0}},
        {"interarrival": {"family": "exponential", "rate": -1.0}},
        {"batch": {"kind": "multinomial", "M": 2, "p": [0.5, 0.4]}},
        {"batch": {"kind": "multinomial", "M": 2, "p": [0.2, 0.3, 0.5]}},
        {"batch": {"kind": "poisson"}},
    ],
)
def test_invalid_models_raise(change):
    with pytest.raises(ConfigError):
        ModelSpec.from_dict(dict(TRIAD, **change))


def test_missing_key_raises():
    obj = dict(TRIAD)
    del obj["batch"]
    with pytest.raises(ConfigError):
        ModelSpec.from_dict(obj)


def test_load_model(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(TRIAD))
    assert load_model(path).to_dict() == ModelSpec.from_dict(TRIAD).to_dict()
    with pytest.raises(ConfigError):
        load_model(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_model(bad)


def test_schema_is_loadable():
    schema = model_schema()
    assert set(schema["required"]) >= {"k", "interarrival", "delays", "delta", "batch"}


def test_common_rate_checks():
    batch = Multinomial(1, (0.5, 0.5))
    mixed = ModelSpec(Exponential(1.0), (Exponential(1.0), Exponential(2.0)), 0.0, batch)
    assert not mixed.has_common_exponential_delays()
    with pytest.raises(NonExponentialDelay):
        mixed.common_exponential_rate()
    det = ModelSpec(Exponential(1.0), (Deterministic(1.0), Exponential(1.0)), 0.0, batch)
    with pytest.raises(NonExponentialDelay):
        det.common_exponential_rate()


def test_batch_and_delays_must_agree():
    with pytest.raises(ConfigError):
        ModelSpec(Exponential(1.0), (Exponential(1.0),), 0.0, Multinomial(1, (0.5, 0.5)))


def test_with_helpers():
    model = ModelSpec.from_dict(TRIAD)
    assert model.with_delta(0.0).delta == 0.0
    assert model.with_interarrival(Erlang(2, 2.0)).mean_interarrival == 1.0
    assert isinstance(model.with_interarrival(Hyperexponential((0.5, 0.5), (1.0, 3.0))).interarrival, Hyperexponential)
    assert model.with_interarrival(Uniform(2.0)).mean_interarrival == 1.0
