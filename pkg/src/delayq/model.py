"""The full stochastic model and its JSON representation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .distributions import (
    DelayModel,
    Exponential,
    InterarrivalModel,
    delay_from_dict,
    interarrival_from_dict,
)
from .errors import ConfigError, NonExponentialDelay
from .multi_index import BatchMomentProvider, batch_from_dict

__all__ = ["ModelSpec", "load_model", "model_schema"]


@dataclass(frozen=True)
class ModelSpec:
    interarrival: InterarrivalModel
    delays: tuple
    delta: float
    batch: BatchMomentProvider

    def __post_init__(self):
        delays = tuple(self.delays)
        if not delays:
            raise ConfigError("model needs at least one delay law")
        object.__setattr__(self, "delays", delays)
        delta = float(self.delta)
        if not math.isfinite(delta):
            raise ConfigError("delta must be finite")
        object.__setattr__(self, "delta", delta)
        if self.batch.k != len(delays):
            raise ConfigError(f"batch has k={self.batch.k} types but {len(delays)} delays were given")

    @property
    def k(self) -> int:
        return len(self.delays)

    @property
    def mean_interarrival(self) -> float:
        return self.interarrival.mean

    def common_exponential_rate(self) -> float:
        """The shared rate ``mu`` when every delay is exponential with one rate."""
        rates = []
        for d in self.delays:
            if not isinstance(d, Exponential):
                raise NonExponentialDelay(f"delay family {d.family!r} is not exponential")
            rates.append(d.rate)
        mu = rates[0]
        if any(not math.isclose(r, mu, rel_tol=1e-12, abs_tol=0.0) for r in rates):
            raise NonExponentialDelay(f"delay rates {rates} are not all equal")
        return mu

    def has_common_exponential_delays(self) -> bool:
        try:
            self.common_exponential_rate()
        except NonExponentialDelay:
            return False
        return True

    def with_delta(self, delta: float) -> "ModelSpec":
        return ModelSpec(self.interarrival, self.delays, delta, self.batch)

    def with_interarrival(self, interarrival: InterarrivalModel) -> "ModelSpec":
        return ModelSpec(interarrival, self.delays, self.delta, self.batch)

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "interarrival": self.interarrival.to_dict(),
            "delays": [d.to_dict() for d in self.delays],
            "delta": self.delta,
            "batch": self.batch.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelSpec":
        try:
            jsonschema.validate(obj, model_schema())
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"model does not match schema: {exc.message}") from None
        k = obj["k"]
        delays = tuple(delay_from_dict(d) for d in obj["delays"])
        if len(delays) != k:
            raise ConfigError(f"k={k} but {len(delays)} delay laws were given")
        if obj["delta"] < 0:
            raise ConfigError("delta must be >= 0")
        return cls(
            interarrival_from_dict(obj["interarrival"]),
            delays,
            obj["delta"],
            batch_from_dict(obj["batch"], k),
        )


def model_schema() -> dict:
    text = resources.files("delayq").joinpath("schemas/model.schema.json").read_text()
    return json.loads(text)


def load_model(path: str | Path) -> ModelSpec:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"model file {str(path)!r} does not exist")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file {str(path)!r} is not valid JSON: {exc}") from None
    return ModelSpec.from_dict(obj)
