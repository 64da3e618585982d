"""Model parameters: surface tension, pressure and per-type LJ well depths."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ConstraintViolation

GAMMA0 = 0.05
BETA = 0.1
LAMBDA = 10.0


@dataclass(frozen=True)
class ParameterSet:
    """``gamma`` in kcal/(mol A^2), ``pressure`` and ``well_depths`` in kcal/(mol A^3).

    ``well_depths[j]`` belongs to the atom type labelled ``type_labels[j]``.
    """

    gamma: float = GAMMA0
    pressure: float = 0.0
    well_depths: tuple[float, ...] = ()
    type_labels: tuple[str, ...] = ()
    gamma0: float = GAMMA0
    beta: float = BETA
    lam: float = LAMBDA

    def __post_init__(self):
        object.__setattr__(self, "well_depths", tuple(float(v) for v in self.well_depths))
        object.__setattr__(self, "type_labels", tuple(self.type_labels))
        if len(self.well_depths) != len(self.type_labels):
            raise ConfigurationError(
                f"{len(self.well_depths)} well depths for {len(self.type_labels)} type labels"
            )

    @classmethod
    def initial(cls, type_labels, **kw) -> "ParameterSet":
        labels = tuple(type_labels)
        return cls(well_depths=(0.0,) * len(labels), type_labels=labels, **kw)

    @property
    def n_types(self) -> int:
        return len(self.type_labels)

    def vector(self) -> np.ndarray:
        return np.array([self.gamma, self.pressure, *self.well_depths])

    def with_vector(self, v) -> "ParameterSet":
        v = np.asarray(v, dtype=float)
        return replace(self, gamma=float(v[0]), pressure=float(v[1]),
                       well_depths=tuple(float(x) for x in v[2:]))

    def well_depth(self, label: str) -> float:
        try:
            return self.well_depths[self.type_labels.index(label)]
        except ValueError:
            raise ConfigurationError(f"no well depth for atom type {label!r}") from None

    def is_feasible(self) -> bool:
        return self.gamma >= self.gamma0 and abs(self.pressure) <= self.beta * self.gamma

    def check_feasible(self) -> None:
        if not self.gamma >= self.gamma0:
            raise ConstraintViolation(f"gamma >= gamma0 violated: {self.gamma} < {self.gamma0}")
        if not abs(self.pressure) <= self.beta * self.gamma:
            raise ConstraintViolation(
                f"|p| <= beta*gamma violated: |{self.pressure}| > {self.beta}*{self.gamma}"
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["well_depths"] = list(self.well_depths)
        d["type_labels"] = list(self.type_labels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterSet":
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ParameterSet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
