"""Scenario files: loading, validation and hashing.

A scenario is a JSON document with explicit units in its field names
(``*_per_min``, ``*_currency``, ``*_utils``). See
``scenarios/scenario.schema.json`` for the full layout.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .behavior import (
    CertainOption,
    DynamicReference,
    Reference,
    RideOffer,
    StaticReference,
    TravelTimeBounds,
    TravelTimes,
    UtilityCoefficients,
    x_bounds,
)
from .cpt_core import DEFAULT_ATOMS, DEFAULT_TOL, CptParams
from .distributions import BoundedDistribution, SupportInterval, from_descriptor
from .errors import CptPricingError, ScenarioError

CALIBRATION_SCENARIO = "paper_table1.json"


def _schema() -> dict[str, Any]:
    text = resources.files("cptpricing.scenarios").joinpath("scenario.schema.json").read_text()
    return json.loads(text)


def calibration_path() -> Path:
    return Path(str(resources.files("cptpricing.scenarios").joinpath(CALIBRATION_SCENARIO)))


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def _coefficients(d: dict[str, Any]) -> UtilityCoefficients:
    return UtilityCoefficients(
        a_walk=d["a_walk_per_min"],
        a_wait=d["a_wait_per_min"],
        a_ride=d["a_ride_per_min"],
        b=d["b_per_currency"],
        c=d.get("c_utils", 0.0),
    )


@dataclass(frozen=True)
class TariffGrid:
    min: float
    max: float
    steps: int

    def __post_init__(self) -> None:
        if self.steps < 2:
            raise ScenarioError(f"tariff grid needs at least 2 steps, got {self.steps}")
        if not self.min < self.max:
            raise ScenarioError(f"tariff grid needs min < max, got [{self.min}, {self.max}]")

    def points(self, steps: int | None = None) -> np.ndarray:
        return np.linspace(self.min, self.max, steps or self.steps)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Validated, immutable view of a scenario document."""

    raw: dict[str, Any] = field(repr=False)
    name: str
    smods_coefficients: UtilityCoefficients
    bounds: TravelTimeBounds
    distribution_descriptor: dict[str, Any]
    alt_coefficients: UtilityCoefficients
    alt_times: TravelTimes
    alt_tariff: float
    params: CptParams
    reference_descriptor: dict[str, Any]
    grid: TariffGrid

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Scenario:
        try:
            jsonschema.validate(data, _schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ScenarioError(f"scenario invalid at {where}: {exc.message}") from None
        raw = copy.deepcopy(data)
        try:
            smods = raw["smods"]
            alt = raw["alternative"]
            cpt = raw["cpt"]
            b = smods["travel_time_bounds_min"]
            t = alt["travel_times_min"]
            grid = raw["tariff_grid_currency"]
            sc = cls(
                raw=raw,
                name=raw.get("name", "scenario"),
                smods_coefficients=_coefficients(smods["coefficients"]),
                bounds=TravelTimeBounds(tuple(b["walk"]), tuple(b["wait"]), tuple(b["ride"])),
                distribution_descriptor=dict(smods["distribution"]),
                alt_coefficients=_coefficients(alt["coefficients"]),
                alt_times=TravelTimes(t["walk"], t["wait"], t["ride"]),
                alt_tariff=float(alt["tariff_currency"]),
                params=CptParams(cpt["alpha"], cpt["beta_plus"], cpt["beta_minus"], cpt["lambda"]),
                reference_descriptor=dict(raw.get("reference", {"kind": "dynamic", "x_tilde": "mean"})),
                grid=TariffGrid(float(grid["min"]), float(grid["max"]), int(grid["steps"])),
            )
            sc.distribution  # build once so descriptor errors surface here
        except ScenarioError:
            raise
        except CptPricingError as exc:
            raise ScenarioError(str(exc)) from None
        sc._check_expected()
        return sc

    @classmethod
    def load(cls, path: str | Path) -> Scenario:
        p = Path(path)
        try:
            data = json.loads(p.read_text())
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {p}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{p}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    @classmethod
    def calibration(cls) -> Scenario:
        return cls.load(calibration_path())

    def _check_expected(self) -> None:
        exp = self.raw.get("expected")
        if not exp:
            return
        tol = exp.get("tolerance", 1e-9)
        got = {
            "alternative_utility": self.alternative().objective_utility,
            "x_lower": self.support.lower,
            "x_upper": self.support.upper,
        }
        for key, actual in got.items():
            if key in exp and abs(actual - exp[key]) > tol:
                raise ScenarioError(f"calibration mismatch: {key} = {actual:.12g}, expected {exp[key]}")

    @cached_property
    def hash(self) -> str:
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()

    @property
    def support(self) -> SupportInterval:
        return x_bounds(self.smods_coefficients, self.bounds)

    @cached_property
    def distribution(self) -> BoundedDistribution:
        return from_descriptor(self.distribution_descriptor, self.support)

    def offer(self, tariff: float = 0.0, distribution: BoundedDistribution | None = None) -> RideOffer:
        return RideOffer(distribution or self.distribution, float(tariff), self.smods_coefficients)

    def alternative(self) -> CertainOption:
        return CertainOption.from_attributes(self.alt_coefficients, self.alt_times, self.alt_tariff)

    def reference(self, distribution: BoundedDistribution | None = None) -> Reference:
        desc = self.reference_descriptor
        if desc["kind"] == "static":
            r = desc["r_utils"]
            return StaticReference(self.alternative().objective_utility if r == "alternative" else float(r))
        x = desc["x_tilde"]
        dist = distribution or self.distribution
        named = {"mean": dist.mean, "lower": lambda: dist.support.lower, "upper": lambda: dist.support.upper}
        return DynamicReference(named[x]() if isinstance(x, str) else float(x))

    @property
    def solver(self) -> dict[str, Any]:
        return dict(self.raw.get("solver", {}))

    @property
    def discretization(self) -> dict[str, Any]:
        d = self.raw.get("discretization", {})
        return {"n_atoms": int(d.get("n_atoms", DEFAULT_ATOMS)), "tol": float(d.get("tol", DEFAULT_TOL))}

    def experiment(self, name: str) -> dict[str, Any]:
        return dict(self.raw.get("experiments", {}).get(name, {}))

    def with_changes(self, **paths: Any) -> Scenario:
        """Copy with dotted-path overrides, e.g. ``with_changes(**{"cpt.lambda": 0.5})``."""
        data = copy.deepcopy(self.raw)
        for dotted, val in paths.items():
            node = data
            *parents, leaf = dotted.split(".")
            for key in parents:
                node = node.setdefault(key, {})
            node[leaf] = val
        return Scenario.from_dict(data)
