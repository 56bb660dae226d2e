"""Scenario files: YAML bundles of every simulation parameter.

A user scenario is deep-merged over the bundled default, so it only needs
to list the values it changes.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .photophysics import RateConstants

DATA_DIR = Path(__file__).with_name("data")
DEFAULT_SCENARIO = DATA_DIR / "default_scenario.yaml"
GOLDEN_NMR = DATA_DIR / "golden_nmr.csv"
SCENARIO_DIR_ENV = "SPINRESOLFT_SCENARIO_DIR"


class ScenarioError(ValueError):
    """Scenario file is missing, malformed or inconsistent."""


def _merge(base: dict, override: dict, where="") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in out:
            raise ScenarioError(f"unknown scenario key {where}{k!r}")
        if isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


def resolve_path(name) -> Path:
    """Scenario path; bare names are looked up in ``$SPINRESOLFT_SCENARIO_DIR``."""
    p = Path(name)
    if p.exists():
        return p
    root = os.environ.get(SCENARIO_DIR_ENV)
    if root and p.parent == Path("."):
        for cand in (Path(root) / p, Path(root) / f"{p}.yaml"):
            if cand.exists():
                return cand
    raise ScenarioError(f"scenario not found: {name}")


@dataclass
class Scenario:
    data: dict
    source: str = "default"

    @classmethod
    def load(cls, path=None) -> "Scenario":
        base = yaml.safe_load(DEFAULT_SCENARIO.read_text())
        if path is None:
            return cls(base, "default")
        p = resolve_path(path)
        try:
            user = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{p}: {exc}") from None
        if not isinstance(user, dict):
            raise ScenarioError(f"{p}: expected a mapping at top level")
        scen = cls(_merge(base, user), str(p))
        scen.validate()
        return scen

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self) -> int:
        s = self.data.get("seed")
        if s is None:
            raise ScenarioError("a seed is required for stochastic commands")
        return int(s)

    def with_seed(self, seed) -> "Scenario":
        d = copy.deepcopy(self.data)
        d["seed"] = int(seed)
        return Scenario(d, self.source)

    @property
    def sha256(self) -> str:
        canon = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def rates(self) -> RateConstants:
        path = self.data.get("rates")
        if path is None:
            return RateConstants.default()
        return RateConstants.load(path)

    def validate(self):
        seed = self.data.get("seed")
        if seed is not None and (int(seed) != seed or seed < 0):
            raise ScenarioError("seed must be a non-negative integer")
        o = self.data["optics"]
        if not (o["wavelength_nm"] > 0 and o["na"] > 0 and o["doughnut_r0_nm"] > 0):
            raise ScenarioError("optics values must be positive")
        if not 0 <= o["epsilon"] < 1:
            raise ScenarioError("epsilon must lie in [0, 1)")
        im = self.data["imaging"]
        if im["pixels"] < 1 or im["reps_per_pixel"] < 1:
            raise ScenarioError("imaging needs at least one pixel and one repetition")
        if self.data["wire"]["variant"] not in ("tangential", "printed"):
            raise ScenarioError("wire.variant must be 'tangential' or 'printed'")
        if self.data.get("rates") is not None and not Path(self.data["rates"]).exists():
            raise ScenarioError(f"rate file not found: {self.data['rates']}")
