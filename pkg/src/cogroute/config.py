"""TOML experiment configuration with field-level validation."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import grid as gridmod
from . import router
from .market import PricingParams
from .qos import QoSRequest
from .security import SecurityEnv
from .simkit import ReputationScenario
from .spectrum import PrimaryTraffic, SecondaryDemand

# Defaults describe the reference scenario; configs/reference.toml adds the
# calibrated PU-return scale and outer-ring sources on top.
DEFAULTS: dict[str, dict] = {
    "grid": {"rings": 4, "macrocell_radius": 1000.0, "reuse_factor": 7, "destination": 0},
    "radio": {
        "transmit_power": 0.75, "path_loss_exponent": 2.0, "noise_power": 1e-4,
        "sensitivity": None, "interferers": 6, "angle_offset": 0.0,
    },
    "traffic": {
        "arrival_rate": 1.0, "primary_service_rate": 4.0, "secondary_service_rate": 4.0,
        "channels": 10, "arrival_scale": 1.0, "count_all_free": True,
    },
    "relay": {
        "availability": 0.8, "mode": "sapr", "reputation": 1.0, "reputation_first": False,
        "sources": "uniform", "channels": None,
    },
    "qos": {"link_reliability_min": 0.9, "route_reliability_min": None, "delay_max": 3.5},
    "security": {"eavesdropper_fraction": 0.1, "observation_hours": 8.0, "transmission_time": 1.0},
    "pricing": {"fee_per_channel": 0.01, "fee_per_time": 0.01, "utility_scale": 0.01, "service_time": None},
    "reputation": {
        "advertised": 0.9, "delivered_prob": 0.15, "low": 0.5, "high": 0.9, "mode": "distribution",
        "window": 100, "weights": [0.02, 0.2, 0.5],
    },
    "montecarlo": {"episodes": 100_000, "seed": 2024},
    "sweep": {"axis": "relay.availability", "values": [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]},
}

# keys whose default is None but which take a number when given
_OPTIONAL_NUMBERS = {
    ("radio", "sensitivity"), ("relay", "channels"), ("qos", "route_reliability_min"),
    ("qos", "link_reliability_min"), ("pricing", "service_time"),
}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def _check_type(section, key, value, default, problems):
    if value is None:
        return
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int) and not isinstance(default, bool):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float) or (section, key) in _OPTIONAL_NUMBERS:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    elif key in ("sources", "reputation"):
        ok = isinstance(value, (str, int, float, list)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        problems.append(f"{section}.{key}: expected {type(default).__name__}, got {value!r}")


@dataclass
class ExperimentConfig:
    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        merged = copy.deepcopy(DEFAULTS)
        problems = []
        for section, values in data.items():
            if section not in merged:
                problems.append(f"{section}: unknown section")
                continue
            if not isinstance(values, dict):
                problems.append(f"{section}: expected a table")
                continue
            for key, value in values.items():
                if key not in merged[section]:
                    problems.append(f"{section}.{key}: unknown field")
                    continue
                _check_type(section, key, value, DEFAULTS[section][key], problems)
                merged[section][key] = value
        if problems:
            raise ConfigError(problems)
        given_qos = data.get("qos", {})
        if "route_reliability_min" in given_qos and "link_reliability_min" not in given_qos:
            merged["qos"]["link_reliability_min"] = None
        cfg = cls(merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError([f"config file {path} not found"]) from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"{path}: {exc}"]) from None
        return cls.from_dict(data)

    def replace(self, path: str, value) -> "ExperimentConfig":
        section, key = path.split(".", 1)
        data = copy.deepcopy(self.raw)
        if section not in data or key not in data[section]:
            raise ConfigError([f"{path}: unknown field"])
        data[section][key] = value
        return ExperimentConfig.from_dict(data)

    def __getitem__(self, section) -> dict:
        return self.raw[section]

    def validate(self):
        problems = []
        checks = {
            "grid": lambda: self.grid,
            "radio": lambda: self.radio,
            "traffic": lambda: (self.traffic, self.demand),
            "relay": lambda: (self.relay_model(1.0, 1.0), self.sources),
            "qos": lambda: self.qos,
            "security": lambda: self.security,
            "pricing": lambda: self.pricing,
            "reputation": lambda: self.reputation_scenario,
        }
        for section, build in checks.items():
            try:
                build()
            except (ValueError, TypeError, KeyError) as exc:
                problems.append(f"{section}: {exc}")
        mc = self["montecarlo"]
        if mc["episodes"] < 1:
            problems.append("montecarlo.episodes: must be >= 1")
        if not 0 <= mc["seed"] < 2**64:
            problems.append("montecarlo.seed: must fit in an unsigned 64-bit integer")
        rep = self["reputation"]
        if rep["window"] < 1:
            problems.append("reputation.window: must be >= 1")
        if any(not 0 < w < 1 for w in rep["weights"]):
            problems.append("reputation.weights: every weight must be in (0, 1)")
        if self["relay"]["channels"] is not None and not 1 <= self["relay"]["channels"] <= self["traffic"]["channels"]:
            problems.append("relay.channels: must be in 1..traffic.channels")
        axis = self["sweep"]["axis"]
        if "." not in axis or axis.split(".", 1)[0] not in self.raw or axis.split(".", 1)[1] not in self.raw[axis.split(".", 1)[0]]:
            problems.append(f"sweep.axis: unknown field {axis!r}")
        if problems:
            raise ConfigError(problems)

    # --- domain objects ---

    @cached_property
    def grid(self) -> gridmod.HexGrid:
        g = self["grid"]
        return gridmod.build_grid(g["rings"], g["macrocell_radius"] / g["rings"], g["reuse_factor"], g["destination"])

    @cached_property
    def radio(self) -> gridmod.RadioParams:
        r = self["radio"]
        g = self["grid"]
        if not 0 <= r["interferers"] <= 6:
            raise ValueError("interferers must be in 0..6")
        return gridmod.RadioParams.from_relay_distance(
            g["macrocell_radius"] / g["rings"], transmit_power=r["transmit_power"],
            path_loss_exponent=r["path_loss_exponent"], noise_power=r["noise_power"],
            sensitivity=r["sensitivity"],
        )

    @property
    def link_sinr(self) -> float:
        r = self["radio"]
        return gridmod.sinr(self.radio, self["grid"]["reuse_factor"], r["interferers"], r["angle_offset"])

    @cached_property
    def traffic(self) -> PrimaryTraffic:
        t = self["traffic"]
        return PrimaryTraffic(t["arrival_rate"], t["primary_service_rate"], t["channels"],
                              t["arrival_scale"], t["count_all_free"])

    @cached_property
    def demand(self) -> SecondaryDemand:
        return SecondaryDemand(self["traffic"]["secondary_service_rate"], self["traffic"]["primary_service_rate"])

    @property
    def availability(self) -> float:
        return self["relay"]["availability"]

    def model_kw(self) -> dict:
        r = self["relay"]
        return {"mode": r["mode"], "reputation": r["reputation"], "reputation_first": r["reputation_first"]}

    def relay_model(self, channel_availability: float, link_reliability: float) -> router.RelayModel:
        return router.RelayModel(self.availability, channel_availability, link_reliability, **self.model_kw())

    @cached_property
    def sources(self):
        return router.iter_sources(self["relay"]["sources"], self.grid)

    @cached_property
    def qos(self) -> QoSRequest:
        q = self["qos"]
        return QoSRequest(q["delay_max"], q["link_reliability_min"], q["route_reliability_min"])

    @cached_property
    def security(self) -> SecurityEnv:
        s = self["security"]
        if not 0 <= s["eavesdropper_fraction"] <= 1:
            raise ValueError("eavesdropper_fraction must be in [0, 1]")
        return SecurityEnv.from_fraction(
            s["eavesdropper_fraction"], len(self.grid), channels=self["traffic"]["channels"],
            observation_hours=s["observation_hours"], transmission_time=s["transmission_time"],
        )

    @cached_property
    def pricing(self) -> PricingParams:
        return PricingParams(**self["pricing"])

    @cached_property
    def reputation_scenario(self) -> ReputationScenario:
        r = self["reputation"]
        if r["mode"] not in ("distribution", "protocol"):
            raise ValueError(f"unknown reputation mode {r['mode']!r}")
        return ReputationScenario(r["advertised"], r["delivered_prob"], r["low"], r["high"], r["mode"])
