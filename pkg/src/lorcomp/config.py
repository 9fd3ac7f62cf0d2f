"""TOML experiment configuration for ``lorcomp verify --config``.

Example::

    [campaign]
    K = [0.0, -1.0]
    directions = ["above", "below"]
    formulations = ["triangle", "hinge"]
    seed = 7

    [tolerances]
    tau = 1e-6
    angle = 1e-4

    [output]
    report = "out.report.json"
    csv = "out.margins.csv"

Unknown sections or keys raise :class:`ConfigError`.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import LorcompError

_CAMPAIGN_KEYS = {
    "K": "K_grid",
    "directions": "directions",
    "formulations": "formulations",
    "triangle_budget": "triangle_budget",
    "hinge_budget": "hinge_budget",
    "seed": "seed",
    "locality": "locality",
    "diamond_radius": "diamond_radius",
    "diamond_budget": "diamond_budget",
    "diamond_min_points": "diamond_min_points",
    "diameter": "diameter",
    "nondegeneracy_lemma": "nondegeneracy_lemma",
    "jobs": "jobs",
}
_TOLERANCE_KEYS = {"tau": "tau_tol", "angle": "angle_tol"}
_OUTPUT_KEYS = {"report", "csv"}
_SECTIONS = {"campaign", "tolerances", "output"}


class ConfigError(LorcompError, ValueError):
    pass


@dataclass
class ExperimentConfig:
    campaign: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


def _reject(found, allowed, where):
    extra = sorted(set(found) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def parse(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    _reject(data, _SECTIONS, "top level")
    camp = data.get("campaign", {})
    tols = data.get("tolerances", {})
    out = data.get("output", {})
    _reject(camp, _CAMPAIGN_KEYS, "[campaign]")
    _reject(tols, _TOLERANCE_KEYS, "[tolerances]")
    _reject(out, _OUTPUT_KEYS, "[output]")
    kw = {_CAMPAIGN_KEYS[k]: v for k, v in camp.items()}
    if "K_grid" in kw and not isinstance(kw["K_grid"], list):
        kw["K_grid"] = [kw["K_grid"]]
    for name in ("K_grid", "directions", "formulations"):
        if name in kw:
            kw[name] = tuple(kw[name])
    kw.update({_TOLERANCE_KEYS[k]: float(v) for k, v in tols.items()})
    return ExperimentConfig(kw, dict(out))


def load(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            return parse(fh.read().decode())
        except UnicodeDecodeError as exc:
            raise ConfigError(str(exc)) from None
