"""Scenario files (TOML, ``schema = 1``).

::

    schema = 1

    [priors]
    p0 = 0.5            # p1 optional, defaults to 1 - p0

    [f0]
    family = "exponential"
    rate = 1.5

    [f1]                # likewise [f0_adv], [f1_adv]
    family = "gaussian"
    mean = 0.0
    std = 1.0

    [classifier]        # optional for commands that do not need it
    y = [1.0986122886681098]
    gamma = [0.2, 0.3]  # optional, defaults to zeros

Families and their keys: ``exponential`` (rate), ``gaussian`` (mean, std),
``uniform`` (lo, hi), ``tabulated`` (grid, pdf) and ``mixture``
(components = array of inline tables, each with ``weight`` plus a family).
Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .classifier import Classifier1D
from .densities import Density1D, Scenario, from_dict
from .exceptions import ValidationError

SCHEMA_VERSION = 1
_TOP = {"schema", "priors", "f0", "f1", "f0_adv", "f1_adv", "classifier"}


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    classifier: Classifier1D | None


def parse_scenario(text: str) -> ScenarioFile:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"invalid TOML: {exc}") from None
    extra = set(data) - _TOP
    if extra:
        raise ValidationError(f"unknown top-level keys: {sorted(extra)}")
    if data.get("schema") != SCHEMA_VERSION:
        raise ValidationError(f"expected schema = {SCHEMA_VERSION}, got {data.get('schema')!r}")
    for key in ("priors", "f0", "f1", "f0_adv", "f1_adv"):
        if not isinstance(data.get(key), dict):
            raise ValidationError(f"missing [{key}] table")
    priors = data["priors"]
    bad = set(priors) - {"p0", "p1"}
    if bad or "p0" not in priors:
        raise ValidationError("[priors] takes p0 and optionally p1")
    dens = {k: from_dict(data[k]) for k in ("f0", "f1", "f0_adv", "f1_adv")}
    scenario = Scenario(dens["f0"], dens["f1"], dens["f0_adv"], dens["f1_adv"],
                        priors["p0"], priors.get("p1"))
    clf = None
    if "classifier" in data:
        block = data["classifier"]
        bad = set(block) - {"y", "gamma"}
        if bad or "y" not in block:
            raise ValidationError("[classifier] takes y and optionally gamma")
        clf = Classifier1D(tuple(block["y"]), tuple(block["gamma"]) if "gamma" in block else None)
    return ScenarioFile(scenario, clf)


def load_scenario(path: str | Path) -> ScenarioFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read scenario file: {exc}") from None
    return parse_scenario(text)


def _value(v) -> str:
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{ " + ", ".join(f"{k} = {_value(x)}" for k, x in v.items()) + " }"
    return repr(float(v))


def _table(name: str, d: Density1D) -> str:
    body = "\n".join(f"{k} = {_value(v)}" for k, v in d.to_dict().items())
    return f"[{name}]\n{body}\n"


def dump_scenario(s: Scenario, c: Classifier1D | None = None) -> str:
    parts = [f"schema = {SCHEMA_VERSION}\n", f"[priors]\np0 = {s.p0!r}\np1 = {s.p1!r}\n"]
    for name in ("f0", "f1", "f0_adv", "f1_adv"):
        parts.append(_table(name, getattr(s, name)))
    if c is not None:
        parts.append(f"[classifier]\ny = {_value(c.y)}\ngamma = {_value(c.gamma)}\n")
    return "\n".join(parts)
