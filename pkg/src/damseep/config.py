"""Run configuration: JSON in, validated RunConfig out.

The JSON layout is governed by the schema shipped next to the package
(schema/config.schema.json). Parsing fills every omitted field with its
default, so the effective configuration can be echoed back (and hashed)
in full.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import jsonschema

from .errors import ConfigError, DamseepError
from .fem import SolverSettings
from .geometry import (
    INTERVENTION_KINDS,
    MaterialProperties,
    Permeability,
    SahandParams,
    Scenario,
    TABLE_MATERIALS,
    default_concrete,
)
from .meshing import MeshOptions


@dataclass(frozen=True)
class ReportThresholds:
    """Discharge traffic-light bands, L/s. Defaults are invented numbers."""

    discharge_green_lps: float = 6.0
    discharge_red_lps: float = 12.0

    def __post_init__(self) -> None:
        if not 0 < self.discharge_green_lps <= self.discharge_red_lps:
            raise ConfigError("need 0 < green <= red discharge thresholds")


@dataclass(frozen=True)
class RunConfig:
    name: str
    section: SahandParams
    scenarios: tuple  # of Scenario
    mesh: MeshOptions = field(default_factory=MeshOptions)
    solver: SolverSettings = field(default_factory=SolverSettings)
    output_dir: str = "runs"
    crest_length: float = 450.0
    report: ReportThresholds = field(default_factory=ReportThresholds)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        names = [s.name for s in self.scenarios]
        if len(names) != len(set(names)):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ConfigError(f"duplicate scenario names: {dupes}")
        if not self.scenarios:
            raise ConfigError("config needs at least one scenario")

    def scenario(self, name: str) -> Scenario:
        for s in self.scenarios:
            if s.name == name:
                return s
        known = [s.name for s in self.scenarios]
        raise ConfigError(f"no scenario named {name!r} (have {known})")

    def to_dict(self) -> dict:
        """The effective configuration with every default materialized."""
        sec = dataclasses.asdict(self.section)
        sec.pop("materials")
        sec.pop("crest_length")
        return {
            "name": self.name,
            "crest_length": self.crest_length,
            "output_dir": self.output_dir,
            "section": sec,
            "materials": {
                m.name: {
                    "k": {"value": m.k.value_in_input_unit(), "unit": m.k.unit},
                    "gamma": m.gamma,
                    "phi": m.phi,
                    "cohesion": m.cohesion,
                }
                for m in self.section.materials
            },
            "mesh": {
                "target_size": self.mesh.target_size,
                "quality_angle": self.mesh.quality_angle,
                "zone_sizes": dict(self.mesh.zone_sizes),
                "min_size": self.mesh.min_size,
                "max_rounds": self.mesh.max_rounds,
            },
            "solver": dataclasses.asdict(self.solver),
            "scenarios": [_scenario_dict(s) for s in self.scenarios],
            "report": dataclasses.asdict(self.report),
        }


def _scenario_dict(s: Scenario) -> dict:
    out = {
        "name": s.name,
        "reservoir_level": s.reservoir_level,
        "tailwater_level": s.tailwater_level,
        "interventions": [],
    }
    for iv in s.interventions:
        d = {"type": iv.kind}
        for f in dataclasses.fields(iv):
            v = getattr(iv, f.name)
            if isinstance(v, MaterialProperties):
                v = v.name
            d[f.name] = v
        out["interventions"].append(d)
    return out


def config_hash(config: RunConfig) -> str:
    """sha256 over the canonical effective configuration."""
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _schema() -> dict:
    text = resources.files("damseep.schema").joinpath("config.schema.json")
    return json.loads(text.read_text())


def _material(name: str, spec: dict) -> MaterialProperties:
    k = spec["k"]
    return MaterialProperties(
        name,
        Permeability.from_value(k["value"], k["unit"]),
        gamma=spec.get("gamma", 0.0),
        phi=spec.get("phi", 0.0),
        cohesion=spec.get("cohesion", 0.0),
    )


def _intervention(raw: dict, table: dict, where: str):
    kind = raw["type"]
    cls = INTERVENTION_KINDS.get(kind)
    if cls is None:
        raise ConfigError(
            f"{where}: unknown intervention type {kind!r} "
            f"(valid: {sorted(INTERVENTION_KINDS)})"
        )
    allowed = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key == "type":
            continue
        if key not in allowed:
            raise ConfigError(
                f"{where}: unknown key {key!r} for {kind} "
                f"(valid: {sorted(allowed)})"
            )
        if key == "material":
            if value not in table:
                raise ConfigError(
                    f"{where}: material {value!r} is not in the material table"
                )
            value = table[value]
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, DamseepError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Validate a JSON document and build the fully-defaulted RunConfig."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc

    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "(top level)"
        raise ConfigError(f"config invalid at {path}: {e.message}")

    table = {m.name: m for m in TABLE_MATERIALS}
    for name, spec in raw.get("materials", {}).items():
        try:
            table[name] = _material(name, spec)
        except DamseepError as exc:
            raise ConfigError(f"material {name!r}: {exc}") from exc
    concrete = default_concrete()
    table.setdefault(concrete.name, concrete)

    section_kw = dict(raw.get("section", {}))
    crest_length = raw.get("crest_length", SahandParams.crest_length)
    try:
        section = SahandParams(
            materials=tuple(table.values()),
            crest_length=crest_length,
            **section_kw,
        )
    except DamseepError as exc:
        raise ConfigError(f"section: {exc}") from exc

    mesh_kw = dict(raw.get("mesh", {}))
    if "zone_sizes" in mesh_kw:
        mesh_kw["zone_sizes"] = tuple(sorted(mesh_kw["zone_sizes"].items()))
    solver_kw = raw.get("solver", {})
    try:
        mesh = MeshOptions(**mesh_kw)
        solver = SolverSettings(**solver_kw)
    except DamseepError as exc:
        raise ConfigError(str(exc)) from exc

    scenarios = []
    for s in raw["scenarios"]:
        where = f"scenario {s['name']!r}"
        ivs = tuple(
            _intervention(iv, table, where) for iv in s.get("interventions", ())
        )
        try:
            scenarios.append(
                Scenario(
                    name=s["name"],
                    reservoir_level=s["reservoir_level"],
                    tailwater_level=s.get("tailwater_level"),
                    interventions=ivs,
                )
            )
        except DamseepError as exc:
            raise ConfigError(f"{where}: {exc}") from exc

    report = ReportThresholds(**raw.get("report", {}))
    return RunConfig(
        name=raw.get("name", "sahand"),
        section=section,
        scenarios=tuple(scenarios),
        mesh=mesh,
        solver=solver,
        output_dir=raw.get("output_dir", "runs"),
        crest_length=crest_length,
        report=report,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def packaged_config(stem: str) -> str:
    """Text of a configuration shipped with the package (e.g. 'sahand_baseline')."""
    ref = resources.files("damseep.data").joinpath(f"{stem}.json")
    try:
        return ref.read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"no packaged config named {stem!r}") from exc
