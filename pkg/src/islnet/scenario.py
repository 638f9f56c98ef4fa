"""Scenario files: validated, fully-materialised experiment inputs.

A scenario is a YAML (or JSON) document naming the constellation, the
candidate motifs, dynamics and traffic parameters, and sweep lists.  On
load every default is materialised so the manifest records the complete
effective configuration; the scenario hash covers that materialised form,
making reruns reproducible from the manifest alone.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .geometry import ConstellationConfig, WalkerKind
from .structure import GridMode, LatticeKind, Motif, parse_feature, parse_motif, prm_gen


class ScenarioError(ValueError):
    """Scenario file is malformed or fails validation."""


_DEFAULT_MOTIFS = [
    "(1,1)", "(1,0)", "(1,-1)", "(1,-2)",
    "(1,1)+(1,0)", "(1,0)+(1,-1)", "(1,-1)+(1,-2)",
    "(1,1)+(1,-1)", "(1,0)+(1,-2)", "(1,1)+(1,-2)",
]

# extra measurement-only features so the availability study spans orders 1..3
_DEFAULT_EXTRA_FEATURES = ["(0,-2)", "(0,-3)", "(2,0)", "(2,2)", "(2,-2)", "(3,0)", "(3,-3)"]

_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "constellation"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "constellation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "planes": {"type": "integer", "minimum": 1},
                "sats_per_plane": {"type": "integer", "minimum": 1},
                "phase_factor": {"type": "integer"},
                "inclination_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 90},
                "altitude_km": {"type": "number", "exclusiveMinimum": 0},
                "kind": {"enum": ["delta", "star"]},
                "derive": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["max_satellites", "lattice", "grid"],
                    "properties": {
                        "max_satellites": {"type": "integer", "minimum": 4},
                        "lattice": {"enum": ["L1", "L2", "L3", "L4", "L5"]},
                        "grid": {"enum": ["+Grid", "*Grid"]},
                    },
                },
            },
        },
        "isl_capacity_gbps": {"type": "number", "exclusiveMinimum": 0},
        "motifs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "extra_availability_features": {"type": "array", "items": {"type": "string"}},
        "baseline_motifs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "throughput_motifs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "epoch_s": {"type": "number", "minimum": 0},
        "dynamics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fail_coefficient": {"type": "number", "minimum": 0, "maximum": 1},
                "recovery_s": {"type": "number", "exclusiveMinimum": 0},
                "step_s": {"type": "number", "exclusiveMinimum": 0},
                "horizon_periods": {"type": "number", "exclusiveMinimum": 0},
                "seeds": {"type": "integer", "minimum": 1},
            },
        },
        "traffic": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "population": {"type": "string"},
                "demands": {"type": "integer", "minimum": 1},
                "max_demands": {"type": "integer", "minimum": 1},
                "demands_file": {"type": ["string", "null"]},
            },
        },
        "sweeps": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "phase_factors": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "queue_delays_ms": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "loads": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            },
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lattices": {
                    "type": "array", "minItems": 1,
                    "items": {"enum": ["L1", "L2", "L3", "L4", "L5"]},
                },
                "max_iterations": {"type": "integer", "minimum": 1},
                "max_satellites": {"type": "integer", "minimum": 4},
                "max_candidates": {"type": "integer", "minimum": 1},
            },
        },
        "outputs": {"type": ["string", "null"]},
    },
}

EXPERIMENTS = (
    "availability",
    "capacity",
    "stretch_vs_F",
    "length_stretch_corr",
    "rtt_sweep",
    "throughput_load",
    "optimize",
    "pareto",
)


@dataclass
class Scenario:
    """A fully-materialised scenario; ``raw`` is its canonical dict form."""

    name: str
    seed: int
    config: ConstellationConfig
    capacity_gbps: float
    motifs: list[Motif]
    extra_availability_features: list
    baseline_motifs: list[Motif]
    throughput_motifs: list[Motif]
    epoch_s: float
    fail_coefficient: float
    recovery_s: float
    step_s: float
    horizon_periods: float
    n_seeds: int
    population: str
    demand_count: int
    max_demands: int
    demands_file: str | None
    phase_factors: list[int]
    queue_delays_ms: list[float]
    loads: list[int]
    opt_lattices: list[LatticeKind]
    opt_max_iterations: int
    opt_max_satellites: int
    opt_max_candidates: int
    outputs: str | None
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def horizon_s(self) -> float:
        steps = max(int(round(self.horizon_periods * self.config.period_s / self.step_s)), 10)
        return steps * self.step_s

    def scenario_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()


def _materialise(doc: dict) -> dict:
    """Fill every default so the manifest records the effective scenario."""
    out = {
        "name": doc["name"],
        "seed": int(doc.get("seed", 42)),
        "constellation": dict(doc["constellation"]),
        "isl_capacity_gbps": float(doc.get("isl_capacity_gbps", 10.0)),
        "motifs": list(doc.get("motifs", _DEFAULT_MOTIFS)),
        "extra_availability_features": list(
            doc.get("extra_availability_features", _DEFAULT_EXTRA_FEATURES)
        ),
        "baseline_motifs": list(doc.get("baseline_motifs", ["(1,0)", "(1,-1)", "(1,0)+(1,-1)"])),
        "throughput_motifs": list(doc.get("throughput_motifs", ["(1,0)", "(1,-1)", "(1,0)+(1,-1)"])),
        "epoch_s": float(doc.get("epoch_s", 0.0)),
        "dynamics": {
            "fail_coefficient": 0.05, "recovery_s": 60.0, "step_s": 10.0,
            "horizon_periods": 2.0, "seeds": 5,
            **doc.get("dynamics", {}),
        },
        "traffic": {
            "population": "builtin", "demands": 500, "max_demands": 5000,
            "demands_file": None,
            **doc.get("traffic", {}),
        },
        "sweeps": {
            "phase_factors": [0, 3, 6, 9, 12, 15, 18, 21],
            "queue_delays_ms": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
            "loads": [100, 250, 500, 1000, 1500, 2000, 2500, 3000, 3500, 4000, 4500, 5000],
            **doc.get("sweeps", {}),
        },
        "optimizer": {
            "lattices": ["L1", "L2", "L3", "L4", "L5"],
            "max_iterations": 100,
            "max_satellites": 0,  # 0 = size of the base constellation
            "max_candidates": 1000,
            **doc.get("optimizer", {}),
        },
        "outputs": doc.get("outputs"),
    }
    cons = out["constellation"]
    cons.setdefault("phase_factor", 0)
    cons.setdefault("altitude_km", 1000.0)
    cons.setdefault("kind", "delta")
    return out


def _build_config(cons: dict) -> ConstellationConfig:
    kind = WalkerKind(cons["kind"])
    if "derive" in cons:
        if "inclination_deg" not in cons:
            raise ScenarioError("constellation.inclination_deg: required for derived constellations")
        d = cons["derive"]
        return prm_gen(
            math.radians(cons["inclination_deg"]),
            d["max_satellites"],
            LatticeKind(d["lattice"]),
            kind,
            GridMode(d["grid"]),
            altitude_km=cons["altitude_km"],
            base_shape=(
                (cons["planes"], cons["sats_per_plane"], cons["phase_factor"])
                if "planes" in cons and "sats_per_plane" in cons
                else None
            ),
        )
    for key in ("planes", "sats_per_plane", "inclination_deg"):
        if key not in cons:
            raise ScenarioError(f"constellation.{key}: required field is missing")
    return ConstellationConfig(
        cons["planes"],
        cons["sats_per_plane"],
        cons["phase_factor"],
        math.radians(cons["inclination_deg"]),
        cons["altitude_km"],
        kind,
    )


def bundled_scenario_path(name: str) -> Path | None:
    ref = resources.files("islnet").joinpath(f"data/scenarios/{name}.yaml")
    with resources.as_file(ref) as path:
        return path if path.exists() else None


def load_scenario(source) -> Scenario:
    """Load and validate a scenario from a path or a bundled fixture name."""
    path = Path(source)
    if not path.exists():
        bundled = bundled_scenario_path(str(source))
        if bundled is None:
            raise ScenarioError(f"scenario {source!r} is neither a file nor a bundled fixture")
        path = bundled
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse scenario {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"scenario {path} must be a mapping")
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    validator = jsonschema.Draft202012Validator(_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            where = ".".join(str(p) for p in err.absolute_path) or "<root>"
            lines.append(f"{where}: {err.message}")
        raise ScenarioError("invalid scenario: " + "; ".join(lines))
    raw = _materialise(doc)
    try:
        config = _build_config(raw["constellation"])
        motifs = [parse_motif(t) for t in raw["motifs"]]
        extra = [parse_feature(t) for t in raw["extra_availability_features"]]
        baselines = [parse_motif(t) for t in raw["baseline_motifs"]]
        thr_motifs = [parse_motif(t) for t in raw["throughput_motifs"]]
    except (ValueError, ScenarioError) as exc:
        raise ScenarioError(str(exc)) from exc
    dyn = raw["dynamics"]
    traffic = raw["traffic"]
    sweeps = raw["sweeps"]
    opt = raw["optimizer"]
    if traffic["population"] != "builtin" and not Path(traffic["population"]).exists():
        raise ScenarioError(f"traffic.population: file {traffic['population']!r} does not exist")
    if traffic["demands_file"] and not Path(traffic["demands_file"]).exists():
        raise ScenarioError(f"traffic.demands_file: file {traffic['demands_file']!r} does not exist")
    return Scenario(
        name=raw["name"],
        seed=raw["seed"],
        config=config,
        capacity_gbps=raw["isl_capacity_gbps"],
        motifs=motifs,
        extra_availability_features=extra,
        baseline_motifs=baselines,
        throughput_motifs=thr_motifs,
        epoch_s=raw["epoch_s"],
        fail_coefficient=dyn["fail_coefficient"],
        recovery_s=dyn["recovery_s"],
        step_s=dyn["step_s"],
        horizon_periods=dyn["horizon_periods"],
        n_seeds=dyn["seeds"],
        population=traffic["population"],
        demand_count=traffic["demands"],
        max_demands=traffic["max_demands"],
        demands_file=traffic["demands_file"],
        phase_factors=list(sweeps["phase_factors"]),
        queue_delays_ms=[float(x) for x in sweeps["queue_delays_ms"]],
        loads=list(sweeps["loads"]),
        opt_lattices=[LatticeKind(x) for x in opt["lattices"]],
        opt_max_iterations=opt["max_iterations"],
        opt_max_satellites=opt["max_satellites"] or config.n_sats,
        opt_max_candidates=opt["max_candidates"],
        outputs=raw["outputs"],
        raw=raw,
    )


@dataclass
class RunManifest:
    """Record of one experiment run: inputs, version, and outputs.

    ``csv_rows`` holds the data row count of every CSV output so consumers
    can verify files against the manifest.
    """

    scenario_name: str
    scenario_hash: str
    seed: int
    version: str
    experiment: str
    outputs: list[str]
    parameters: dict
    csv_rows: dict[str, int] = field(default_factory=dict)

    def write(self, path) -> None:
        doc = {
            "scenario_name": self.scenario_name,
            "scenario_hash": self.scenario_hash,
            "seed": self.seed,
            "version": self.version,
            "experiment": self.experiment,
            "outputs": self.outputs,
            "csv_rows": self.csv_rows,
            "parameters": self.parameters,
        }
        Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
