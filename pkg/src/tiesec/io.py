"""Case files and region artifacts (JSON), plus CSV plot exports."""

from __future__ import annotations

import copy
import csv
import hashlib
import io as _io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .network import (
    Branch,
    Bus,
    DemandSite,
    Generator,
    Interconnection,
    RegionNetwork,
    RenewableSite,
    TieLinePort,
    TieLink,
    validate_network,
)

SCHEMA_VERSION = 1

_num = {"type": "number"}
_id = {"type": ["integer", "string"]}
_profile = {"type": "array", "items": _num}

CASE_SCHEMA: dict = {
    "type": "object",
    "required": ["schema_version", "n_T", "regions"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "n_T": {"type": "integer", "minimum": 1},
        "base_mva": {"type": "number", "exclusiveMinimum": 0},
        "regions": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["region_id", "reference_bus", "buses", "branches"],
                "properties": {
                    "region_id": _id,
                    "n_T": {"type": "integer", "minimum": 1},
                    "reference_bus": _id,
                    "buses": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["id"],
                            "properties": {"id": _id, "is_border": {"type": "boolean"}},
                        },
                    },
                    "branches": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["from", "to", "susceptance", "flow_min", "flow_max"],
                            "properties": {"from": _id, "to": _id, "susceptance": _num, "flow_min": _num, "flow_max": _num},
                        },
                    },
                    "generators": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["bus", "cap_min", "cap_max", "ramp_up", "ramp_down"],
                            "properties": {
                                "bus": _id,
                                "cap_min": _num,
                                "cap_max": _num,
                                "ramp_up": _num,
                                "ramp_down": _num,
                            },
                        },
                    },
                    "renewables": {
                        "type": "array",
                        "items": {"type": "object", "required": ["bus", "profile"], "properties": {"bus": _id, "profile": _profile}},
                    },
                    "demands": {
                        "type": "array",
                        "items": {"type": "object", "required": ["bus", "profile"], "properties": {"bus": _id, "profile": _profile}},
                    },
                    "tie_lines": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["border_bus", "group", "flow_min", "flow_max"],
                            "properties": {
                                "border_bus": _id,
                                "group": _id,
                                "flow_min": _num,
                                "flow_max": _num,
                                "orientation": {"enum": [1, -1]},
                            },
                        },
                    },
                },
            },
        },
        "interconnection": {
            "type": "object",
            "properties": {
                "tie_lines": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["from_region", "from_bus", "to_region", "to_bus", "reactance"],
                        "properties": {
                            "name": {"type": "string"},
                            "from_region": _id,
                            "from_bus": _id,
                            "to_region": _id,
                            "to_bus": _id,
                            "reactance": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                }
            },
        },
        "scenarios": {
            "type": "array",
            "items": {"type": "object", "required": ["name"], "properties": {"name": {"type": "string"}}},
        },
    },
}


class CaseError(ValueError):
    """Schema or model violations, each addressed by a JSON pointer."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class CaseFile:
    raw: dict
    regions: list[RegionNetwork] = field(default_factory=list)
    interconnection: Interconnection = field(default_factory=Interconnection)

    @property
    def n_T(self) -> int:
        return int(self.raw["n_T"])

    @property
    def schema_version(self) -> int:
        return int(self.raw["schema_version"])

    @property
    def scenarios(self) -> list[dict]:
        return list(self.raw.get("scenarios", []))

    def region(self, region_id) -> RegionNetwork:
        for net in self.regions:
            if net.region_id == region_id or str(net.region_id) == str(region_id):
                return net
        raise KeyError(f"no region {region_id!r} in case")

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    def sha256(self) -> str:
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()

    def with_scenario(self, name: str) -> "CaseFile":
        """Case with one scenario's profile overrides applied.

        A scenario is ``{"name": ..., "regions": {region_id: {"renewables":
        [profile, ...], "demands": [profile, ...]}}}``; listed profiles replace
        the base ones site by site.
        """
        raw = copy.deepcopy(self.raw)
        scen = next((s for s in raw.get("scenarios", []) if s["name"] == name), None)
        if scen is None:
            raise KeyError(f"no scenario {name!r}")
        for reg in raw["regions"]:
            over = scen.get("regions", {}).get(str(reg["region_id"]))
            if not over:
                continue
            for kind in ("renewables", "demands"):
                for site, prof in zip(reg.get(kind, []), over.get(kind, [])):
                    site["profile"] = list(prof)
        raw.pop("scenarios", None)
        return case_from_dict(raw)


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def _region_from_dict(d: dict, n_T: int, base_mva: float) -> RegionNetwork:
    return RegionNetwork(
        region_id=d["region_id"],
        n_T=int(d.get("n_T", n_T)),
        buses=[Bus(b["id"], bool(b.get("is_border", False))) for b in d["buses"]],
        branches=[
            Branch(b["from"], b["to"], float(b["susceptance"]), float(b["flow_min"]), float(b["flow_max"]))
            for b in d["branches"]
        ],
        generators=[
            Generator(g["bus"], float(g["cap_min"]), float(g["cap_max"]), float(g["ramp_up"]), float(g["ramp_down"]))
            for g in d.get("generators", [])
        ],
        renewables=[RenewableSite(r["bus"], tuple(float(v) for v in r["profile"])) for r in d.get("renewables", [])],
        demands=[DemandSite(r["bus"], tuple(float(v) for v in r["profile"])) for r in d.get("demands", [])],
        tie_lines=[
            TieLinePort(p["border_bus"], p["group"], float(p["flow_min"]), float(p["flow_max"]), int(p.get("orientation", 1)))
            for p in d.get("tie_lines", [])
        ],
        reference_bus=d["reference_bus"],
        base_mva=base_mva,
    )


def region_to_dict(net: RegionNetwork) -> dict:
    return {
        "region_id": net.region_id,
        "reference_bus": net.reference_bus,
        "buses": [{"id": b.id, "is_border": b.is_border} for b in net.buses],
        "branches": [
            {"from": b.from_bus, "to": b.to_bus, "susceptance": b.susceptance, "flow_min": b.flow_min, "flow_max": b.flow_max}
            for b in net.branches
        ],
        "generators": [
            {"bus": g.bus, "cap_min": g.cap_min, "cap_max": g.cap_max, "ramp_up": g.ramp_up, "ramp_down": g.ramp_down}
            for g in net.generators
        ],
        "renewables": [{"bus": r.bus, "profile": list(r.profile)} for r in net.renewables],
        "demands": [{"bus": r.bus, "profile": list(r.profile)} for r in net.demands],
        "tie_lines": [
            {"border_bus": p.border_bus, "group": p.group, "flow_min": p.flow_min, "flow_max": p.flow_max, "orientation": p.orientation}
            for p in net.tie_lines
        ],
    }


def case_to_dict(regions: list[RegionNetwork], inter: Interconnection | None = None, scenarios: list | None = None) -> dict:
    inter = inter or Interconnection()
    raw = {
        "schema_version": SCHEMA_VERSION,
        "n_T": regions[0].n_T,
        "base_mva": regions[0].base_mva,
        "regions": [region_to_dict(r) for r in regions],
        "interconnection": {
            "tie_lines": [
                {
                    "name": k.name,
                    "from_region": k.from_region,
                    "from_bus": k.from_bus,
                    "to_region": k.to_region,
                    "to_bus": k.to_bus,
                    "reactance": k.reactance,
                }
                for k in inter.links
            ]
        },
    }
    if scenarios:
        raw["scenarios"] = scenarios
    return raw


def case_from_dict(raw: dict) -> CaseFile:
    """Validate ``raw`` against the schema and the network invariants."""
    validator = jsonschema.Draft202012Validator(CASE_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise CaseError([f"{_pointer(e.absolute_path)}: {e.message}" for e in errors])
    n_T = int(raw["n_T"])
    base = float(raw.get("base_mva", 100.0))
    regions = [_region_from_dict(r, n_T, base) for r in raw["regions"]]
    problems = []
    for k, net in enumerate(regions):
        if net.n_T != n_T:
            problems.append(f"/regions/{k}/n_T: {net.n_T} != case n_T {n_T}")
        problems += [f"/regions/{k}/{p}" for p in validate_network(net)]
    ids = [r.region_id for r in regions]
    if len(set(ids)) != len(ids):
        problems.append("/regions: duplicate region_id")
    links = []
    for k, t in enumerate(raw.get("interconnection", {}).get("tie_lines", [])):
        links.append(
            TieLink(
                name=t.get("name", f"L{k}"),
                from_region=t["from_region"],
                from_bus=t["from_bus"],
                to_region=t["to_region"],
                to_bus=t["to_bus"],
                reactance=float(t["reactance"]),
            )
        )
    inter = Interconnection(links)
    if not problems:
        try:
            inter.check(regions)
        except ValueError as exc:
            problems.append(f"/interconnection/tie_lines: {exc}")
    if problems:
        raise CaseError(problems)
    return CaseFile(raw=copy.deepcopy(raw), regions=regions, interconnection=inter)


def parse_case(path: str | Path) -> CaseFile:
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    return case_from_dict(raw)


def write_json(path: str | Path, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


def rows_to_csv(header: list[str], rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v) + 0.0) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def bundled_case_path(name: str) -> Path:
    """Path of a case file shipped with the package (``case9_2p``, ``two_region``, ...)."""
    from importlib.resources import files

    fname = name if name.endswith(".json") else name + ".json"
    path = Path(str(files("tiesec") / "data" / fname))
    if not path.exists():
        raise FileNotFoundError(f"no bundled case {name!r}")
    return path


def bundled_case(name: str) -> CaseFile:
    return parse_case(bundled_case_path(name))
