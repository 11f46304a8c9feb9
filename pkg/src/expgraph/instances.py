"""Instance files and machine-readable run reports.

An instance file is JSON with a graph block, a coefficient block and
optional source/config blocks:

    {
      "graph": {"vertices": [{"id": "1", "m": 1.0}, ...],
                "edges": [{"u": "1", "v": "2", "w": 1.0}, ...]},
      "n": 2,
      "c": 0.5,
      "f": {"1": [...], "2": [...]},
      "f0": [...],            # optional vertex source
      "config": {"tol": ...}  # optional solver defaults
    }

Coefficient arrays align with the vertex order of the graph block.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .graphs import GraphFormatError, WeightedGraph, graph_from_dict, graph_to_dict
from .nonlinearity import ExpNonlinearity
from .solver import SolverConfig, Solution, SolutionSet

__all__ = [
    "InstanceFormatError",
    "Instance",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "save_instance",
    "instance_digest",
    "RunReport",
    "solution_to_dict",
    "solution_set_to_dict",
]

ARTIFACT_VERSION = "0.1.0"


class InstanceFormatError(ValueError):
    """The instance file violates the schema."""


@dataclass(frozen=True)
class Instance:
    graph: WeightedGraph
    eq: ExpNonlinearity
    config: Optional[SolverConfig]
    raw: dict


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise InstanceFormatError("instance must be a JSON object")
    try:
        graph = graph_from_dict(data["graph"])
    except KeyError as exc:
        raise InstanceFormatError("missing graph block") from exc
    except GraphFormatError as exc:
        raise InstanceFormatError(str(exc)) from exc
    try:
        n = int(data["n"])
        c = float(data.get("c", 0.0))
        fblock = data["f"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"bad coefficient block: {exc}") from exc
    if n < 1:
        raise InstanceFormatError("n must be a positive integer")
    rows = []
    for i in range(1, n + 1):
        key = str(i)
        if key not in fblock:
            raise InstanceFormatError(f"missing coefficient row {key!r}")
        row = np.asarray(fblock[key], dtype=float)
        if row.shape != (graph.k,):
            raise InstanceFormatError(
                f"coefficient row {key!r} has length {row.shape}, expected {graph.k}")
        rows.append(row)
    f0 = None
    if data.get("f0") is not None:
        f0 = np.asarray(data["f0"], dtype=float)
        if f0.shape != (graph.k,):
            raise InstanceFormatError("f0 length does not match the vertex count")
    if not np.all(np.isfinite(np.vstack(rows))) or not np.isfinite(c) \
            or (f0 is not None and not np.all(np.isfinite(f0))):
        raise InstanceFormatError("non-finite numeric in instance")
    try:
        eq = ExpNonlinearity(np.vstack(rows), c, f0)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc
    config = None
    if data.get("config") is not None:
        cfg_data = data["config"]
        known = {f.name for f in fields(SolverConfig)}
        bad = set(cfg_data) - known
        if bad:
            raise InstanceFormatError(f"unknown config keys: {sorted(bad)}")
        config = SolverConfig(**cfg_data)
    return Instance(graph, eq, config, data)


def instance_to_dict(graph: WeightedGraph, eq: ExpNonlinearity,
                     config: Optional[SolverConfig] = None) -> dict:
    data = {
        "graph": graph_to_dict(graph),
        "n": eq.n,
        "c": eq.c,
        "f": {str(i): [float(v) for v in eq.coeff(i)] for i in range(1, eq.n + 1)},
    }
    if eq.f0 is not None:
        data["f0"] = [float(v) for v in eq.f0]
    if config is not None:
        data["config"] = asdict(config)
    return data


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def save_instance(path, graph, eq, config=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(graph, eq, config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def instance_digest(data: dict) -> str:
    """Content hash, stable under key reordering."""
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# reports


def solution_to_dict(sol: Solution) -> dict:
    return {
        "u": [float(v) for v in sol.u],
        "residual_norm": float(sol.residual_norm),
        "jac_sign": int(sol.jac_sign),
        "certified": bool(sol.certified),
    }


def solution_set_to_dict(sols: SolutionSet) -> dict:
    return {
        "solutions": [solution_to_dict(s) for s in sols],
        "count": len(sols),
        "exhaustive": bool(sols.exhaustive),
    }


@dataclass
class RunReport:
    command: str
    instance_digest: str
    seed: int
    config: dict
    results: dict
    timings: dict
    artifact_version: str = ARTIFACT_VERSION

    def payload(self) -> dict:
        """Deterministic part of the report (timings excluded)."""
        return {
            "command": self.command,
            "artifact_version": self.artifact_version,
            "instance_digest": self.instance_digest,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
        }

    def to_json(self) -> str:
        body = self.payload()
        body["timings"] = self.timings
        return json.dumps(body, indent=2, sort_keys=True)
