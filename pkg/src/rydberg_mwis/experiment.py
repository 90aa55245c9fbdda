"""Experiment configuration: parsing, hashing and the bundled fixtures.

A configuration is a JSON document with these blocks (all optional except
the problem block)::

    graph | layout | embedding   problem definition
    system      {"c6_ghz_um6", "omega_mhz", "truncate_tails"}
    ramp        {"s", "tau_us", "delta_min_mhz", "delta_max_mhz", ...}
    evolution   {"dt_us", "method", "shots", "snapshots_us", "trajectory_floor"}
    optimizer   {"tunables", "bounds", "budget", "shots", "verify_shots"}
    calibration {"plant" | "random", "target", "max_iters", "tol"}
    penalty, seed
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .embedding import AtomLayout, Embedding, grid_gadget_embedding, udg_from_layout
from .errors import InstanceError
from .evolve import EvolutionConfig
from .graph import WeightedGraph
from .hamiltonian import C6_GHZ_UM6, OMEGA_MHZ, RydbergSystem
from .optimizer import DEFAULT_BOUNDS, DEFAULT_SHOTS, TUNABLE, VERIFY_SHOTS, OptProblem
from .schedule import RampParams

FIXTURES = ("1d_uniform", "1d_weighted", "2d_21211", "2d_12122", "2d_fractional")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def load_fixture(name: str) -> dict:
    if name not in FIXTURES:
        raise InstanceError(f"unknown fixture '{name}'; choose from {', '.join(FIXTURES)}")
    text = resources.files("rydberg_mwis").joinpath("fixtures", f"{name}.json").read_text()
    return json.loads(text)


def load_config(path_or_name: str | Path) -> dict:
    """Read a config file, a run manifest, or a bundled fixture by name."""
    p = Path(path_or_name)
    if p.exists():
        try:
            cfg = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{p}: not valid JSON ({exc})") from exc
    else:
        cfg = load_fixture(str(path_or_name))
    # manifests wrap the resolved config
    if "config" in cfg and "command" in cfg:
        cfg = cfg["config"]
    if not isinstance(cfg, dict):
        raise InstanceError("config must be a JSON object")
    return cfg


@dataclass
class Experiment:
    config: dict
    logical_graph: WeightedGraph | None
    cost_graph: WeightedGraph | None
    embedding: Embedding | None
    layout: AtomLayout | None

    @property
    def seed(self) -> int:
        return int(self.config.get("seed", 0))

    @property
    def penalty(self) -> float:
        u = self.config.get("penalty")
        return self.cost_graph.default_penalty() if u is None else float(u)

    def system(self) -> RydbergSystem:
        if self.layout is None:
            raise InstanceError("config has no 'layout' or 'embedding' block, cannot build a Rydberg system")
        sys_cfg = self.config.get("system", {})
        return RydbergSystem.from_c6_ghz(self.layout, float(sys_cfg.get("c6_ghz_um6", C6_GHZ_UM6)),
                                         truncate_tails=bool(sys_cfg.get("truncate_tails", False)))

    def ramp(self) -> RampParams:
        if "ramp" not in self.config:
            raise InstanceError("config is missing the 'ramp' block")
        block = dict(self.config["ramp"])
        block.setdefault("omega_max_mhz", self.config.get("system", {}).get("omega_mhz", OMEGA_MHZ))
        return RampParams.from_config(block)

    def evolution(self) -> EvolutionConfig:
        ev = self.config.get("evolution", {})
        return EvolutionConfig(dt=float(ev.get("dt_us", 1e-3)), method=ev.get("method", "split4"),
                               snapshot_times=tuple(ev.get("snapshots_us", ())))

    @property
    def shots(self) -> int:
        return int(self.config.get("evolution", {}).get("shots", VERIFY_SHOTS))

    def opt_problem(self) -> OptProblem:
        block = self.config.get("optimizer")
        if block is None:
            raise InstanceError("config is missing the 'optimizer' block")
        bounds = dict(DEFAULT_BOUNDS)
        bounds.update({k: tuple(v) for k, v in block.get("bounds", {}).items()})
        return OptProblem(self.system(), self.cost_graph, self.ramp(),
                          tunables=tuple(block.get("tunables", TUNABLE)), bounds=bounds,
                          shots=int(block.get("shots", DEFAULT_SHOTS)), penalty=self.penalty,
                          master_seed=self.seed, evolution=self.evolution())


def build_experiment(cfg: dict, require_problem: bool = True) -> Experiment:
    """Resolve the problem block; ``require_problem=False`` allows calibration-only configs."""
    cfg = copy.deepcopy(cfg)
    if "embedding" in cfg:
        block = cfg["embedding"]
        if "gadget_weights" in block:
            emb = grid_gadget_embedding(block["gadget_weights"], spacing=float(block.get("unit_distance", 8.0)))
        else:
            emb = Embedding.from_dict(block)
        return Experiment(cfg, emb.logical_graph, emb.embedded_graph(), emb, emb.layout)
    if "layout" in cfg:
        layout = AtomLayout.from_dict(cfg["layout"])
        g = udg_from_layout(layout)
        return Experiment(cfg, g, g, None, layout)
    if "graph" in cfg:
        g = WeightedGraph.from_dict(cfg["graph"])
        return Experiment(cfg, g, g, None, None)
    if not require_problem:
        return Experiment(cfg, None, None, None, None)
    raise InstanceError("config needs one of the blocks 'graph', 'layout' or 'embedding'")
