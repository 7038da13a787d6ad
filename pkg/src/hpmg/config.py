"""YAML scenario files.

A scenario file is self-contained: game, epidemic, solver and experiment
sections plus output names.  See ``docs/config.md`` for the schema.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from hpmg.infection import EpidemicParams, TransportMatrix, make_transport_matrix
from hpmg.solver import SolverParams
from hpmg.tree import ComplianceMode, PlayerTree, build_hierarchy

KNOWN_SECTIONS = {
    "name", "seed", "compliance", "hierarchy", "epidemic", "solver",
    "abm", "freeride", "fairness", "output",
}
SOLVER_KEYS = {"grid_delta", "max_steps", "responders", "epsilon_limit", "search", "restart_budget", "tie_tol"}


class ConfigError(ValueError):
    pass


def transport_from_spec(spec: Mapping[str, Any] | None, n_leaves: int) -> TransportMatrix:
    spec = spec or {"kind": "symmetric"}
    if "matrix" in spec:
        return TransportMatrix(spec["matrix"])
    kind = spec.get("kind", "symmetric")
    if kind == "symmetric":
        return make_transport_matrix("symmetric", n_leaves)
    return make_transport_matrix(
        kind,
        n_leaves,
        favorites=spec.get("favorites"),
        share=spec.get("share"),
        per=spec.get("per", "aggregate"),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    raw: dict[str, Any]
    source: str = field(default="<memory>", compare=False)

    def __post_init__(self):
        unknown = set(self.raw) - KNOWN_SECTIONS
        if unknown:
            raise ConfigError(f"{self.source}: unknown top-level key(s) {sorted(unknown)}")
        try:
            ComplianceMode.parse(self.raw.get("compliance", "two-sided"))
        except ValueError as exc:
            raise ConfigError(f"{self.source}: compliance: {exc}") from None
        extra = set(self.raw.get("solver") or {}) - SOLVER_KEYS
        if extra:
            raise ConfigError(f"{self.source}: solver: unknown key(s) {sorted(extra)}")
        if "hierarchy" in self.raw:
            self.tree()
            self.epidemic_params()
        self.solver_params()

    @property
    def name(self) -> str:
        return str(self.raw.get("name", Path(self.source).stem))

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def compliance(self) -> ComplianceMode:
        return ComplianceMode.parse(self.raw.get("compliance", "two-sided"))

    def section(self, key: str) -> dict[str, Any]:
        return dict(self.raw.get(key) or {})

    def tree(self) -> PlayerTree:
        if "hierarchy" not in self.raw:
            raise ConfigError(f"{self.source}: no hierarchy section")
        try:
            return build_hierarchy(self.raw["hierarchy"])
        except ValueError as exc:
            raise ConfigError(f"{self.source}: hierarchy: {exc}") from None

    def epidemic_params(self, tree: PlayerTree | None = None) -> EpidemicParams:
        tree = tree or self.tree()
        ep = self.section("epidemic")
        try:
            transport = transport_from_spec(ep.get("transport"), tree.size(tree.n_levels))
            return EpidemicParams.from_tree(
                tree,
                transport,
                float(ep.get("contact_mean", 15.0)),
                float(ep.get("transmission_prob", 0.047)),
            )
        except ValueError as exc:
            raise ConfigError(f"{self.source}: epidemic: {exc}") from None

    def solver_params(self) -> SolverParams:
        s = self.section("solver")
        kwargs = {k: s[k] for k in SOLVER_KEYS if k in s}
        for k in ("max_steps", "responders", "epsilon_limit", "search"):
            if isinstance(kwargs.get(k), list):
                kwargs[k] = tuple(kwargs[k])
        try:
            return SolverParams(seed=self.seed, **kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.source}: solver: {exc}") from None

    def with_overrides(self, *, seed: int | None = None, grid_delta: float | None = None) -> "ScenarioConfig":
        raw = copy.deepcopy(self.raw)
        if seed is not None:
            raw["seed"] = int(seed)
        if grid_delta is not None:
            raw.setdefault("solver", {})["grid_delta"] = float(grid_delta)
        return ScenarioConfig(raw, self.source)

    def output_name(self, key: str, default: str) -> str:
        return str(self.section("output").get(key, default))

    def digest(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def dumps(self) -> str:
        return yaml.safe_dump(self.raw, sort_keys=False)


def parse_config(text: str, source: str = "<memory>") -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: invalid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return ScenarioConfig(raw, source)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def shipped_configs() -> dict[str, Path]:
    root = Path(__file__).parent / "configs"
    return {p.stem: p for p in sorted(root.glob("*.yaml"))}
