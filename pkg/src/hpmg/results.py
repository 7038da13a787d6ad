"""Result files: the solved profile, per-level epsilon and diagnostics.

A result file is YAML with a fixed schema id and the hash of the scenario it
came from.  It holds no timings, so identical runs write identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Any

import yaml

from hpmg.config import ScenarioConfig
from hpmg.solver import EquilibriumResult, LevelDiagnostics
from hpmg.tree import ActionProfile

SCHEMA = "hpmg-result/1"
DIAGNOSTICS_HEADER = ("level", "epsilon", "steps", "cycles", "restarts")


class ResultError(ValueError):
    pass


def result_document(result: EquilibriumResult, config: ScenarioConfig) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "scenario": config.name,
        "config_hash": config.digest(),
        "compliance": config.compliance.value,
        "grid_intervals": result.n_intervals,
        "profile": [list(lv) for lv in result.profile.levels],
        "grid_profile": [list(lv) for lv in result.grid_profile],
        "epsilon": list(result.epsilons),
        "root_ties": list(result.root_ties),
        "root_costs": list(result.root_costs),
        "diagnostics": [
            {
                "level": d.level,
                "steps": d.steps,
                "cycles": d.cycles,
                "restarts": d.restarts,
                "budget_exhausted": d.budget_exhausted,
            }
            for d in result.levels
        ],
        "subgames_solved": result.subgames_solved,
        "total_steps": result.total_steps,
        "total_cycles": result.total_cycles,
        "total_restarts": result.total_restarts,
    }


def write_result(result: EquilibriumResult, config: ScenarioConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(result_document(result, config), sort_keys=False))
    return path


def write_diagnostics_csv(result: EquilibriumResult, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTICS_HEADER)
        for d, eps in zip(result.levels, result.epsilons):
            w.writerow([d.level, repr(float(eps)), d.steps, d.cycles, d.restarts])
    return path


def read_result(path: str | Path, config: ScenarioConfig | None = None) -> EquilibriumResult:
    """Load a result file; with ``config`` the stored hash must match it."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ResultError(f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ResultError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        found = doc.get("schema") if isinstance(doc, dict) else None
        raise ResultError(f"{path}: expected schema {SCHEMA!r}, found {found!r}")
    missing = [k for k in ("config_hash", "grid_intervals", "grid_profile", "epsilon", "diagnostics") if k not in doc]
    if missing:
        raise ResultError(f"{path}: missing field(s) {missing}")
    if config is not None and doc["config_hash"] != config.digest():
        raise ResultError(f"{path}: written for a different scenario (config hash mismatch)")
    n = int(doc["grid_intervals"])
    grid = tuple(tuple(int(v) for v in lv) for lv in doc["grid_profile"])
    if len(doc["epsilon"]) != len(grid) or len(doc["diagnostics"]) != len(grid):
        raise ResultError(f"{path}: epsilon/diagnostics do not match the number of levels")
    for lv in grid:
        if any(not 0 <= v <= n for v in lv):
            raise ResultError(f"{path}: grid coordinate outside 0..{n}")
    return EquilibriumResult(
        profile=ActionProfile(tuple(tuple(v / n for v in lv) for lv in grid)),
        grid_profile=grid,
        epsilons=tuple(float(e) for e in doc["epsilon"]),
        n_intervals=n,
        levels=tuple(
            LevelDiagnostics(int(d["level"]), int(d["steps"]), int(d["cycles"]), int(d["restarts"]),
                             bool(d.get("budget_exhausted", False)))
            for d in doc["diagnostics"]
        ),
        root_costs=tuple(float(c) for c in doc.get("root_costs", ())),
        root_ties=tuple(float(t) for t in doc.get("root_ties", ())),
        subgames_solved=int(doc.get("subgames_solved", 0)),
        total_steps=int(doc.get("total_steps", 0)),
        total_cycles=int(doc.get("total_cycles", 0)),
        total_restarts=int(doc.get("total_restarts", 0)),
    )
