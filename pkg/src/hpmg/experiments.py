"""Free-riding sweeps and fairness trials on two-state hierarchies."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
import yaml

from hpmg.config import ConfigError, ScenarioConfig, transport_from_spec
from hpmg.costs import evaluate_costs
from hpmg.infection import EpidemicParams, aggregate_transport
from hpmg.solver import solve_hg_pspne, verify_equilibrium
from hpmg.tree import PlayerTree, build_hierarchy

log = logging.getLogger(__name__)

FREERIDE_HEADER = ("gamma", "init_rate_2", "alpha1", "alpha2", "state_diff", "county_avg_diff", "eps_max")


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def grid_axis(value, name: str) -> list[float]:
    if isinstance(value, Mapping):
        start, stop, step = (float(value[k]) for k in ("start", "stop", "step"))
        n = int(round((stop - start) / step))
        if n < 0 or abs(start + n * step - stop) > 1e-9:
            raise ConfigError(f"{name}: step {step} does not reach {stop} from {start}")
        return [round(start + k * step, 12) for k in range(n + 1)]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in value]


def collapse_to_states(tree: PlayerTree, epi: EpidemicParams) -> tuple[PlayerTree, EpidemicParams]:
    """Drop the leaf level: its parents become leaves that implement their own policy.

    Populations and infections are summed; transport is aggregated with
    population weights.  Exact when every leaf in a group sees the same
    infected fraction, which holds for equal-rate groups under symmetric or
    group-favourite transport.
    """
    L = tree.n_levels
    if L < 3:
        raise ValueError("collapsing needs at least three levels")
    groups = tree.parent_arrays[L - 1]
    n_groups = tree.size(L - 1)
    pops = np.bincount(groups, weights=epi.populations, minlength=n_groups)
    inf = np.bincount(groups, weights=epi.initial_infected, minlength=n_groups)
    spec = tree.to_spec()
    levels = spec["levels"][:-1]
    for i, row in enumerate(levels[-1]):
        row.pop("share", None)
        row["population"] = float(pops[i])
        row["infected"] = float(inf[i])
    new_tree = build_hierarchy({"levels": levels})
    transport = aggregate_transport(epi.transport, epi.populations, groups)
    return new_tree, EpidemicParams(transport, pops, inf, epi.contact_mean, epi.transmission_prob)


def state_weights(gamma: float, emphasis: float) -> dict[str, float]:
    """``kappa = s (1 - gamma)``, ``eta = (1 - s)(1 - gamma)``."""
    return {"kappa": emphasis * (1.0 - gamma), "eta": (1.0 - emphasis) * (1.0 - gamma)}


def two_state_game(
    *,
    gamma: float | Sequence[float],
    init_rates: Sequence[float],
    emphasis: Sequence[float],
    root_kappa: float = 0.5,
    counties_per_state: int = 5,
    state_population: float = 500.0,
    transport: Mapping[str, Any] | None = None,
    counties_constrained: bool = True,
    contact_mean: float = 15.0,
    transmission_prob: float = 0.047,
    county_rates: Sequence[Sequence[float]] | None = None,
    county_weights: Sequence[Sequence[Mapping[str, float]]] | None = None,
) -> tuple[PlayerTree, EpidemicParams]:
    """Government, two states and their counties (or the states as leaves).

    Counties inherit their state's initial rate and weights unless
    ``county_rates``/``county_weights`` override them.  ``transport`` is a
    county-level spec; ``{"kind": "favorites", "favorite_state": 1}`` marks
    the counties of that state as favourite destinations.  With
    ``counties_constrained`` the counties implement their state's policy and
    the game collapses to two levels.
    """
    gammas = list(gamma) if isinstance(gamma, Sequence) else [float(gamma)] * 2
    c = int(counties_per_state)
    county_pop = state_population / c
    states, counties = [], []
    for s in range(2):
        w = state_weights(gammas[s], emphasis[s])
        states.append({"name": f"state{s + 1}", "parent": 0, **w})
        for k in range(c):
            rate = county_rates[s][k] if county_rates is not None else init_rates[s]
            cw = county_weights[s][k] if county_weights is not None else w
            counties.append(
                {
                    "name": f"county{s + 1}.{k + 1}",
                    "parent": s,
                    "kappa": cw["kappa"],
                    "eta": cw["eta"],
                    "population": county_pop,
                    "infected": rate * county_pop,
                }
            )
    tree = build_hierarchy({"levels": [[{"name": "government", "kappa": root_kappa}], states, counties]})

    spec = dict(transport or {"kind": "symmetric"})
    per = spec.get("per", "aggregate")
    if "favorite_state" in spec:
        fav_state = int(spec.pop("favorite_state")) - 1
        spec["favorites"] = list(range(fav_state * c, (fav_state + 1) * c))
        if counties_constrained and per == "leaf":
            # the states are the leaves of the effective game
            spec["favorites"] = [fav_state]
            state_tree, state_epi = collapse_to_states(
                tree, EpidemicParams(transport_from_spec(None, 2 * c), [county_pop] * 2 * c,
                                     [n["infected"] for n in counties], contact_mean, transmission_prob)
            )
            r = transport_from_spec(spec, 2)
            return state_tree, EpidemicParams(r, state_epi.populations, state_epi.initial_infected,
                                              contact_mean, transmission_prob)
    r = transport_from_spec(spec, 2 * c)
    epi = EpidemicParams.from_tree(tree, r, contact_mean, transmission_prob)
    if counties_constrained:
        return collapse_to_states(tree, epi)
    return tree, epi


@dataclass(frozen=True)
class FreerideRow:
    gamma: float
    init_rate_2: float
    alpha1: float
    alpha2: float
    state_diff: float
    county_avg_diff: float
    eps_max: float
    root_alpha: float = math.nan
    epsilons: tuple[float, ...] = ()
    verified: bool | None = None
    error: str = ""


def _freeride_point(args) -> FreerideRow:
    params, gamma, rate2, mode, solver_params, verify = args
    try:
        tree, epi = two_state_game(
            gamma=gamma,
            init_rates=(params["init_rate_1"], rate2),
            emphasis=params["emphasis"],
            root_kappa=params["root_kappa"],
            counties_per_state=params["counties_per_state"],
            state_population=params["state_population"],
            transport=params["transport"],
            counties_constrained=params["counties_constrained"],
            contact_mean=params["contact_mean"],
            transmission_prob=params["transmission_prob"],
        )
        res = solve_hg_pspne(tree, epi, mode, solver_params)
        a1, a2 = res.profile.levels[1]
        if tree.n_levels == 3:
            leaf = np.asarray(res.profile.levels[2])
            groups = tree.parent_arrays[2]
            avg = [float(leaf[groups == s].mean()) for s in range(2)]
        else:
            avg = [a1, a2]
        verified = None
        if verify:
            verified = verify_equilibrium(res, tree, epi, mode, solver_params).passed
        return FreerideRow(
            gamma, rate2, a1, a2, a1 - a2, avg[0] - avg[1], res.epsilon_max,
            res.profile.levels[0][0], res.epsilons, verified,
        )
    except Exception as exc:  # recorded per row; the sweep keeps going
        log.warning("freeride point gamma=%s rate2=%s failed: %s", gamma, rate2, exc)
        nan = math.nan
        return FreerideRow(gamma, rate2, nan, nan, nan, nan, nan, error=f"{type(exc).__name__}: {exc}")


def freeride_settings(config: ScenarioConfig) -> dict[str, Any]:
    fr = config.section("freeride")
    if not fr:
        raise ConfigError(f"{config.source}: no freeride section")
    emphasis = fr.get("infection_emphasis", 0.9)
    if isinstance(emphasis, (int, float)):
        emphasis = [float(emphasis)] * 2
    ep = config.section("epidemic")
    out = {
        "gamma": grid_axis(fr.get("gamma", {"start": 0.0, "stop": 1.0, "step": 0.05}), "freeride.gamma"),
        "init_rate_1": float(fr.get("init_rate_1", 0.1)),
        "init_rate_2": grid_axis(fr.get("init_rate_2", [0.7, 0.8, 0.9]), "freeride.init_rate_2"),
        "emphasis": [float(e) for e in emphasis],
        "root_kappa": float(fr.get("root_kappa", 0.5)),
        "counties_per_state": int(fr.get("counties_per_state", 5)),
        "state_population": float(fr.get("state_population", 500.0)),
        "transport": dict(fr.get("transport") or {"kind": "symmetric"}),
        "counties_constrained": bool(fr.get("counties_constrained", True)),
        "verify": bool(fr.get("verify", True)),
        "contact_mean": float(ep.get("contact_mean", 15.0)),
        "transmission_prob": float(ep.get("transmission_prob", 0.047)),
    }
    for g in out["gamma"]:
        if not 0.0 <= g <= 1.0:
            raise ConfigError(f"{config.source}: freeride.gamma value {g} outside [0, 1]")
    for s in out["emphasis"]:
        if not 0.0 <= s <= 1.0:
            raise ConfigError(f"{config.source}: freeride.infection_emphasis {s} outside [0, 1]")
    return out


def run_freeride_sweep(config: ScenarioConfig, workers: int = 1) -> list[FreerideRow]:
    """Solve the two-state game over the (gamma, State 2 initial rate) grid."""
    params = freeride_settings(config)
    solver_params = config.solver_params()
    mode = config.compliance
    items = [
        (params, g, r2, mode, solver_params, params["verify"])
        for r2 in params["init_rate_2"]
        for g in params["gamma"]
    ]
    rows = _map(_freeride_point, items, workers)
    return sorted(rows, key=lambda r: (r.init_rate_2, r.gamma))


def write_freeride_csv(rows: Iterable[FreerideRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FREERIDE_HEADER)
        for row in rows:
            w.writerow([repr(float(getattr(row, k))) for k in FREERIDE_HEADER])
    return path


def gini(values: Sequence[float], weights: Sequence[float] | None = None) -> float:
    """Weighted Gini coefficient: mean absolute difference over twice the mean.

    ``weights`` must be non-negative and sum to one (uniform when omitted).
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("gini needs a non-empty 1-d sequence")
    if np.any(x < 0):
        raise ValueError("gini is undefined for negative values")
    if weights is None:
        w = np.full(x.size, 1.0 / x.size)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != x.shape:
            raise ValueError("weights and values differ in length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
    mean = float(w @ x)
    if mean == 0.0:
        return 0.0
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    w_before = np.cumsum(ws) - ws
    s_before = np.cumsum(ws * xs) - ws * xs
    g = float(np.sum(ws * (xs * w_before - s_before)) / mean)
    return min(max(g, 0.0), 1.0)


@dataclass(frozen=True)
class FairnessRecord:
    trial: int
    scenario: str
    gini: float
    policies: tuple[float, ...]
    eps_max: float
    draws: dict[str, Any] = field(default_factory=dict)
    error: str = ""


def _draw(spec, rng: np.random.Generator, n: int, name: str):
    """A fixed value, or ``{low, high, per}`` drawn once ('shared') or ``n`` times."""
    if isinstance(spec, (int, float)):
        return [float(spec)] * n
    if isinstance(spec, Mapping):
        low, high = float(spec["low"]), float(spec["high"])
        if not 0.0 <= low <= high <= 1.0:
            raise ConfigError(f"{name}: need 0 <= low <= high <= 1")
        if spec.get("per", "shared") == "shared":
            return [float(rng.uniform(low, high))] * n
        return [float(v) for v in rng.uniform(low, high, size=n)]
    if isinstance(spec, list) and len(spec) == n:
        return [float(v) for v in spec]
    raise ConfigError(f"{name}: cannot interpret {spec!r}")


def draw_trial(scenario: Mapping[str, Any], layout: Mapping[str, Any], rng: np.random.Generator) -> dict[str, Any]:
    """Random game parameters for one trial, in a fixed draw order."""
    c = layout["counties_per_state"]
    d: dict[str, Any] = {}
    d["root_kappa"] = _draw(scenario.get("root_kappa", 0.5), rng, 1, "root_kappa")[0]
    se = scenario.get("state_emphasis", {"low": 0.0, "high": 1.0, "per": "state"})
    d["state_emphasis"] = [d["root_kappa"]] * 2 if se == "root" else _draw(se, rng, 2, "state_emphasis")
    d["state_gamma"] = _draw(scenario.get("state_gamma", 0.0), rng, 2, "state_gamma")
    ce = scenario.get("county_emphasis", "state")
    d["county_emphasis"] = (
        [d["state_emphasis"][s] for s in range(2) for _ in range(c)] if ce == "state"
        else _draw(ce, rng, 2 * c, "county_emphasis")
    )
    cg = scenario.get("county_gamma", "state")
    d["county_gamma"] = (
        [d["state_gamma"][s] for s in range(2) for _ in range(c)] if cg == "state"
        else _draw(cg, rng, 2 * c, "county_gamma")
    )
    rate = scenario.get("init_rate", {"low": 0.05, "high": 0.95, "per": "county"})
    if isinstance(rate, Mapping) and rate.get("per") == "state":
        per_state = _draw(rate, rng, 2, "init_rate")
        d["init_rate"] = [per_state[s] for s in range(2) for _ in range(c)]
    else:
        d["init_rate"] = _draw(rate, rng, 2 * c, "init_rate")
    return d


def _fairness_trial(args) -> FairnessRecord:
    label, index, draws, layout, mode, solver_params, base = args
    c = layout["counties_per_state"]
    try:
        county_rates = [draws["init_rate"][s * c : (s + 1) * c] for s in range(2)]
        county_weights = [
            [state_weights(draws["county_gamma"][s * c + k], draws["county_emphasis"][s * c + k]) for k in range(c)]
            for s in range(2)
        ]
        tree, epi = two_state_game(
            gamma=draws["state_gamma"],
            init_rates=[0.0, 0.0],
            emphasis=draws["state_emphasis"],
            root_kappa=draws["root_kappa"],
            counties_per_state=c,
            state_population=layout["state_population"],
            transport=layout["transport"],
            counties_constrained=False,
            contact_mean=layout["contact_mean"],
            transmission_prob=layout["transmission_prob"],
            county_rates=county_rates,
            county_weights=county_weights,
        )
        res = solve_hg_pspne(tree, epi, mode, solver_params)
        leaf = tree.n_levels
        shares = tree.share_arrays[leaf - 1]
        if base == "policy":
            values = np.asarray(res.profile.levels[-1])
        else:
            values = evaluate_costs(res.profile, tree, epi, mode).overall[leaf - 1]
        return FairnessRecord(index, label, gini(values, shares / shares.sum()), tuple(res.profile.levels[-1]),
                              res.epsilon_max, draws)
    except Exception as exc:
        log.warning("fairness trial %s/%d failed: %s", label, index, exc)
        return FairnessRecord(index, label, math.nan, (), math.nan, draws, f"{type(exc).__name__}: {exc}")


def fairness_layout(config: ScenarioConfig) -> dict[str, Any]:
    fa = config.section("fairness")
    if not fa:
        raise ConfigError(f"{config.source}: no fairness section")
    ep = config.section("epidemic")
    scenarios = fa.get("scenarios")
    if not scenarios:
        raise ConfigError(f"{config.source}: fairness.scenarios is empty")
    return {
        "counties_per_state": int(fa.get("counties_per_state", 2)),
        "state_population": float(fa.get("state_population", 500.0)),
        "transport": dict(fa.get("transport") or {"kind": "symmetric"}),
        "gini_base": str(fa.get("gini_base", "cost")),
        "contact_mean": float(ep.get("contact_mean", 15.0)),
        "transmission_prob": float(ep.get("transmission_prob", 0.047)),
        "scenarios": list(scenarios),
    }


def run_fairness_trials(config: ScenarioConfig, workers: int = 1) -> list[FairnessRecord]:
    """Solve randomised three-level games and record the Gini of county costs.

    Trial ``t`` of scenario ``s`` draws from the stream seeded by
    ``(seed, s, t)``, so any trial can be replayed on its own.
    """
    layout = fairness_layout(config)
    if layout["gini_base"] not in ("cost", "policy"):
        raise ConfigError(f"{config.source}: fairness.gini_base must be 'cost' or 'policy'")
    solver_params = config.solver_params()
    items = []
    for s, scenario in enumerate(layout["scenarios"]):
        label = str(scenario.get("label", f"scenario{s + 1}"))
        for t in range(int(scenario.get("trials", 50))):
            rng = np.random.default_rng([config.seed, s, t])
            draws = draw_trial(scenario, layout, rng)
            items.append((label, t, draws, layout, config.compliance, solver_params, layout["gini_base"]))
    records = _map(_fairness_trial, items, workers)
    failed = sum(1 for r in records if r.error)
    if failed:
        log.warning("%d of %d fairness trials failed and are excluded from aggregates", failed, len(records))
    return records


def fairness_header(n_leaves: int) -> tuple[str, ...]:
    return ("trial", "scenario", "gini") + tuple(f"policy_{i + 1}" for i in range(n_leaves)) + ("eps_max",)


def write_fairness_csv(records: Sequence[FairnessRecord], path: str | Path, n_leaves: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fairness_header(n_leaves))
        for r in records:
            policies = list(r.policies) if r.policies else [math.nan] * n_leaves
            w.writerow([r.trial, r.scenario, repr(float(r.gini))] + [repr(float(p)) for p in policies]
                       + [repr(float(r.eps_max))])
    return path


def write_draw_log(records: Sequence[FairnessRecord], path: str | Path) -> Path:
    path = Path(path)
    entries = [{"scenario": r.scenario, "trial": r.trial, "draws": r.draws, "error": r.error} for r in records]
    path.write_text(yaml.safe_dump(entries, sort_keys=False))
    return path
