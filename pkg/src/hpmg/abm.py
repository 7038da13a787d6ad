"""Simplified multi-period agent-based contact process.

Used as an independent check on the closed form: individuals are simulated
one by one, contact counts are drawn explicitly, exposed people incubate for
a fixed number of periods before they become infectious.  Every individual
consumes the same random draws each period whatever the policy, so curves
over a policy or initial-rate grid share common random numbers.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from hpmg.infection import EpidemicParams, expected_infections

CSV_HEADER = ("alpha", "init_rate", "closed_form", "abm_mean", "abm_stderr", "replications")


@dataclass(frozen=True)
class AbmConfig:
    epi: EpidemicParams
    periods: int = 8
    incubation_delay: int = 7
    replications: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.periods < 1:
            raise ValueError("periods must be >= 1")
        if self.incubation_delay < 0:
            raise ValueError("incubation delay must be >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for name, arr in (("populations", self.epi.populations), ("initial_infected", self.epi.initial_infected)):
            if np.any(arr != np.round(arr)):
                raise ValueError(f"agent-based simulation needs integer {name}")


@dataclass(frozen=True)
class AbmTrajectory:
    """Replication means; arrays are ``(periods, n_leaves)``.

    ``manifested`` counts people who became infectious (exposure plus the
    incubation delay), ``exposed`` counts exposures as they happen.  Both are
    cumulative and exclude the initially infected.
    """

    manifested: np.ndarray
    manifested_stderr: np.ndarray
    exposed: np.ndarray
    exposed_stderr: np.ndarray
    final_total_mean: float
    final_total_stderr: float
    replications: int


def _replication(config: AbmConfig, alpha: np.ndarray, rep: int) -> tuple[np.ndarray, np.ndarray]:
    epi = config.epi
    rng = np.random.default_rng([config.seed, rep])
    pops = epi.populations.astype(np.int64)
    n_leaves = pops.size
    leaf = np.repeat(np.arange(n_leaves), pops)
    total = leaf.size
    # 0 susceptible, 1 infectious, 2 incubating
    status = np.zeros(total, dtype=np.int8)
    starts = np.concatenate(([0], np.cumsum(pops)[:-1]))
    for a in range(n_leaves):
        status[starts[a] : starts[a] + int(epi.initial_infected[a])] = 1
    manifest_at = np.full(total, np.iinfo(np.int64).max, dtype=np.int64)
    r = epi.transport.entries
    active = alpha[leaf]

    exposed_cum = np.zeros((config.periods, n_leaves))
    manifested_cum = np.zeros((config.periods, n_leaves))
    for t in range(1, config.periods + 1):
        infectious = np.bincount(leaf[status == 1], minlength=n_leaves)
        incubating = np.bincount(leaf[status == 2], minlength=n_leaves)
        num = r @ (infectious * alpha)
        den = r @ ((pops - incubating) * alpha)
        rho = np.zeros(n_leaves)
        np.divide(num, den, out=rho, where=den > 0)

        u_active = rng.random(total)
        contacts = rng.poisson(epi.contact_mean, total)
        u_infect = rng.random(total)
        p_inf = -np.expm1(contacts * rho[leaf] * epi.log_escape)
        exposed = (status == 0) & (u_active < active) & (u_infect < p_inf)
        status[exposed] = 2
        manifest_at[exposed] = t + config.incubation_delay
        became = (status == 2) & (manifest_at <= t)
        status[became] = 1

        exposed_cum[t - 1] = np.bincount(leaf[manifest_at < np.iinfo(np.int64).max], minlength=n_leaves)
        manifested_cum[t - 1] = np.bincount(leaf[manifest_at <= t], minlength=n_leaves)
    return manifested_cum, exposed_cum


def _chunk(args) -> tuple[np.ndarray, np.ndarray]:
    config, alpha, reps = args
    runs = [_replication(config, alpha, rep) for rep in reps]
    return np.stack([m for m, _ in runs]), np.stack([e for _, e in runs])


def simulate_abm(config: AbmConfig, leaf_actions: Sequence[float], workers: int = 1) -> AbmTrajectory:
    """Replication-averaged cumulative infections per period and leaf.

    Replication ``k`` draws from the stream seeded by ``(seed, k)``, so the
    result does not depend on ``workers``.
    """
    alpha = np.asarray(leaf_actions, dtype=float)
    if alpha.shape != (config.epi.n_leaves,):
        raise ValueError(f"need {config.epi.n_leaves} leaf actions, got {alpha.shape}")
    if np.any((alpha < 0) | (alpha > 1)):
        raise ValueError("actions must lie in [0, 1]")
    reps = list(range(config.replications))
    if workers > 1 and config.replications > 1:
        chunks = [reps[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, [(config, alpha, c) for c in chunks]))
        manifested = np.empty((config.replications, config.periods, alpha.size))
        exposed = np.empty_like(manifested)
        for c, (m, e) in zip(chunks, parts):
            manifested[c], exposed[c] = m, e
    else:
        manifested, exposed = _chunk((config, alpha, reps))

    n = config.replications

    def stderr(x: np.ndarray):
        return x.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(x.shape[1:])

    totals = manifested[:, -1, :].sum(axis=1)
    return AbmTrajectory(
        manifested=manifested.mean(axis=0),
        manifested_stderr=stderr(manifested),
        exposed=exposed.mean(axis=0),
        exposed_stderr=stderr(exposed),
        final_total_mean=float(totals.mean()),
        final_total_stderr=float(stderr(totals[:, None])[0]),
        replications=n,
    )


def with_initial_rate(epi: EpidemicParams, rate: float) -> EpidemicParams:
    """Same populations and transport, every leaf starting at ``round(rate * N)`` infected."""
    inf = np.round(rate * epi.populations)
    return EpidemicParams(epi.transport, epi.populations, inf, epi.contact_mean, epi.transmission_prob)


def compare_closed_form(
    config: AbmConfig,
    alpha_grid: Sequence[float],
    init_rate_grid: Sequence[float],
    workers: int = 1,
) -> list[dict]:
    """Closed-form total vs. simulated total for each shared (policy, initial rate).

    The simulated figure is the cumulative number of people who have become
    infectious by the last period, summed over leaves.
    """
    for v in list(alpha_grid) + list(init_rate_grid):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"grid value {v} outside [0, 1]")
    rows = []
    for rate in init_rate_grid:
        epi = with_initial_rate(config.epi, rate)
        cfg = AbmConfig(epi, config.periods, config.incubation_delay, config.replications, config.seed)
        for alpha in alpha_grid:
            shared = np.full(epi.n_leaves, float(alpha))
            traj = simulate_abm(cfg, shared, workers)
            rows.append(
                {
                    "alpha": float(alpha),
                    "init_rate": float(rate),
                    "closed_form": float(expected_infections(shared, epi).sum()),
                    "abm_mean": traj.final_total_mean,
                    "abm_stderr": traj.final_total_stderr,
                    "replications": config.replications,
                }
            )
    rows.sort(key=lambda row: (row["init_rate"], row["alpha"]))
    return rows


def write_comparison_csv(rows: Sequence[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in CSV_HEADER])
    return path


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else repr(float(v))
