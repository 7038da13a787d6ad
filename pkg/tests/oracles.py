"""Reference implementations written directly from the model definitions.

Plain Python loops, no shared code with the package beyond input data.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def truncated_poisson_expectation(f, lam: float, z_max: int = 200) -> float:
    """E[f(Z)] for Z ~ Poisson(lam), summing z = 0..z_max."""
    total = 0.0
    log_p = -lam  # log Pr[Z = 0]
    for z in range(z_max + 1):
        if z > 0:
            log_p += math.log(lam) - math.log(z) if lam > 0 else -math.inf
        total += f(z) * math.exp(log_p)
    return total


def rho(i: int, alpha, pops, infected, r) -> float:
    num = sum(infected[j] * alpha[j] * r[i][j] for j in range(len(alpha)))
    den = sum(pops[j] * alpha[j] * r[i][j] for j in range(len(alpha)))
    return num / den if den > 0 else 0.0


def infections_series(i: int, alpha, pops, infected, r, C: float, p: float) -> float:
    """Expected new infections by summing over the contact count."""
    rh = rho(i, alpha, pops, infected, r)
    s = truncated_poisson_expectation(lambda z: 1.0 - (1.0 - p) ** (z * rh), C)
    return (pops[i] - infected[i]) * alpha[i] * s


def infections_monte_carlo(i: int, alpha, pops, infected, r, C: float, p: float, n: int, seed: int):
    """Mean and standard error of (N - I0) alpha (1 - (1-p)^(X rho)), X ~ Poisson(C)."""
    rng = np.random.default_rng(seed)
    rh = rho(i, alpha, pops, infected, r)
    x = rng.poisson(C, n)
    samples = (pops[i] - infected[i]) * alpha[i] * (1.0 - (1.0 - p) ** (x * rh))
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n))


def gini_pairwise(values, weights=None) -> float:
    n = len(values)
    w = [1.0 / n] * n if weights is None else list(weights)
    mean = sum(wi * xi for wi, xi in zip(w, values))
    if mean == 0:
        return 0.0
    s = sum(w[i] * w[j] * abs(values[i] - values[j]) for i in range(n) for j in range(n))
    return s / (2.0 * mean)


class TwoLevelOracle:
    """Costs and exhaustive backward induction for a government over leaf states."""

    def __init__(self, root_kappa, kappas, etas, pops, infected, r, C=15.0, p=0.047, two_sided=True):
        self.root_kappa = root_kappa
        self.kappas, self.etas = list(kappas), list(etas)
        self.pops, self.infected = list(pops), list(infected)
        self.r = [list(row) for row in r]
        self.C, self.p = C, p
        self.two_sided = two_sided
        total = sum(pops)
        self.shares = [n / total for n in pops]

    def impact(self, alpha):
        out = []
        for i in range(len(alpha)):
            rh = rho(i, alpha, self.pops, self.infected, self.r)
            y = (1.0 - self.p) ** rh
            inf = (self.pops[i] - self.infected[i]) * alpha[i] * (1.0 - math.exp(-self.C * (1.0 - y)))
            out.append(inf / self.pops[i])
        return out

    def leaf_costs(self, alpha, parent):
        inc = self.impact(alpha)
        costs = []
        for i, a in enumerate(alpha):
            d = a - parent
            nc = d * d if self.two_sided else max(0.0, d) ** 2
            g = 1.0 - self.kappas[i] - self.etas[i]
            costs.append(self.kappas[i] * inc[i] + self.etas[i] * (1.0 - a) + g * nc)
        return costs

    def root_cost(self, alpha):
        inc = self.impact(alpha)
        c_inc = sum(s * v for s, v in zip(self.shares, inc))
        c_dec = sum(s * (1.0 - a) for s, a in zip(self.shares, alpha))
        return self.root_kappa * c_inc + (1.0 - self.root_kappa) * c_dec

    def social_cost(self, alpha, parent):
        return sum(s * c for s, c in zip(self.shares, self.leaf_costs(alpha, parent)))

    def equilibria(self, parent, n_intervals, tol=1e-9):
        """All pure grid profiles where no leaf gains more than ``tol`` by deviating."""
        grid = [j / n_intervals for j in range(n_intervals + 1)]
        found = []
        for prof in itertools.product(range(n_intervals + 1), repeat=len(self.pops)):
            alpha = [grid[j] for j in prof]
            cur = self.leaf_costs(alpha, parent)
            ok = True
            for i in range(len(alpha)):
                for j in range(n_intervals + 1):
                    trial = list(alpha)
                    trial[i] = grid[j]
                    if self.leaf_costs(trial, parent)[i] < cur[i] - tol:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                found.append(prof)
        return found

    def backward_induction(self, n_intervals, tol=1e-9):
        """Root choice with unique leaf equilibria, or None when some subgame is not unique.

        Returns ``(root_index, leaf_profile, root_cost)`` with ties in root cost
        broken by the lower social cost, then the larger action.
        """
        rows = []
        for k in range(n_intervals + 1):
            parent = k / n_intervals
            eq = self.equilibria(parent, n_intervals, tol)
            if len(eq) != 1:
                return None
            alpha = [j / n_intervals for j in eq[0]]
            rows.append((k, eq[0], self.root_cost(alpha), self.social_cost(alpha, parent)))
        best = min(r[2] for r in rows)
        tied = [r for r in rows if r[2] <= best + tol]
        best_sc = min(r[3] for r in tied)
        chosen = [r for r in tied if r[3] <= best_sc + tol]
        k, prof, cost, _ = max(chosen, key=lambda r: r[0])
        return k, prof, cost
