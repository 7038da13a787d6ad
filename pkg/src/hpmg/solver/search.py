"""One-dimensional searches over an action grid ``{0, 1/n, ..., 1}``.

All searches return the *largest* minimising index: among actions whose cost
is within ``tie_tol`` of the minimum, the weakest intervention wins.
"""

from __future__ import annotations

from typing import Callable, Sequence

TIE_TOL = 1e-9


def grid_argmin(f: Callable[[int], float], n_points: int, tie_tol: float = TIE_TOL) -> tuple[int, float]:
    values = [f(j) for j in range(n_points)]
    best = min(values)
    for j in range(n_points - 1, -1, -1):
        if values[j] <= best + tie_tol:
            return j, values[j]
    raise AssertionError("unreachable")


def mi_argmin(costs: Sequence[float], socials: Sequence[float], tie_tol: float = TIE_TOL) -> int:
    """Lexicographic choice: own cost, then social cost, then the largest index."""
    best = min(costs)
    ties = [j for j, c in enumerate(costs) if c <= best + tie_tol]
    best_sc = min(socials[j] for j in ties)
    return max(j for j in ties if socials[j] <= best_sc + tie_tol)


def is_unimodal(values: Sequence[float], tol: float = TIE_TOL) -> bool:
    """Strictly decreasing, then flat (the minimum), then strictly increasing.

    Steps within ``tol`` count as flat.  Any segment may be empty.
    """
    phase = 0  # 0 falling, 1 flat bottom, 2 rising
    for a, b in zip(values, values[1:]):
        d = b - a
        if d < -tol:
            if phase != 0:
                return False
        elif d > tol:
            phase = 2
        else:
            if phase == 2:
                return False
            phase = 1
    return True


def ternary_argmin(
    f: Callable[[int], float], n_points: int, tie_tol: float = TIE_TOL
) -> tuple[int, float, bool]:
    """Ternary search for the largest minimiser of a unimodal grid function.

    Returns ``(index, value, consistent)``.  ``consistent`` is False when the
    points that were evaluated are not themselves unimodal in index order; the
    caller should then fall back to :func:`grid_argmin`.
    """
    seen: dict[int, float] = {}

    def val(j: int) -> float:
        if j not in seen:
            seen[j] = f(j)
        return seen[j]

    lo, hi = 0, n_points - 1
    # the endpoints join the check so a boundary minimum behind a bump is caught
    val(lo), val(hi)
    while hi - lo > 2:
        third = (hi - lo) // 3
        m1, m2 = lo + third, hi - third
        f1, f2 = val(m1), val(m2)
        if f1 < f2 - tie_tol:
            hi = m2 - 1
        else:
            # f1 > f2: m1 is on the falling side.  f1 ~ f2: either both sit on
            # the flat bottom (answer >= m2) or they straddle it (answer in
            # (m1, m2)); in both cases the answer lies right of m1.
            lo = m1 + 1
    tail = [(j, val(j)) for j in range(lo, hi + 1)]
    best = min(v for _, v in tail)
    j_best = max(j for j, v in tail if v <= best + tie_tol)
    order = sorted(seen)
    consistent = is_unimodal([seen[j] for j in order], tie_tol)
    return j_best, seen[j_best], consistent
