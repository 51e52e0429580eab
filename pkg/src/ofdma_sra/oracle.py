"""Brute-force references used by the test/acceptance suites.

Nothing here touches the dual machinery's root-finds: the grid oracle does
an exhaustive search over a discretized power simplex (organized as exact
dynamic programming over the shared budget, which visits the same optimum
as plain enumeration at a fraction of the cost), and the Lagrangian oracle
enumerates every discrete indicator outright.
"""

from __future__ import annotations

import itertools

import numpy as np

from .dual import AllocationState, ProblemInstance, evaluate_mu
from .utility import expected_utility

GRID_MAX_ACTIVE = 4
GRID_MAX_POINTS = 2000


def grid_power_oracle(inst: ProblemInstance, indicator: np.ndarray,
                      grid_points: int) -> tuple[np.ndarray, float]:
    """Best utility of a fixed discrete allocation over a power grid.

    Powers live on the lattice {0, d, 2d, ..., P_con}, d = P_con/grid_points,
    subject to the shared budget.  Accuracy is O(P_con/grid_points) in each
    power coordinate.  Returns (powers (N,K,M), utility).
    """
    indicator = np.asarray(indicator, dtype=float)
    active = [tuple(idx) for idx in np.argwhere(indicator > 0.0)]
    if len(active) > GRID_MAX_ACTIVE:
        raise ValueError(f"grid oracle limited to {GRID_MAX_ACTIVE} active "
                         f"combinations, got {len(active)}")
    if not (1 <= grid_points <= GRID_MAX_POINTS):
        raise ValueError(f"grid_points must be in [1, {GRID_MAX_POINTS}]")

    powers = np.zeros(inst.shape)
    if not active:
        return powers, 0.0

    levels = np.linspace(0.0, inst.p_con, grid_points + 1)
    per_combo = []
    for (n, k, m) in active:
        eu = expected_utility(inst.dists[n][k], levels, inst.mcs.entry(k, m),
                              inst.utility, k)
        per_combo.append(np.asarray(eu))

    # DP over budget levels: best[t] = max utility with exactly t grid units
    # spent on the combinations seen so far.
    best = per_combo[0].copy()
    choices = []
    for eu in per_combo[1:]:
        new = np.full_like(best, -np.inf)
        choice = np.zeros(best.size, dtype=np.int64)
        for s in range(best.size):
            cand = best[:best.size - s] + eu[s]
            seg = new[s:]
            upd = cand > seg
            seg[upd] = cand[upd]
            choice[s:][upd] = s
        best = new
        choices.append(choice)

    t = int(np.argmax(best))
    utility = float(best[t])
    spent = []
    for choice in reversed(choices):
        s = int(choice[t])
        spent.append(s)
        t -= s
    spent.append(t)
    spent.reverse()
    for (n, k, m), s in zip(active, spent):
        powers[n, k, m] = levels[s]
    return powers, utility


def exhaustive_lagrangian_min(inst: ProblemInstance, mu: float,
                              max_hypotheses: int = 20000):
    """Minimize the Lagrangian at mu over every discrete indicator.

    Per-combination powers come from the stationarity root at mu, so for a
    candidate indicator the Lagrangian is -mu*P_con plus the sum of the
    selected combinations' scores; the enumeration checks them all.
    Returns (AllocationState, actual powers, Lagrangian value).
    """
    n_sub, n_usr, n_mcs = inst.shape
    n_hyp = (n_usr * n_mcs + 1) ** n_sub
    if n_hyp > max_hypotheses:
        raise ValueError(
            f"exhaustive search needs {n_hyp} hypotheses; raise "
            f"max_hypotheses (currently {max_hypotheses}) to allow this")

    ev = evaluate_mu(inst, mu)
    v2 = ev.v.reshape(n_sub, n_usr * n_mcs)
    p2 = ev.p_star.reshape(n_sub, n_usr * n_mcs)

    options = list(range(-1, n_usr * n_mcs))  # -1 encodes "no allocation"
    best_combo = None
    best_l = np.inf
    for combo in itertools.product(options, repeat=n_sub):
        l_val = -mu * inst.p_con
        for n, c in enumerate(combo):
            if c >= 0:
                l_val += v2[n, c]
        if l_val < best_l:
            best_l = l_val
            best_combo = combo

    indicator = np.zeros(inst.shape)
    x = np.zeros(inst.shape)
    ind2 = indicator.reshape(n_sub, -1)
    x2 = x.reshape(n_sub, -1)
    for n, c in enumerate(best_combo):
        if c >= 0:
            ind2[n, c] = 1.0
            x2[n, c] = p2[n, c]
    alloc = AllocationState(indicator, x, discrete=True)
    return alloc, x, float(best_l)
