"""Reference schemes the solvers are judged against.

* fixed-power random-user scheduling: no instantaneous CSI at all; one
  uniformly drawn user per subchannel, power P_con/N, and whichever MCS
  maximizes expected goodput at that power (a lower bound for everyone),
* perfect-CSI continuous solve: the same solver fed point masses at the
  realized SNRs (an upper bound),
* projected subgradient on the dual variable with 1/i steps: the
  convergence-speed strawman for the bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .csra import CsraResult, solve_csra
from .dual import (AllocationState, ProblemInstance, evaluate_mu, mu_bounds)
from .snr import STREAM_SCHEDULER


def fp_rus_baseline(inst: ProblemInstance,
                    seed: int) -> tuple[AllocationState, float]:
    """Random user per subchannel, power P_con/N, goodput-best fixed MCS.

    MCS selection maximizes the expected goodput (not the scenario utility)
    of the drawn user at the fixed power.  Returns the allocation and its
    total expected goodput.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed,
                                                       spawn_key=(STREAM_SCHEDULER,)))
    n_sub, n_usr, n_mcs = inst.shape
    users = rng.integers(0, n_usr, size=n_sub)
    p = inst.p_con / n_sub

    indicator = np.zeros(inst.shape)
    x = np.zeros(inst.shape)
    total_goodput = 0.0
    for n in range(n_sub):
        k = int(users[n])
        dist = inst.dists[n][k]
        best_m, best_g = 0, -np.inf
        for m in range(n_mcs):
            a, b, r = inst.mcs.entry(k, m)
            g = dist.expectation(lambda gam: (1.0 - a * np.exp(-b * p * gam)) * r)
            if g > best_g:
                best_m, best_g = m, g
        indicator[n, k, best_m] = 1.0
        x[n, k, best_m] = p
        total_goodput += best_g
    return AllocationState(indicator, x, discrete=True), total_goodput


def perfect_csi_run(inst: ProblemInstance,
                    kappa: float | None = None) -> CsraResult:
    """Continuous solve under point-mass SNRs (the clairvoyant upper bound)."""
    for row in inst.dists:
        for d in row:
            if d.n_atoms != 1:
                raise ValueError("perfect-CSI run expects point-mass distributions")
    return solve_csra(inst, kappa)


@dataclass
class SubgradientTrace:
    """Per-update multiplier, allocation utility, and total power."""

    mus: np.ndarray
    utilities: np.ndarray
    total_powers: np.ndarray

    def __len__(self):
        return self.mus.size


def subgradient_baseline(inst: ProblemInstance, n_updates: int,
                         scale: float = 1.0,
                         mu0: float | None = None) -> SubgradientTrace:
    """Dual ascent with step scale/i on the budget violation.

    mu_{i+1} = max(mu_min, mu_i + scale * (X*(mu_i) - P_con) / i); the
    allocation at each visited mu is scored by its expected utility.  The
    iterates close in on the budget-binding multiplier far slower than
    bisection, which is the point of keeping this around.
    """
    if n_updates < 1:
        raise ValueError("need at least one update")
    mu_min, mu_max = mu_bounds(inst)
    mu = 0.5 * (mu_min + mu_max) if mu0 is None else float(mu0)

    mus = np.empty(n_updates)
    utils = np.empty(n_updates)
    totals = np.empty(n_updates)
    for i in range(1, n_updates + 1):
        ev = evaluate_mu(inst, mu)
        alloc = ev.alloc_min
        mus[i - 1] = mu
        totals[i - 1] = alloc.total_power
        utils[i - 1] = float((alloc.indicator * ev.exp_util).sum())
        mu = max(mu_min, mu + scale * (alloc.total_power - inst.p_con) / i)
    return SubgradientTrace(mus=mus, utilities=utils, total_powers=totals)


def bisection_mu_trace(inst: ProblemInstance, n_updates: int) -> np.ndarray:
    """Midpoint sequence of the budget bisection (for convergence plots)."""
    mu_min, mu_max = mu_bounds(inst)
    mu_lo, mu_hi = mu_min, mu_max
    mids = np.empty(n_updates)
    for i in range(n_updates):
        mid = 0.5 * (mu_lo + mu_hi)
        mids[i] = mid
        ev = evaluate_mu(inst, mid)
        if ev.total_power_min >= inst.p_con:
            mu_lo = mid
        else:
            mu_hi = mid
    return mids


__all__ = [
    "fp_rus_baseline", "perfect_csi_run", "subgradient_baseline",
    "SubgradientTrace", "bisection_mu_trace",
]
