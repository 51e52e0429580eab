"""Per-combination dual machinery for the sum-power-constrained schedule.

For a multiplier mu > 0 pricing total power, each (subchannel, user, MCS)
combination gets

* a candidate power p*(mu): the unique root of
  marginal_value(p) = mu when mu is below the activation threshold
  (the marginal at p = 0), else 0;
* a score V(mu) = -E{U(g(p*, gamma))} + mu * p*.

On each subchannel the Lagrangian is minimized by giving the whole
subchannel to a combination with the most negative V (no allocation when
min V is not negative).  Ties within a relative tolerance form the winner
set; min-/max-power tie rules produce the two extreme discrete allocations
whose total powers bracket every optimal value at that mu.  The total
optimal power X*(mu) is nonincreasing in mu, which is what the bisection
solvers exploit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import ROOT_MAX_ITER, ROOT_REL_TOL, get_kernels
from .snr import SnrDistribution
from .utility import McsTable, UtilitySpec, expected_utility, marginal_value

V_TIE_RTOL = 1e-9

MIN_POWER = "min"
MAX_POWER = "max"


@dataclass(eq=False)
class ProblemInstance:
    """One solvable scheduling problem: distributions, MCS table, utility, budget."""

    mcs: McsTable
    utility: UtilitySpec
    dists: list[list[SnrDistribution]]  # indexed [subchannel][user]
    p_con: float

    def __post_init__(self):
        if self.p_con <= 0.0 or not np.isfinite(self.p_con):
            raise ValueError("power budget must be positive and finite")
        if not self.dists or not self.dists[0]:
            raise ValueError("need at least one subchannel and one user")
        k = len(self.dists[0])
        if any(len(row) != k for row in self.dists):
            raise ValueError("ragged distribution matrix")
        if k != self.mcs.n_users:
            raise ValueError("MCS table user count does not match distributions")
        if self.utility.n_users != k:
            raise ValueError("utility parameter count does not match users")
        if self.utility.variant == "capacity_log" and np.any(self.mcs.r > 1.0):
            raise ValueError("capacity-log utility requires rates r <= 1 "
                             "so that goodput stays below 1")
        self._flat = None

    @property
    def n_subchannels(self) -> int:
        return len(self.dists)

    @property
    def n_users(self) -> int:
        return len(self.dists[0])

    @property
    def n_mcs(self) -> int:
        return self.mcs.n_mcs

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_subchannels, self.n_users, self.n_mcs)

    # -- flat (combination, atom) packing for the kernels ------------------

    def flat(self) -> dict:
        """Arrays over combinations c = (n*K + k)*M + m, cached."""
        if self._flat is None:
            n_sub, n_usr, n_mcs = self.shape
            n_atoms = max(d.n_atoms for row in self.dists for d in row)
            gamma = np.zeros((n_sub, n_usr, n_atoms))
            w = np.zeros((n_sub, n_usr, n_atoms))
            for n, row in enumerate(self.dists):
                for k, d in enumerate(row):
                    gamma[n, k, :d.n_atoms] = d.values
                    w[n, k, :d.n_atoms] = d.weights
            c_total = n_sub * n_usr * n_mcs
            gamma_f = np.ascontiguousarray(
                np.broadcast_to(gamma[:, :, None, :], (n_sub, n_usr, n_mcs, n_atoms))
            ).reshape(c_total, n_atoms)
            w_f = np.ascontiguousarray(
                np.broadcast_to(w[:, :, None, :], (n_sub, n_usr, n_mcs, n_atoms))
            ).reshape(c_total, n_atoms)
            a_f = np.ascontiguousarray(
                np.broadcast_to(self.mcs.a[None], (n_sub, n_usr, n_mcs))).ravel()
            b_f = np.ascontiguousarray(
                np.broadcast_to(self.mcs.b[None], (n_sub, n_usr, n_mcs))).ravel()
            r_f = np.ascontiguousarray(
                np.broadcast_to(self.mcs.r[None], (n_sub, n_usr, n_mcs))).ravel()
            uparam_f = np.ascontiguousarray(np.broadcast_to(
                self.utility.param[None, :, None], (n_sub, n_usr, n_mcs))).ravel()
            self._flat = {
                "gamma": gamma_f, "w": w_f, "a": a_f, "b": b_f, "r": r_f,
                "uparam": uparam_f, "ucode": self.utility.code,
            }
        return self._flat

    def _batch(self, fn_name: str, arg) -> np.ndarray:
        fl = self.flat()
        fn = getattr(get_kernels(), fn_name)
        out = fn(fl["gamma"], fl["w"], fl["a"], fl["b"], fl["r"],
                 fl["ucode"], fl["uparam"], arg)
        return out.reshape(self.shape)

    def marginal_values_at(self, p: np.ndarray) -> np.ndarray:
        """Marginal of expected utility at per-combination powers p (N,K,M)."""
        return self._batch("marginal_values", np.asarray(p, dtype=float).ravel())

    def expected_utilities_at(self, p: np.ndarray) -> np.ndarray:
        return self._batch("expected_utilities", np.asarray(p, dtype=float).ravel())

    def power_roots_at(self, mu: float) -> np.ndarray:
        return self._batch("power_roots", float(mu))


@dataclass
class AllocationState:
    """Subchannel shares I (N,K,M) and actual powers x = I * p (N,K,M)."""

    indicator: np.ndarray
    actual_power: np.ndarray
    discrete: bool = False

    def __post_init__(self):
        self.indicator = np.asarray(self.indicator, dtype=float)
        self.actual_power = np.asarray(self.actual_power, dtype=float)
        if self.indicator.shape != self.actual_power.shape or self.indicator.ndim != 3:
            raise ValueError("indicator and actual_power must share one (N,K,M) shape")

    def validate(self, atol: float = 1e-9) -> None:
        ind, x = self.indicator, self.actual_power
        if np.any(ind < -atol) or np.any(ind > 1.0 + atol):
            raise ValueError("indicator entries outside [0, 1]")
        if np.any(ind.sum(axis=(1, 2)) > 1.0 + atol):
            raise ValueError("some subchannel is over-shared")
        if np.any(x < -atol):
            raise ValueError("negative actual power")
        if np.any((ind == 0.0) & (np.abs(x) > atol)):
            raise ValueError("power assigned to an unallocated combination")
        if self.discrete and np.any((ind != 0.0) & (np.abs(ind - 1.0) > atol)):
            raise ValueError("discrete allocation has fractional shares")

    @property
    def total_power(self) -> float:
        return float(self.actual_power.sum())

    def powers(self) -> np.ndarray:
        """Per-combination powers p = x / I with 0/0 := 0."""
        out = np.zeros_like(self.actual_power)
        mask = self.indicator > 0.0
        out[mask] = self.actual_power[mask] / self.indicator[mask]
        return out

    @classmethod
    def zeros(cls, shape: tuple[int, int, int], discrete: bool = True):
        return cls(np.zeros(shape), np.zeros(shape), discrete=discrete)


@dataclass(frozen=True)
class WinnerSet:
    """Tied Lagrangian-minimizing (user, MCS) pairs on one subchannel."""

    pairs: tuple[tuple[int, int], ...]
    v_min: float


@dataclass(frozen=True)
class MuEvaluation:
    """Everything the solvers need at one multiplier value."""

    mu: float
    p_star: np.ndarray     # (N,K,M)
    exp_util: np.ndarray   # (N,K,M) expected utility at p_star
    v: np.ndarray          # (N,K,M) = mu*p_star - exp_util
    winners: tuple[WinnerSet, ...]
    alloc_min: AllocationState = field(repr=False, default=None)
    alloc_max: AllocationState = field(repr=False, default=None)

    @property
    def total_power_min(self) -> float:
        return self.alloc_min.total_power

    @property
    def total_power_max(self) -> float:
        return self.alloc_max.total_power


def _pick(flat_winners: np.ndarray, p_row: np.ndarray, want_max: bool) -> int:
    """Index of the min-/max-power winner, lexicographic (k, m) on p ties."""
    p_w = p_row[flat_winners]
    key = -p_w if want_max else p_w
    order = np.lexsort((flat_winners, key))
    return int(flat_winners[order[0]])


def evaluate_mu(inst: ProblemInstance, mu: float) -> MuEvaluation:
    """Score all combinations at mu and build both extreme discrete allocations."""
    if not np.isfinite(mu):
        raise ValueError("multiplier must be finite")
    n_sub, n_usr, n_mcs = inst.shape
    p_star = inst.power_roots_at(mu)
    exp_util = inst.expected_utilities_at(p_star)
    v = mu * p_star - exp_util

    v2 = v.reshape(n_sub, n_usr * n_mcs)
    p2 = p_star.reshape(n_sub, n_usr * n_mcs)
    shape = inst.shape
    ind_min = np.zeros(shape)
    x_min = np.zeros(shape)
    ind_max = np.zeros(shape)
    x_max = np.zeros(shape)
    winners = []
    for n in range(n_sub):
        v_min = float(v2[n].min())
        eps = V_TIE_RTOL * max(1.0, abs(v_min))
        if v_min > -eps:
            winners.append(WinnerSet(pairs=(), v_min=v_min))
            continue
        tied = np.nonzero(v2[n] <= v_min + eps)[0]
        winners.append(WinnerSet(
            pairs=tuple((int(i) // n_mcs, int(i) % n_mcs) for i in tied),
            v_min=v_min))
        i_lo = _pick(tied, p2[n], want_max=False)
        i_hi = _pick(tied, p2[n], want_max=True)
        ind_min.reshape(n_sub, -1)[n, i_lo] = 1.0
        x_min.reshape(n_sub, -1)[n, i_lo] = p2[n, i_lo]
        ind_max.reshape(n_sub, -1)[n, i_hi] = 1.0
        x_max.reshape(n_sub, -1)[n, i_hi] = p2[n, i_hi]

    return MuEvaluation(
        mu=float(mu), p_star=p_star, exp_util=exp_util, v=v,
        winners=tuple(winners),
        alloc_min=AllocationState(ind_min, x_min, discrete=True),
        alloc_max=AllocationState(ind_max, x_max, discrete=True),
    )


# ---------------------------------------------------------------------------
# public per-combination and per-instance operations
# ---------------------------------------------------------------------------


def power_root(dist: SnrDistribution, mcs, util: UtilitySpec, mu: float,
               k: int = 0) -> float:
    """Power where the expected-utility marginal equals mu (0 above threshold)."""
    if not np.isfinite(mu):
        raise ValueError("multiplier must be finite")
    a, b, r = mcs
    kr = get_kernels()
    out = kr.power_roots(
        dist.values[None, :], dist.weights[None, :],
        np.array([a]), np.array([b]), np.array([r]),
        util.code, np.array([util.param[k]]), float(mu),
        ROOT_REL_TOL, ROOT_MAX_ITER)
    return float(out[0])


def v_metric(dist: SnrDistribution, mcs, util: UtilitySpec, mu: float,
             p_star: float, k: int = 0) -> float:
    """-E{U(g(p*, gamma))} + mu * p*."""
    return float(mu * p_star - expected_utility(dist, p_star, mcs, util, k))


def winner_sets(inst: ProblemInstance, mu: float) -> list[WinnerSet]:
    return list(evaluate_mu(inst, mu).winners)


def mu_bounds(inst: ProblemInstance) -> tuple[float, float]:
    """Multiplier range bracketing the budget-active optimum.

    mu_min is the smallest marginal when every combination spends the whole
    budget; mu_max the largest activation threshold (marginal at zero power).
    Above mu_max no combination accepts power.
    """
    shape = inst.shape
    mv_full = inst.marginal_values_at(np.full(shape, inst.p_con))
    mv_zero = inst.marginal_values_at(np.zeros(shape))
    return float(mv_full.min()), float(mv_zero.max())


def allocation_at_mu(inst: ProblemInstance, mu: float,
                     tie_rule: str = MIN_POWER) -> AllocationState:
    """Discrete Lagrangian-minimizing allocation at mu under a tie rule."""
    ev = evaluate_mu(inst, mu)
    if tie_rule == MIN_POWER:
        return ev.alloc_min
    if tie_rule == MAX_POWER:
        return ev.alloc_max
    raise ValueError(f"unknown tie rule {tie_rule!r}")


def total_power(inst: ProblemInstance, mu: float,
                tie_rule: str = MIN_POWER) -> float:
    """X*(mu): total power of the tie-resolved optimal allocation at mu."""
    return allocation_at_mu(inst, mu, tie_rule).total_power


def lagrangian(inst: ProblemInstance, mu: float,
               alloc: AllocationState) -> float:
    """L(mu, I, x) = sum_I I*F(I, x) + (sum x - P_con) * mu."""
    powers = alloc.powers()
    eu = inst.expected_utilities_at(powers)
    obj = -float((alloc.indicator * eu)[alloc.indicator > 0.0].sum())
    return obj + (alloc.total_power - inst.p_con) * mu


def allocation_utility(inst: ProblemInstance, alloc: AllocationState) -> float:
    """sum I * E{U(g(x/I, gamma))} with 0/0 := 0."""
    powers = alloc.powers()
    eu = inst.expected_utilities_at(powers)
    mask = alloc.indicator > 0.0
    return float((alloc.indicator * eu)[mask].sum())


def allocation_goodput(inst: ProblemInstance, alloc: AllocationState) -> float:
    """Expected error-free bits of an allocation, regardless of the utility."""
    total = 0.0
    powers = alloc.powers()
    idx = np.argwhere(alloc.indicator > 0.0)
    for n, k, m in idx:
        dist = inst.dists[n][k]
        a, b, r = inst.mcs.entry(k, m)
        t = dist.expectation(lambda g: (1.0 - a * np.exp(-b * powers[n, k, m] * g)) * r)
        total += alloc.indicator[n, k, m] * t
    return total
