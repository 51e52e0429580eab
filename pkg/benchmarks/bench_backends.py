#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot kernels on flat combination arrays and a full
continuous solve at two sizes:

    python benchmarks/bench_backends.py            # desk scale
    python benchmarks/bench_backends.py --size full  # N=64, K=16, M=15

The same comparison can be forced process-wide with
``OFDMA_SRA_BACKEND=numpy`` / ``=numba``.
"""

import argparse
import time

import numpy as np

from ofdma_sra import (McsTable, ProblemInstance, SnrDistribution,
                       UtilitySpec, set_backend, solve_csra)
from ofdma_sra.kernels import _NUMBA, _NUMPY

SIZES = {
    "desk": dict(n_sub=16, n_usr=4, n_mcs=4, n_atoms=32, snr_db=10.0),
    "full": dict(n_sub=64, n_usr=16, n_mcs=15, n_atoms=64, snr_db=10.0),
}


def build(n_sub, n_usr, n_mcs, n_atoms, snr_db):
    rng = np.random.default_rng(0)
    dists = [[SnrDistribution(rng.exponential(1.0, n_atoms),
                              np.full(n_atoms, 1.0 / n_atoms))
              for _ in range(n_usr)] for _ in range(n_sub)]
    return ProblemInstance(
        mcs=McsTable.qam(n_usr, n_mcs), utility=UtilitySpec.goodput(n_usr),
        dists=dists, p_con=n_sub * 10 ** (snr_db / 10.0))


def time_call(fn, *args, repeat=5):
    fn(*args)  # warm-up (and numba compile)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", choices=SIZES, default="desk")
    args = ap.parse_args()

    if _NUMBA is None:
        raise SystemExit("numba is not importable; nothing to compare")

    inst = build(**SIZES[args.size])
    fl = inst.flat()
    mu = 0.5 * 10 ** (-1)
    p = np.full(fl["a"].shape, 2.0)
    kargs = (fl["gamma"], fl["w"], fl["a"], fl["b"], fl["r"], fl["ucode"],
             fl["uparam"])

    print(f"size={args.size}: {inst.n_subchannels}x{inst.n_users}"
          f"x{inst.n_mcs} combinations, {fl['gamma'].shape[1]} atoms")
    print(f"{'kernel':22s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, extra in (("marginal_values", (p,)),
                        ("expected_utilities", (p,)),
                        ("power_roots", (mu,))):
        t_nb = time_call(getattr(_NUMBA, name), *kargs, *extra)
        t_np = time_call(getattr(_NUMPY, name), *kargs, *extra)
        print(f"{name:22s} {t_nb * 1e3:9.2f}ms {t_np * 1e3:9.2f}ms "
              f"{t_np / t_nb:7.1f}x")

    for name in ("numba", "numpy"):
        set_backend(name)
        try:
            t = time_call(lambda: solve_csra(inst), repeat=3)
        finally:
            set_backend(None)
        print(f"solve_csra [{name}]    {t * 1e3:9.2f}ms")


if __name__ == "__main__":
    main()
