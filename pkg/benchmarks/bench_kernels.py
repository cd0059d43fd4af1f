"""Wall-clock comparison of the compiled and pure-Python simulation backends.

Usage: python benchmarks/bench_kernels.py [--K 15] [--T 20000] [--mode restless]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from risingbandits.env import make_synthetic_suite, noise_table, payoff_table
from risingbandits.kernels import available_backends, simulate
from risingbandits.registry import ALL_POLICIES, ORACLE, PolicySpec, policy_rng, resolve


def bench(K: int, T: int, rested: bool, sigma: float = 0.1, seed: int = 0):
    payoffs = payoff_table(make_synthetic_suite(K, seed), T)
    rewards = payoffs + sigma * noise_table([seed, 0], K, T)
    rows = []
    for name in ALL_POLICIES:
        if name == ORACLE:
            continue
        res = resolve(PolicySpec(name), K, T, sigma)
        timings, arms = {}, {}
        for backend in available_backends():
            t0 = time.perf_counter()
            arms[backend] = simulate(res, rewards, rested, T, policy_rng(seed, 0, name), backend=backend)
            timings[backend] = time.perf_counter() - t0
        same = len({a.tobytes() for a in arms.values()}) == 1
        rows.append((name, timings.get("compiled"), timings["python"], same))
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--K", type=int, default=15)
    p.add_argument("--T", type=int, default=20000)
    p.add_argument("--mode", choices=["rested", "restless"], default="restless")
    args = p.parse_args()
    rows = bench(args.K, args.T, args.mode == "rested")
    print(f"K={args.K} T={args.T} {args.mode}")
    print(f"{'policy':>14s} {'compiled s':>11s} {'python s':>10s} {'speedup':>8s}  identical")
    for name, tc, tp, same in rows:
        if tc is None:
            print(f"{name:>14s} {'-':>11s} {tp:10.3f} {'-':>8s}  -")
        else:
            print(f"{name:>14s} {tc:11.4f} {tp:10.3f} {tp / max(tc, 1e-9):8.1f}  {same}")
    tot_c = sum(r[1] or 0.0 for r in rows)
    tot_p = sum(r[2] for r in rows)
    print(f"{'total':>14s} {tot_c:11.4f} {tot_p:10.3f} {tot_p / max(tot_c, 1e-9):8.1f}")


if __name__ == "__main__":
    main()
