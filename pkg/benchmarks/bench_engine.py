#!/usr/bin/env python3
"""Benchmark the compiled event-loop kernel against the pure-Python fallback.

Runs the same replication on both engines, verifies the outputs are
bit-identical, and reports events/second and the speedup.

    python benchmarks/bench_engine.py [--jobs 200000] [--n 200]
"""

import argparse
import time

import numpy as np

from hetjsq import validate_config
from hetjsq.simulation import _engine_py
from hetjsq.simulation.harness import SimConfig, SQd, _engine_args, replication_seed

try:
    from hetjsq.simulation import _engine_cy
except ImportError:
    _engine_cy = None


def bench(engine, args, seed, repeats=1):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = engine.simulate_replication(*args, seed)
        best = min(best, time.perf_counter() - t0)
    return out, best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--jobs", type=int, default=200_000)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--lam", type=float, default=0.9)
    ap.add_argument("--seed", type=int, default=1)
    opts = ap.parse_args()

    system = validate_config([(4 / 3, 0.5), (2 / 3, 0.5)], opts.lam, 1.0)
    cfg = SimConfig(
        system=system,
        n_servers=opts.n,
        scheme=SQd(2),
        horizon=opts.jobs,
        replications=1,
        seed=opts.seed,
    )
    args = _engine_args(cfg)
    seed = replication_seed(opts.seed, 0)

    res_py, t_py = bench(_engine_py, args, seed)
    ev = res_py["events"]
    print(f"pure python : {t_py:8.3f} s   {ev / t_py / 1e6:6.2f} M events/s")

    if _engine_cy is None:
        print("compiled engine not built; skipping comparison")
        return

    res_cy, t_cy = bench(_engine_cy, args, seed, repeats=3)
    print(f"cython      : {t_cy:8.3f} s   {ev / t_cy / 1e6:6.2f} M events/s")
    print(f"speedup     : {t_py / t_cy:8.1f}x")

    mismatched = [
        k for k in res_py if not np.array_equal(res_py[k], res_cy[k])
    ]
    if mismatched:
        raise SystemExit(f"ENGINE MISMATCH in fields: {mismatched}")
    print("outputs     : bit-identical")


if __name__ == "__main__":
    main()
