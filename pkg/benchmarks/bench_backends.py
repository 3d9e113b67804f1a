"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``CRNOMA_DISABLE_NUMBA``.  Usage::

    python3 benchmarks/bench_backends.py [--repeats 5] [--n 40] [--m 30]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best_of(fn, repeats):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def worker(args):
    from crnoma import harness, kernels, zoa
    from crnoma._accel import backend_name
    from crnoma.net_model import Scenario, generate_availability, generate_topology, snr_linear
    from crnoma.pairing import zoup

    sc = Scenario(n_users=args.n, m_channels=args.m)
    rng = np.random.default_rng(1)
    topo = generate_topology(sc, rng)
    avail = generate_availability(sc, rng)
    x = snr_linear(sc) * topo.gains
    keys = rng.random((30, args.n))
    cfg = zoa.ZoaConfig(max_iterations=20, patience=None, rng_seed=0)

    results = {
        "population_fitness": _best_of(lambda: kernels.population_fitness(keys, x, avail.entries), args.repeats),
        "zoup (20 iterations)": _best_of(lambda: zoup(sc, topo, avail, cfg), args.repeats),
        "replication, all schemes": _best_of(
            lambda: harness.run_replication(sc, harness.SCHEMES, seed=3), args.repeats),
    }
    print(json.dumps({"backend": backend_name(), "times": results}))


def run_backend(disable, argv):
    env = dict(os.environ)
    env.pop("CRNOMA_DISABLE_NUMBA", None)
    if disable:
        env["CRNOMA_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, __file__, "--worker", *argv], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--n", type=int, default=40, help="users")
    parser.add_argument("--m", type=int, default=30, help="channels")
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    if args.worker:
        return worker(args)

    passthrough = ["--repeats", str(args.repeats), "--n", str(args.n), "--m", str(args.m)]
    fast = run_backend(False, passthrough)
    slow = run_backend(True, passthrough)
    print(f"N={args.n}, M={args.m}, best of {args.repeats}")
    print(f"{'workload':<26} {fast['backend']:>12} {slow['backend']:>12} {'speedup':>8}")
    for name, t_fast in fast["times"].items():
        t_slow = slow["times"][name]
        print(f"{name:<26} {1e3 * t_fast:>10.2f}ms {1e3 * t_slow:>10.2f}ms {t_slow / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
