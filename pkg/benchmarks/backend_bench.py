"""Throughput comparison of the compiled kernel against the pure-Python
driver on identical work.

Both backends consume the same random stream and make the same decisions,
so the event counts agree exactly and the comparison is loop-for-loop.
Timings use a fixed trajectory budget per (dim, backend) cell; the headline
number is proposal loops per second.

Usage:
    python3 benchmarks/backend_bench.py [--dims 8,32,128] [--time 10] [--runs 5]
"""

import argparse
import sys
import time

import numpy as np

from zigzag_sampler import InitialDistribution, IsotropicGaussian, SamplerConfig, sample
from zigzag_sampler.core import available_backends


def bench_cell(dim: int, T: float, runs: int, backend: str, seed: int):
    cfg = SamplerConfig(terminal_time=T, seed=seed, backend=backend)
    p = IsotropicGaussian(dim)
    t0 = time.perf_counter()
    res = sample(p, cfg, InitialDistribution.target(), runs, jobs=1)
    elapsed = time.perf_counter() - t0
    totals = res.totals()
    return totals["n_loops"], elapsed, totals["n_proposed"]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="8,32,128",
                    help="comma-separated dimensions (default 8,32,128)")
    ap.add_argument("--time", type=float, default=10.0,
                    help="trajectory length per run (default 10)")
    ap.add_argument("--runs", type=int, default=5,
                    help="trajectories per cell (default 5)")
    ap.add_argument("--seed", type=int, default=90210)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; run pip install -e . first",
              file=sys.stderr)
        return 1

    dims = [int(s) for s in args.dims.split(",")]
    print(f"{'dim':>5} {'backend':>9} {'loops':>10} {'seconds':>9} "
          f"{'loops/sec':>11} {'speedup':>8}")
    for dim in dims:
        rates = {}
        for backend in ("python", "compiled"):
            loops, elapsed, proposed = bench_cell(
                dim, args.time, args.runs, backend, args.seed)
            rates[backend] = loops / elapsed
            speedup = ("" if backend == "python"
                       else f"{rates['compiled'] / rates['python']:7.1f}x")
            print(f"{dim:>5} {backend:>9} {loops:>10,} {elapsed:>9.3f} "
                  f"{rates[backend]:>11,.0f} {speedup:>8}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
