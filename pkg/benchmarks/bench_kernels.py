"""Time the numba and numpy kernels on the same inputs.

Usage::

    python3 benchmarks/bench_kernels.py [--size 1000000] [--repeat 5]

Prints the best wall time per kernel and backend, and the largest absolute
difference between the two backends' outputs.
"""

import argparse
import time

import numpy as np

from scorelab import _kernels
from scorelab.continuous import _crps_prefix
from scorelab.core import cdf_of, gaussian_density


def best_time(fn, args, repeat):
    fn(*args)  # warm-up (triggers numba compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args(argv)

    p = gaussian_density()
    F = cdf_of(p)
    below, above = _crps_prefix(F)
    rng = np.random.Generator(np.random.Philox(args.seed))
    x = rng.uniform(p.lo, p.hi, args.size)
    u = rng.random(args.size)

    cases = {
        "interp_uniform": ((p.values, p.lo, p.dx, x),),
        "crps_split": ((below, above, F.values, F.lo, F.dx, x),),
        "inverse_cdf": ((F.values, F.lo, F.dx, u),),
    }
    print(f"size={args.size} repeat={args.repeat} default backend={_kernels.BACKEND}")
    print(f"{'kernel':<16}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, (kargs,) in cases.items():
        np_fn = getattr(_kernels, f"{name}_np")
        nb_fn = getattr(_kernels, f"{name}_nb")
        t_np = best_time(np_fn, kargs, args.repeat)
        if nb_fn is None:
            print(f"{name:<16}{t_np:>12.4f}{'n/a':>12}{'':>10}{'':>14}")
            continue
        t_nb = best_time(nb_fn, kargs, args.repeat)
        diff = float(np.max(np.abs(np_fn(*kargs) - nb_fn(*kargs))))
        print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.2f}{diff:>14.3e}")


if __name__ == "__main__":
    main()
