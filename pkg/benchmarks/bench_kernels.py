"""Time the batch episode kernel under both backends.

    python benchmarks/bench_kernels.py --n 4096 --replications 512

Each cell runs once to warm up (numba compiles on first call), then reports the
best of ``--repeat`` timings and the agreement of pull counts between backends.
"""
import argparse
import time

import numpy as np

from semr import kernels
from semr._backend import NUMBA_AVAILABLE
from semr.environment import build_environment
from semr.policies import LCB, UNIFORM, GREEDY, epsilon_greedy, log_inverse_delta, oracle


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=4096)
    parser.add_argument("--replications", type=int, default=256)
    parser.add_argument("--d", type=int, default=1)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    d = args.d
    env = build_environment(np.zeros(d), [v * np.eye(d) for v in (1.0, 2.0, 3.0, 4.0, 5.0)], 5.0 * np.sqrt(d))
    rng = np.random.default_rng(0)
    z = rng.standard_normal((args.replications, args.n, d))
    u = rng.random((args.replications, args.n))
    backends = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])
    print(f"n={args.n} R={args.replications} d={d} k={env.k}")
    print(f"{'policy':>20s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup  counts-equal")
    for policy in (LCB, UNIFORM, GREEDY, epsilon_greedy(0.1), oracle(0)):
        kw = dict(gamma=env.gamma, log2d=log_inverse_delta(args.n, d), eps=policy.epsilon,
                  target=policy.target or 0)
        results, times = {}, {}
        for b in backends:
            call = lambda b=b: kernels.simulate_block(policy.kernel_code, args.n, env.theta, env.chols, z, u,
                                                      backend=b, **kw)
            times[b] = best_time(call, args.repeat)
            results[b] = call()
        speedup = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        same = all(np.array_equal(results[b][0], results["numpy"][0]) for b in backends)
        print(f"{policy.name:>20s} " + " ".join(f"{times[b]:9.3f}s" for b in backends)
              + f"   {speedup:6.1f}x  {same}")


if __name__ == "__main__":
    main()
