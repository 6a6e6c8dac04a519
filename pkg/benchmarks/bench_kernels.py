"""Compare the compiled and numpy latent kernels.

Times one latent update over ``n`` observations and a short Gibbs run with
each available backend, and checks that both produce the same draws.

Usage::

    python benchmarks/bench_kernels.py --n 10000 --repeat 50
"""
import argparse
import time

import numpy as np

from dejd import kernels
from dejd.distributions import RngStream
from dejd.model import DEFAULT_DELTA, ModelParams, simulate
from dejd.priors import preset
from dejd.sampler import ChainConfig, run_chain

TRUTH = ModelParams.from_natural(0.25, 0.4, 30.0, 0.5, 30.0, 5.0, DEFAULT_DELTA)


def time_kernel(backend, x, repeat):
    n = x.size
    u = RngStream(1).generator.random(2 * n)
    xi, J = np.empty(n, dtype=np.int8), np.empty(n)
    args = (TRUTH.mu_prime, TRUTH.h, TRUTH.L, TRUTH.p_U, TRUTH.eta_U, TRUTH.eta_D, DEFAULT_DELTA)
    backend.update_latents(x, *args, u[:n], 1.0 - u[n:], xi, J)  # warm-up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        backend.update_latents(x, *args, u[:n], 1.0 - u[n:], xi, J)
        best = min(best, time.perf_counter() - t0)
    return best, xi.copy(), J.copy()


def time_chain(name, series, sweeps):
    cfg = ChainConfig(burn_in=0, draws=sweeps, seed=3, kernels=name)
    t0 = time.perf_counter()
    chain = run_chain(series, preset("I"), cfg)
    return time.perf_counter() - t0, chain


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=10_000, help="number of returns")
    parser.add_argument("--repeat", type=int, default=50, help="kernel timing repetitions")
    parser.add_argument("--sweeps", type=int, default=500, help="Gibbs sweeps per chain timing")
    args = parser.parse_args(argv)

    series, _ = simulate(TRUTH, args.n, DEFAULT_DELTA, RngStream(2))
    x = np.ascontiguousarray(series.values)
    names = kernels.available_backends()
    if "compiled" not in names:
        print("compiled kernels are not built; only the numpy fallback is timed")

    kernel_times, chain_times, results = {}, {}, {}
    for name in names:
        backend = kernels.get_backend(name)
        kernel_times[name], xi, J = time_kernel(backend, x, args.repeat)
        chain_times[name], chain = time_chain(name, series, args.sweeps)
        results[name] = (xi, J, chain)

    print(f"n = {args.n}")
    print(f"{'backend':<10}{'kernel (ms)':>14}{'ns / obs':>10}{'sweep (ms)':>12}")
    for name in names:
        k, c = kernel_times[name], chain_times[name] / args.sweeps
        print(f"{name:<10}{1e3 * k:>14.3f}{1e9 * k / args.n:>10.1f}{1e3 * c:>12.3f}")
    if len(names) == 2:
        print(f"speed-up: kernel {kernel_times['python'] / kernel_times['compiled']:.1f}x, "
              f"full sweep {chain_times['python'] / chain_times['compiled']:.1f}x")
        xa, Ja, ca = results["python"]
        xb, Jb, cb = results["compiled"]
        same = xa == xb
        print(f"regime draws agree on {same.mean():.4%} of days; "
              f"max |J| difference {np.max(np.abs(Ja[same] - Jb[same])):.2e}; "
              f"max chain difference {np.max(np.abs(ca.values - cb.values)):.2e}")


if __name__ == "__main__":
    main()
