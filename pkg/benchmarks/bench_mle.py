"""Compare the compiled and numpy R-rho-R kernels.

Usage: python3 benchmarks/bench_mle.py [--iters 200] [--repeat 5]

Times a fixed number of iterations (convergence disabled) for the 2- and
4-qubit plans and one full 4-qubit reconstruction per backend, then checks
that both backends return the same matrix.
"""

import argparse
import time

import numpy as np

from mbqc_deutsch import _mle_py, cluster, qcore, tomography

try:
    from mbqc_deutsch import _mle_kernel
except ImportError:
    _mle_kernel = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iters", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = {"python": _mle_py}
    if _mle_kernel is not None:
        backends["compiled"] = _mle_kernel
    else:
        print("compiled kernel not built; timing the numpy fallback only")

    phi_c = cluster.build_phi_c()
    noisy = cluster.apply_noise(phi_c, cluster.NoiseSpec.white(cluster.calibrate_white_noise(0.62)))
    print(f"{'plan':<8}{'backend':<10}{'us/iter':>10}")
    for n in (2, 4):
        plan = tomography.settings_plan(n)
        truth = noisy if n == 4 else qcore.random_density(2, np.random.default_rng(0))
        freqs = tomography.simulate_counts(truth, plan, 500, rng=1).frequencies()
        d = 2**n
        # tol=-inf disables early stopping so every backend runs exactly --iters steps
        call = (plan.codes, freqs, np.eye(d, dtype=complex) / d, 0.1, -np.inf, 3, args.iters, 1e-12)
        results = {}
        for name, mod in backends.items():
            t, out = best_of(lambda: mod.rrho_iterate(*call), args.repeat)
            results[name] = out[0]
            print(f"{n:<8}{name:<10}{1e6 * t / args.iters:>10.1f}")
        if len(results) == 2:
            diff = np.abs(results["python"] - results["compiled"]).max()
            print(f"{'':<8}max |difference| {diff:.1e}")

    table = tomography.simulate_counts(noisy, tomography.settings_plan(4), 500, rng=2)
    print("\nfull 4-qubit reconstruction (N=500, calibrated resource)")
    for name in backends:
        t, result = best_of(lambda: tomography.mle_reconstruct(table, backend=name), 1)
        print(f"  {name:<10}{t:8.2f} s  iterations={result.iterations}  "
              f"F={qcore.fidelity(result.rho, phi_c):.6f}")


if __name__ == "__main__":
    main()
