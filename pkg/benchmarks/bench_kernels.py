"""Time the compiled kernels against the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat R]``.  Each kernel is run
on a fixed workload with both backends; the outputs are checked to agree
before the timings are reported.
"""
import argparse
import timeit

import numpy as np

from hysharp.kernels import available_backends, get_backend


def workloads(rng):
    pts = np.linspace(-8, 8, 1024)
    lams = np.arange(1 << 16) / (1 << 16)
    xs = np.r_[np.arange(7) * 5, np.arange(5) * 7].astype(np.float64)
    return {
        "trig_sum": (np.arange(-200, 201), rng.normal(size=401) + 1j * rng.normal(size=401), rng.uniform(0, 1, 4096)),
        "gaussian_kernel_matrix": (pts, 0.25, 1.0, 16 / 1024),
        "pointwise_real_margin": (rng.uniform(-5, 5, 10**6), 1.5, 0.1, 0.05, 0.6),
        "pointwise_complex_margin": (rng.normal(size=10**6) + 1j * rng.normal(size=10**6), 1.5, 0.1, 0.05, 0.6),
        "representation_counts": (rng.integers(0, 10**4, 4000), rng.integers(0, 10**4, 4000)),
        "torus_max_dist": (lams, xs),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-10, atol=1e-10)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = {name: get_backend(name) for name in available_backends()}
    if "compiled" not in backends:
        print("compiled kernels not built; timing the numpy fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}" + "".join(f"{n + ' [ms]':>16}" for n in backends) + f"{'speedup':>10}")
    for name, work in workloads(rng).items():
        times, outs = {}, {}
        for bname, mod in backends.items():
            fn = getattr(mod, name)
            outs[bname] = fn(*work)
            times[bname] = min(timeit.repeat(lambda: fn(*work), number=1, repeat=args.repeat)) * 1e3
        if len(outs) == 2 and not _same(outs["python"], outs["compiled"]):
            raise SystemExit(f"{name}: backends disagree")
        speed = f"{times['python'] / times['compiled']:>9.1f}x" if "compiled" in times else ""
        print(f"{name:<26}" + "".join(f"{t:>16.2f}" for t in times.values()) + speed)


if __name__ == "__main__":
    main()
