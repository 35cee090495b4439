"""Timing comparison of the pure-numpy and compiled march kernels.

Runs the exponential and implicit marches on identical inputs through
each available backend, then times one full Monte-Carlo sample of the
temporal-study workload end to end.  Results are wall-clock medians
over repeated runs; the two backends must agree bit for bit (checked
here as well, so a mistuned build fails loudly rather than silently
producing different trajectories).

Usage: python benchmarks/bench_backends.py [--modes 64] [--steps 4096]
"""

import argparse
import statistics
import time

import numpy as np

from sdwave import (
    BENCHMARK_NONLINEARITY,
    NoiseSpec,
    NoiseStream,
    NoiseTriple,
    ProblemConfig,
    State,
    StepPlan,
    build_modes,
    generate_increments,
    increment_factors,
    integrate,
    make_nemytskii,
)
from sdwave.backends import available_backends, get_backend
from sdwave.integrators import aee_tables, lie_tables


def time_call(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def bench_marches(n_modes, n_steps, repeats):
    config = ProblemConfig(
        alpha=1.0,
        n_modes=n_modes,
        noise=NoiseSpec("white"),
        nonlinearity=BENCHMARK_NONLINEARITY,
    )
    modes = build_modes(config)
    k = 1.0 / n_steps
    factors = increment_factors(modes, k)
    eta, etahat, dw = generate_increments(factors, NoiseStream(0, 0), n_steps)
    at = aee_tables(modes, k)
    lt = lie_tables(modes, k)
    f_fn = make_nemytskii(BENCHMARK_NONLINEARITY, n_modes)

    rows = []
    finals = {}
    for name in available_backends():
        be = get_backend(name)

        def run_aee(f=f_fn):
            u, v = np.zeros(n_modes), np.zeros(n_modes)
            be.aee_march(
                u, v, at.s1, at.s2, at.s3, at.s4, at.ks2, at.ks4, eta, etahat, f
            )
            return u, v

        def run_lie(f=f_fn):
            u, v = np.zeros(n_modes), np.zeros(n_modes)
            be.lie_march(u, v, lt.c11, lt.c12, lt.c21, lt.c22, lt.k, dw, f)
            return u, v

        finals[name] = (run_aee(), run_lie())
        rows.append((f"aee_march [{name}]", time_call(run_aee, repeats)))
        rows.append((f"lie_march [{name}]", time_call(run_lie, repeats)))
        # F = 0 isolates the kernel itself from the sine-transform cost
        rows.append(
            (f"aee_march, F=0 [{name}]", time_call(lambda: run_aee(None), repeats))
        )

    names = list(finals)
    for other in names[1:]:
        for idx, label in ((0, "aee"), (1, "lie")):
            for a, b in zip(finals[names[0]][idx], finals[other][idx]):
                if not np.array_equal(a, b):
                    raise SystemExit(
                        f"backend mismatch in {label} march: "
                        f"{names[0]} vs {other} differ"
                    )
    return rows


def bench_sample(n_modes, n_steps, repeats):
    config = ProblemConfig(
        alpha=1.0,
        n_modes=n_modes,
        noise=NoiseSpec("white"),
        nonlinearity=BENCHMARK_NONLINEARITY,
    )
    plan = StepPlan.for_horizon(1.0, n_steps)
    rows = []
    for name in available_backends():
        rows.append(
            (
                f"integrate [{name}]",
                time_call(lambda: integrate(config, plan, 0, 0, backend=name), repeats),
            )
        )
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--modes", type=int, default=64)
    parser.add_argument("--steps", type=int, default=4096)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"backends: {', '.join(available_backends())}")
    print(f"workload: {args.modes} modes x {args.steps} steps, median of {args.repeats}")
    print()
    rows = bench_marches(args.modes, args.steps, args.repeats)
    rows += bench_sample(args.modes, args.steps, args.repeats)
    width = max(len(label) for label, _ in rows)
    baseline = {}
    for label, seconds in rows:
        kind = label.split(" [")[0]
        baseline.setdefault(kind, seconds)
        speedup = baseline[kind] / seconds
        print(f"{label:<{width}}  {seconds * 1e3:9.2f} ms  ({speedup:5.2f}x)")
    print()
    print("kernels agree bit for bit across backends")


if __name__ == "__main__":
    main()
