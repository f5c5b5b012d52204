"""Benchmark: compiled episode kernels vs the pure-Python round loop.

Usage: python benchmarks/bench_kernels.py [--horizon N] [--repeat R]
"""

import argparse
import time

from decmab import kernels
from decmab.arms import ArmSpace
from decmab.environments import MarkovChain, MarkovEnv, build_counterexample, random_gaussian_env
from decmab.simulator import Variant, make_players, run_episode


def markov_env(space):
    targets = [0.85, 0.75, 0.65, 0.55, 0.45, 0.35, 0.25, 0.15][: space.k_max]
    chains = {}
    for k, m in enumerate(targets):
        p, q = 0.6 * m, 0.6 * (1 - m)
        chains[space.tuple_at(k)] = MarkovChain(
            rewards=(0.0, 1.0), transition=((1 - p, p), (q, 1 - q))
        )
    return MarkovEnv(space, chains)


def time_case(env, algo, variant, horizon, use_kernel, repeat):
    best = float("inf")
    ledger = None
    for _ in range(repeat):
        players = make_players(algo, env.space, 0)
        t0 = time.perf_counter()
        ledger = run_episode(env, variant, players, horizon, 0, use_kernel=use_kernel)
        best = min(best, time.perf_counter() - t0)
    return best, ledger


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=50_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if not kernels.compiled_available():
        print("compiled kernels unavailable; benchmarking the pure-Python loop only")

    space3 = ArmSpace((2, 2, 2))
    env3 = random_gaussian_env(space3, (0.1, 0.9), (0.005, 0.03), seed=11)
    cases = [
        ("mucb / variant A / iid", env3, "mucb", Variant.A),
        ("mucb / variant B' / trap", build_counterexample(), "mucb", Variant.B_PRIME),
        ("agnostic / variant A / iid", env3, "agnostic_ucb", Variant.A),
        ("mdsee / variant B / iid", env3, "mdsee", Variant.B),
        ("mucb / variant A / markov", markov_env(space3), "mucb", Variant.A),
    ]

    T = args.horizon
    print(f"{T} rounds per episode, best of {args.repeat}")
    header = f"{'case':<28} {'python':>12} {'compiled':>12} {'speedup':>9}   identical"
    print(header)
    print("-" * len(header))
    for name, env, algo, variant in cases:
        py_t, py_led = time_case(env, algo, variant, T, False, args.repeat)
        if kernels.compiled_available():
            cy_t, cy_led = time_case(env, algo, variant, T, True, args.repeat)
            same = (
                py_led.pseudo_regret == cy_led.pseudo_regret
                and py_led.checkpoints == cy_led.checkpoints
                and py_led.pulls == cy_led.pulls
            )
            print(
                f"{name:<28} {T/py_t:>10.0f}/s {T/cy_t:>10.0f}/s {py_t/cy_t:>8.1f}x   {same}"
            )
        else:
            print(f"{name:<28} {T/py_t:>10.0f}/s {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
