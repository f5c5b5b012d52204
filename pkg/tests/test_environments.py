"""Environment tests: distributions, Markov chains, the trap instance, and RNG contracts."""

import numpy as np
import pytest

from decmab.arms import ArmSpace
from decmab.environments import (
    CHUNK,
    Gaussian,
    IidEnv,
    MarkovChain,
    MarkovEnv,
    TRAP_MEANS,
    Uniform,
    build_counterexample,
    build_environment,
    estimate_lockin_probability,
    random_gaussian_env,
)


def uniform_env(space, centers, half_width=0.0):
    dists = {space.tuple_at(k): Uniform(c, half_width) for k, c in enumerate(centers)}
    return IidEnv(space, dists)


def test_degenerate_uniform_sample_common():
    space = ArmSpace((2,))
    env = uniform_env(space, [0.5, 0.2])
    run = env.bind(seed=0)
    assert all(run.sample_common((1,)) == 0.5 for _ in range(10))


def test_sample_independent_degenerate():
    space = ArmSpace((2, 2, 2))
    env = uniform_env(space, [0.4] * 8)
    run = env.bind(seed=0)
    assert run.sample_independent((1, 2, 1)) == [0.4, 0.4, 0.4]


def test_sample_unknown_tuple_rejected():
    space = ArmSpace((2, 2))
    env = uniform_env(space, [0.1, 0.2, 0.3, 0.4])
    run = env.bind(seed=0)
    with pytest.raises(ValueError):
        run.sample_common((3, 1))


def test_env_requires_full_coverage():
    space = ArmSpace((2, 2))
    with pytest.raises(ValueError):
        IidEnv(space, {(1, 1): Uniform(0.5, 0.1)})


def test_gap_invariants():
    space = ArmSpace((2, 2, 2))
    env = random_gaussian_env(space, (0.1, 0.9), (0.005, 0.03), seed=3)
    gaps = list(env.gaps.values())
    assert min(gaps) == 0.0
    assert all(g >= 0 for g in gaps)
    assert env.mu_star == max(env.mu.values())


def test_independent_draws_uncorrelated():
    space = ArmSpace((1, 1))
    env = IidEnv(space, {(1, 1): Gaussian(0.5, 0.03)})
    run = env.bind(seed=7)
    n = 100_000
    pairs = np.array([run.sample_independent((1, 1)) for _ in range(n)])
    corr = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
    assert abs(corr) < 0.01


@pytest.mark.parametrize(
    "dist",
    [Gaussian(0.37, 0.03), Uniform(0.61, 0.05)],
)
def test_empirical_mean_matches(dist):
    space = ArmSpace((1,))
    env = IidEnv(space, {(1,): dist})
    run = env.bind(seed=5)
    n = 1_000_000
    total = 0.0
    chunks = n // CHUNK
    for _ in range(chunks):
        total += float(np.sum(run.next_chunk(0, 0)))
    mean = total / (chunks * CHUNK)
    assert abs(mean - dist.mean) <= 4.0 * dist.std_dev / 1000.0


def test_gaussian_rejects_zero_std():
    with pytest.raises(ValueError):
        Gaussian(0.5, 0.0)


def test_markov_symmetric_chain_mean():
    chain = MarkovChain(rewards=(0.0, 1.0), transition=((0.5, 0.5), (0.5, 0.5)))
    assert abs(chain.stationary_mean - 0.5) < 1e-12


def test_markov_asymmetric_chain_mean():
    chain = MarkovChain(rewards=(0.0, 1.0), transition=((0.9, 0.1), (0.2, 0.8)))
    # power-iteration oracle, independent of the linear solve
    pi = np.array([0.5, 0.5])
    p = chain.matrix()
    for _ in range(10_000):
        pi = pi @ p
    oracle = float(pi @ np.array(chain.rewards))
    assert abs(oracle - 1.0 / 3.0) < 1e-9
    assert abs(chain.stationary_mean - oracle) < 1e-9


def test_markov_stationary_residual():
    chain = MarkovChain(rewards=(0.2, 0.9, 0.4), transition=(
        (0.5, 0.25, 0.25), (0.1, 0.6, 0.3), (0.3, 0.3, 0.4)))
    pi = chain.stationary()
    assert np.abs(pi @ chain.matrix() - pi).max() <= 1e-10
    assert abs(float(pi.sum()) - 1.0) < 1e-12


def test_markov_validation_rejects_bad_chains():
    with pytest.raises(ValueError):  # not row-stochastic
        MarkovChain(rewards=(0.0, 1.0), transition=((0.5, 0.4), (0.5, 0.5)))
    with pytest.raises(ValueError):  # reducible
        MarkovChain(rewards=(0.0, 1.0), transition=((1.0, 0.0), (0.0, 1.0)))
    with pytest.raises(ValueError):  # periodic
        MarkovChain(rewards=(0.0, 1.0), transition=((0.0, 1.0), (1.0, 0.0)))
    with pytest.raises(ValueError):  # reward outside [0, 1]
        MarkovChain(rewards=(0.0, 1.5), transition=((0.5, 0.5), (0.5, 0.5)))


def two_chain_env():
    space = ArmSpace((2,))
    chains = {
        (1,): MarkovChain(rewards=(0.0, 1.0), transition=((0.9, 0.1), (0.2, 0.8))),
        (2,): MarkovChain(rewards=(0.0, 1.0), transition=((0.5, 0.5), (0.5, 0.5))),
    }
    return MarkovEnv(space, chains)


def test_rested_property():
    env = two_chain_env()
    run = env.bind(seed=1)
    # drive chain (1,) hard; chain (2,) must stay in its initial state
    before = run.current_state[1]
    for _ in range(1000):
        run.sample_common((1,))
    assert run.current_state[1] == before
    run.sample_common((2,))


def test_markov_long_run_mean():
    env = two_chain_env()
    run = env.bind(seed=2)
    n = 1_000_000
    total = 0.0
    for _ in range(n):
        total += run.sample_common((1,))
    assert abs(total / n - env.stationary_mean[(1,)]) < 0.005


def test_markov_env_gaps():
    env = two_chain_env()
    assert env.gaps[(2,)] == 0.0  # stationary mean 0.5 > 1/3
    assert abs(env.gaps[(1,)] - (0.5 - 1.0 / 3.0)) < 1e-9


def test_markov_independent_rejected():
    env = two_chain_env()
    run = env.bind(seed=0)
    with pytest.raises(ValueError):
        run.sample_independent((1,))


def test_counterexample_invariants():
    env = build_counterexample()
    assert env.gaps[(2, 2)] == 0.6  # exact in float arithmetic
    assert env.optimal_tuple() == (1, 1)
    # support overlap: one (2,1) draw can exceed one (1,1) draw
    lo11, hi11 = TRAP_MEANS[(1, 1)] - 0.05, TRAP_MEANS[(1, 1)] + 0.05
    lo21, hi21 = TRAP_MEANS[(2, 1)] - 0.05, TRAP_MEANS[(2, 1)] + 0.05
    assert max(lo11, lo21) < min(hi11, hi21)
    lo12, hi12 = TRAP_MEANS[(1, 2)] - 0.05, TRAP_MEANS[(1, 2)] + 0.05
    assert max(lo11, lo12) < min(hi11, hi12)


def test_counterexample_rewards_within_support():
    env = build_counterexample()
    run = env.bind(seed=9)
    for a, m in TRAP_MEANS.items():
        for _ in range(200):
            xs = run.sample_independent(a)
            assert all(m - 0.05 <= x <= m + 0.05 for x in xs)


def test_counterexample_draw_range_example():
    env = build_counterexample()
    run = env.bind(seed=4)
    m = TRAP_MEANS[(2, 2)]
    xs = run.sample_independent((2, 2))
    assert len(xs) == 2
    assert all(0.25 <= x <= 0.35 for x in xs)
    assert abs(m - 0.3) < 1e-15


def test_lockin_probability_positive():
    p_hat, se = estimate_lockin_probability(200_000, seed=0)
    assert p_hat - 3.0 * se > 0


def test_chunked_draws_equal_scalar_draws():
    # the kernel relies on vectorized draws being bitwise equal to scalar draws
    for make, scalar in [
        (lambda g: g.normal(0.4, 0.02, 256), lambda g: g.normal(0.4, 0.02)),
        (lambda g: g.uniform(0.1, 0.7, 256), lambda g: g.uniform(0.1, 0.7)),
        (lambda g: g.random(256), lambda g: g.random()),
    ]:
        g1 = np.random.Generator(np.random.PCG64(np.random.SeedSequence((5, 0, 1, 2))))
        g2 = np.random.Generator(np.random.PCG64(np.random.SeedSequence((5, 0, 1, 2))))
        vec = make(g1)
        seq = np.array([scalar(g2) for _ in range(256)])
        assert np.array_equal(vec, seq)


def test_stream_values_independent_of_consumption_pattern():
    space = ArmSpace((2, 2))
    env = random_gaussian_env(space, (0.1, 0.9), (0.01, 0.03), seed=1)
    a = env.bind(seed=42)
    b = env.bind(seed=42)
    # interleave tuples differently; per-(tuple, player) streams must not shift
    seq_a = [a.sample_common((1, 1)) for _ in range(5)]
    for _ in range(7):
        a.sample_common((2, 2))
    seq_a += [a.sample_common((1, 1)) for _ in range(5)]
    seq_b = [b.sample_common((1, 1)) for _ in range(10)]
    assert seq_a[:5] + seq_a[5:] == seq_b


def test_build_environment_kinds():
    space = ArmSpace((2, 2))
    env = build_environment(space, {"kind": "counterexample"})
    assert isinstance(env, IidEnv)
    with pytest.raises(ValueError):
        build_environment(ArmSpace((2, 3)), {"kind": "counterexample"})
    with pytest.raises(ValueError):
        build_environment(space, {"kind": "nope"})
    env2 = build_environment(
        space,
        {
            "kind": "explicit",
            "entries": [
                {"tuple": [1, 1], "dist": "gaussian", "mean": 0.5, "std": 0.01},
                {"tuple": [1, 2], "dist": "uniform", "center": 0.4, "half_width": 0.1},
                {"tuple": [2, 1], "dist": "gaussian", "mean": 0.3, "std": 0.02},
                {"tuple": [2, 2], "dist": "gaussian", "mean": 0.2, "std": 0.02},
            ],
        },
    )
    assert env2.mu[(1, 1)] == 0.5
    assert env2.gaps[(2, 2)] == 0.3
