"""Reward environments: IID subgaussian arms, rested Markov chains, and the two-player trap instance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .arms import ArmSpace, ArmTuple

# Draws are consumed in fixed-size blocks so that the j-th reward of a given
# (tuple, player) pair is always the j-th output of its dedicated generator,
# no matter who consumes the stream or in what batch sizes.
CHUNK = 1024

# Disjoint seed-derivation tags: reward streams vs. per-player tie-break RNGs.
STREAM_TAG = 0
TIE_TAG = 1


class StreamBank:
    """Per-(tuple, player) generators derived deterministically from one root seed."""

    def __init__(self, seed: int, k_max: int, n_players: int):
        self.seed = int(seed)
        self.k_max = k_max
        self.n_players = n_players
        self._gens: dict[tuple[int, int], np.random.Generator] = {}

    def generator(self, k: int, i: int) -> np.random.Generator:
        key = (k, i)
        gen = self._gens.get(key)
        if gen is None:
            ss = np.random.SeedSequence((self.seed, STREAM_TAG, k, i))
            gen = np.random.Generator(np.random.PCG64(ss))
            self._gens[key] = gen
        return gen


def tie_break_rng(seed: int, player_index: int) -> np.random.Generator:
    """Independent per-player RNG used only to break exact sample-mean ties."""
    ss = np.random.SeedSequence((int(seed), TIE_TAG, player_index))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class Gaussian:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"gaussian std must be positive, got {self.std}")

    def draw_chunk(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return gen.normal(self.mean, self.std, n)

    @property
    def std_dev(self) -> float:
        return self.std


@dataclass(frozen=True)
class Uniform:
    center: float
    half_width: float

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError(f"uniform half_width must be >= 0, got {self.half_width}")

    def draw_chunk(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return gen.uniform(self.center - self.half_width, self.center + self.half_width, n)

    @property
    def mean(self) -> float:
        return self.center

    @property
    def std_dev(self) -> float:
        return self.half_width / math.sqrt(3.0)


Distribution = Gaussian | Uniform


class IidEnv:
    """IID reward environment: one distribution per arm tuple, rewards independent across rounds."""

    kind = "iid"

    def __init__(self, space: ArmSpace, dists: Mapping[ArmTuple, Distribution]):
        self.space = space
        table: list[Distribution | None] = [None] * space.k_max
        for a, dist in dists.items():
            k = space.flat_index(a)
            if table[k] is not None:
                raise ValueError(f"duplicate distribution for tuple {tuple(a)}")
            table[k] = dist
        missing = [space.tuple_at(k) for k, d in enumerate(table) if d is None]
        if missing:
            raise ValueError(f"no distribution given for tuples {missing}")
        self.dists: tuple[Distribution, ...] = tuple(table)  # type: ignore[arg-type]
        self.mu_flat = np.array([d.mean for d in self.dists], dtype=np.float64)
        self.mu_star = float(self.mu_flat.max())
        self.gaps_flat = self.mu_star - self.mu_flat

    @property
    def mu(self) -> dict[ArmTuple, float]:
        return {self.space.tuple_at(k): float(m) for k, m in enumerate(self.mu_flat)}

    @property
    def gaps(self) -> dict[ArmTuple, float]:
        return {self.space.tuple_at(k): float(g) for k, g in enumerate(self.gaps_flat)}

    def optimal_tuple(self) -> ArmTuple:
        return self.space.tuple_at(int(np.argmax(self.mu_flat)))

    def bind(self, seed: int) -> "IidRun":
        """Create the mutable per-run sampling state for one episode."""
        return IidRun(self, seed)


class IidRun:
    """One episode's sampling state for an IidEnv; confined to a single run."""

    def __init__(self, env: IidEnv, seed: int):
        self.env = env
        self.bank = StreamBank(seed, env.space.k_max, env.space.n_players)
        self._buffers: dict[tuple[int, int], np.ndarray] = {}
        self._pos: dict[tuple[int, int], int] = {}

    def next_chunk(self, k: int, i: int) -> np.ndarray:
        """Next CHUNK rewards of the (tuple k, player i) stream, in draw order."""
        gen = self.bank.generator(k, i)
        return self.env.dists[k].draw_chunk(gen, CHUNK)

    def _next_value(self, k: int, i: int) -> float:
        key = (k, i)
        pos = self._pos.get(key, CHUNK)
        if pos == CHUNK:
            self._buffers[key] = self.next_chunk(k, i)
            pos = 0
        v = float(self._buffers[key][pos])
        self._pos[key] = pos + 1
        return v

    def sample_common(self, a: Sequence[int]) -> float:
        """One draw delivered identically to every player (common-reward routing)."""
        k = self.env.space.flat_index(a)
        return self._next_value(k, 0)

    def sample_independent(self, a: Sequence[int]) -> list[float]:
        """One independent draw per player from the tuple's distribution."""
        k = self.env.space.flat_index(a)
        return [self._next_value(k, i) for i in range(self.env.space.n_players)]


@dataclass(frozen=True)
class MarkovChain:
    """Finite rested chain: per-state rewards in [0, 1], advances only when its tuple is pulled."""

    rewards: tuple[float, ...]
    transition: tuple[tuple[float, ...], ...]
    initial_state: int = 0

    def __post_init__(self):
        n = len(self.rewards)
        if n < 1:
            raise ValueError("chain needs at least one state")
        if any(not 0.0 <= r <= 1.0 for r in self.rewards):
            raise ValueError(f"per-state rewards must lie in [0, 1], got {self.rewards}")
        p = np.asarray(self.transition, dtype=np.float64)
        if p.shape != (n, n):
            raise ValueError(f"transition matrix shape {p.shape} does not match {n} states")
        if (p < 0).any() or not np.allclose(p.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("transition matrix rows must be non-negative and sum to 1")
        if not 0 <= self.initial_state < n:
            raise ValueError(f"initial state {self.initial_state} outside [0, {n})")
        if not _is_irreducible(p):
            raise ValueError("transition matrix must be irreducible")
        if _period(p) != 1:
            raise ValueError("transition matrix must be aperiodic")

    @property
    def n_states(self) -> int:
        return len(self.rewards)

    def matrix(self) -> np.ndarray:
        return np.asarray(self.transition, dtype=np.float64)

    def stationary(self) -> np.ndarray:
        """Solve pi P = pi, sum(pi) = 1; unique for an irreducible chain."""
        p = self.matrix()
        n = p.shape[0]
        a = p.T - np.eye(n)
        a[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        pi = np.linalg.solve(a, b)
        residual = float(np.abs(pi @ p - pi).max())
        if residual > 1e-10:
            raise ValueError(f"stationary solve residual {residual} exceeds 1e-10")
        return pi

    @property
    def stationary_mean(self) -> float:
        return float(self.stationary() @ np.asarray(self.rewards))


def _is_irreducible(p: np.ndarray) -> bool:
    n = p.shape[0]
    reach = ((p > 0) | np.eye(n, dtype=bool)).astype(np.int64)
    # transitive closure by repeated squaring; ceil(log2(n)) + 1 rounds suffice
    for _ in range(max(1, int(math.ceil(math.log2(n + 1))) + 1)):
        reach = (reach @ reach > 0).astype(np.int64)
    return bool((reach > 0).all())

def _period(p: np.ndarray) -> int:
    # gcd of (level[u] + 1 - level[v]) over edges, via BFS from state 0
    n = p.shape[0]
    level = [-1] * n
    level[0] = 0
    queue = [0]
    g = 0
    while queue:
        u = queue.pop(0)
        for v in range(n):
            if p[u, v] <= 0:
                continue
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g) if g != 0 else 0


class MarkovEnv:
    """Rested Markovian environment for the common-reward setting: one shared chain per tuple."""

    kind = "markov"

    def __init__(self, space: ArmSpace, chains: Mapping[ArmTuple, MarkovChain]):
        self.space = space
        table: list[MarkovChain | None] = [None] * space.k_max
        for a, chain in chains.items():
            k = space.flat_index(a)
            if table[k] is not None:
                raise ValueError(f"duplicate chain for tuple {tuple(a)}")
            table[k] = chain
        missing = [space.tuple_at(k) for k, c in enumerate(table) if c is None]
        if missing:
            raise ValueError(f"no chain given for tuples {missing}")
        self.chains: tuple[MarkovChain, ...] = tuple(table)  # type: ignore[arg-type]
        self.mu_flat = np.array([c.stationary_mean for c in self.chains], dtype=np.float64)
        self.mu_star = float(self.mu_flat.max())
        self.gaps_flat = self.mu_star - self.mu_flat
        # per-tuple cumulative transition rows, shared by all runs
        self.cum_rows: tuple[np.ndarray, ...] = tuple(
            np.cumsum(c.matrix(), axis=1) for c in self.chains
        )

    @property
    def stationary_mean(self) -> dict[ArmTuple, float]:
        return {self.space.tuple_at(k): float(m) for k, m in enumerate(self.mu_flat)}

    @property
    def gaps(self) -> dict[ArmTuple, float]:
        return {self.space.tuple_at(k): float(g) for k, g in enumerate(self.gaps_flat)}

    def optimal_tuple(self) -> ArmTuple:
        return self.space.tuple_at(int(np.argmax(self.mu_flat)))

    def bind(self, seed: int) -> "MarkovRun":
        return MarkovRun(self, seed)


class MarkovRun:
    """One episode's chain states and transition-noise streams; rested semantics."""

    def __init__(self, env: MarkovEnv, seed: int):
        self.env = env
        self.bank = StreamBank(seed, env.space.k_max, 1)
        self.current_state = [c.initial_state for c in env.chains]
        self._buffers: dict[int, np.ndarray] = {}
        self._pos: dict[int, int] = {}

    def next_chunk(self, k: int, i: int = 0) -> np.ndarray:
        """Next CHUNK uniform[0,1) transition draws for tuple k's chain."""
        return self.bank.generator(k, 0).random(CHUNK)

    def _next_uniform(self, k: int) -> float:
        pos = self._pos.get(k, CHUNK)
        if pos == CHUNK:
            self._buffers[k] = self.next_chunk(k)
            pos = 0
        u = float(self._buffers[k][pos])
        self._pos[k] = pos + 1
        return u

    def sample_common(self, a: Sequence[int]) -> float:
        """Reward of the chain's current state; then the pulled chain (only) advances one step."""
        k = self.env.space.flat_index(a)
        chain = self.env.chains[k]
        s = self.current_state[k]
        x = chain.rewards[s]
        u = self._next_uniform(k)
        cum = self.env.cum_rows[k]
        j = 0
        while j < chain.n_states - 1 and u >= cum[s, j]:
            j += 1
        self.current_state[k] = j
        return x

    def sample_independent(self, a: Sequence[int]) -> list[float]:
        raise ValueError(
            "Markovian rewards are modelled as one shared chain per tuple "
            "(common-reward routing only)"
        )


# Two-player, two-arm instance on which the coordinated UCB scheme locks into
# the worst tuple with positive probability.  Means are chosen so that the
# worst gap is exactly 0.6 and the one-sample supports of (1,1) vs (2,1) and
# (1,1) vs (1,2) overlap on a set of positive measure.
TRAP_HALF_WIDTH = 0.05
TRAP_MEANS: dict[ArmTuple, float] = {
    (1, 1): 0.90,
    (1, 2): 0.88,
    (2, 1): 0.88,
    (2, 2): 0.90 - 0.60,  # keeps mu_star - mu exactly 0.6 in float arithmetic
}


def build_counterexample() -> IidEnv:
    """The fixed two-player environment with uniform rewards on [mean - 0.05, mean + 0.05]."""
    space = ArmSpace((2, 2))
    dists = {a: Uniform(m, TRAP_HALF_WIDTH) for a, m in TRAP_MEANS.items()}
    env = IidEnv(space, dists)
    assert env.gaps[(2, 2)] == 0.6
    return env


def estimate_lockin_probability(trials: int, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo estimate of the bad event driving the linear-regret trap.

    Direct simulation of the four one-sample comparisons per player: the event
    that player 1 ranks its (2,1) sample strictly above its other three first
    samples, or player 2 does the same for (1,2) (a union, matching the source
    formula).  Returns (p_hat, standard_error).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    space = ArmSpace((2, 2))
    order = [space.tuple_at(k) for k in range(space.k_max)]

    def draws() -> dict[ArmTuple, np.ndarray]:
        return {
            a: rng.uniform(TRAP_MEANS[a] - TRAP_HALF_WIDTH, TRAP_MEANS[a] + TRAP_HALF_WIDTH, trials)
            for a in order
        }

    x1 = draws()
    x2 = draws()
    bad1 = x1[(2, 1)] > np.maximum(x1[(1, 1)], np.maximum(x1[(1, 2)], x1[(2, 2)]))
    bad2 = x2[(1, 2)] > np.maximum(x2[(1, 1)], np.maximum(x2[(2, 1)], x2[(2, 2)]))
    p_hat = float(np.mean(bad1 | bad2))
    se = math.sqrt(p_hat * (1.0 - p_hat) / trials)
    return p_hat, se


def random_gaussian_env(
    space: ArmSpace,
    mean_range: tuple[float, float],
    std_range: tuple[float, float],
    seed: int,
) -> IidEnv:
    """Draw one Gaussian environment realization: means and stds uniform over the given ranges."""
    lo, hi = float(mean_range[0]), float(mean_range[1])
    slo, shi = float(std_range[0]), float(std_range[1])
    if not lo <= hi:
        raise ValueError(f"mean_range must be ordered, got {mean_range}")
    if not 0 < slo <= shi:
        raise ValueError(f"std_range must satisfy 0 < lo <= hi, got {std_range}")
    rng = np.random.default_rng(seed)
    means = rng.uniform(lo, hi, space.k_max)
    stds = rng.uniform(slo, shi, space.k_max)
    dists = {
        space.tuple_at(k): Gaussian(float(means[k]), float(stds[k]))
        for k in range(space.k_max)
    }
    return IidEnv(space, dists)


def build_environment(space: ArmSpace, env_spec: Mapping) -> IidEnv | MarkovEnv:
    """Construct an environment from a normalized config mapping (see the cli module)."""
    kind = env_spec["kind"]
    if kind == "random_gaussian":
        return random_gaussian_env(
            space,
            tuple(env_spec["mean_range"]),
            tuple(env_spec["std_range"]),
            int(env_spec["seed"]),
        )
    if kind == "explicit":
        dists: dict[ArmTuple, Distribution] = {}
        for entry in env_spec["entries"]:
            a = space.check_tuple(entry["tuple"])
            if entry["dist"] == "gaussian":
                dists[a] = Gaussian(float(entry["mean"]), float(entry["std"]))
            elif entry["dist"] == "uniform":
                dists[a] = Uniform(float(entry["center"]), float(entry["half_width"]))
            else:
                raise ValueError(f"unknown distribution kind {entry['dist']!r}")
        return IidEnv(space, dists)
    if kind == "counterexample":
        if space.arm_counts != (2, 2):
            raise ValueError("the counterexample environment requires arm_counts (2, 2)")
        return build_counterexample()
    if kind == "markov":
        chains = {
            space.check_tuple(entry["tuple"]): MarkovChain(
                rewards=tuple(float(r) for r in entry["rewards"]),
                transition=tuple(tuple(float(x) for x in row) for row in entry["transition"]),
                initial_state=int(entry.get("initial_state", 0)),
            )
            for entry in env_spec["chains"]
        }
        return MarkovEnv(space, chains)
    raise ValueError(f"unknown environment kind {kind!r}")
