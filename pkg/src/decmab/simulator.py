"""Episode and experiment drivers: action routing, information-asymmetric feedback, regret accounting."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import kernels
from .arms import ArmSpace, ArmTuple, phase_repeats
from .environments import (
    CHUNK,
    IidEnv,
    MarkovEnv,
    build_environment,
    tie_break_rng,
)
from .policies import (
    AgnosticUcbPlayer,
    DseePlayer,
    K_SCHEDULES,
    MucbPlayer,
)


class ConfigError(ValueError):
    """An experiment configuration violates a documented constraint."""


class Variant(str, Enum):
    """Information-asymmetry regime: what each player observes after a round."""

    A = "A"            # unobserved actions, common reward
    B_PRIME = "B_prime"  # observed actions, independent rewards
    B = "B"            # unobserved actions, independent rewards


@dataclass(frozen=True)
class Feedback:
    """Exactly what one player is handed after a round; shape enforces the asymmetry contract."""

    own_reward: float
    joint_action: ArmTuple | None  # present iff variant B'
    common: bool                   # true iff variant A


@dataclass
class RegretLedger:
    """Per-run pseudo-regret and pull accounting, checkpointed on a time grid."""

    pseudo_regret: float
    pulls: dict[ArmTuple, int]
    checkpoints: list[tuple[int, float]]
    realized_reward: float
    max_decomposition_error: float
    anticipation_mismatches: int | None = None
    final_commit: ArmTuple | None = None
    tail_pulls: dict[ArmTuple, int] | None = None


@dataclass
class ExperimentResult:
    """Checkpoint matrix across runs plus per-checkpoint mean and sample std."""

    algorithm: str
    variant: str
    grid: list[int]
    seeds: list[int]
    matrix: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    ledgers: list[RegretLedger]
    env_means: dict[ArmTuple, float]
    env_gaps: dict[ArmTuple, float]


# Decomposition identity (regret = sum of gap * pulls) is checked at every
# checkpoint; compensated summation keeps the slack far below this bound.
DECOMP_TOLERANCE = 1e-9


def checkpoint_grid(horizon: int) -> list[int]:
    """Default grid: every round up to 100, then 50 log-spaced points per decade, plus the horizon."""
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    pts = set(range(1, min(horizon, 100) + 1))
    k = 0
    while True:
        v = round(10 ** (k / 50))
        if v > horizon:
            break
        pts.add(v)
        k += 1
    pts.add(horizon)
    return sorted(pts)


def check_compatible(algorithm: str, variant: Variant, reward_model: str) -> None:
    if reward_model == "markov" and variant is not Variant.A:
        raise ConfigError(
            "Markovian rewards are analyzed for the common-reward setting only; "
            f"variant {variant.value} is not supported"
        )
    if algorithm == "mucb" and variant is Variant.B:
        raise ConfigError(
            "mucb under variant B is only meaningful as the linear-regret "
            "demonstration, which runs under B_prime; set allow_negative_result "
            "in the experiment config to run it"
        )


def resolve_k_schedule(spec) -> "tuple[str, object]":
    """Map a config k_schedule entry to (name, callable)."""
    if isinstance(spec, str):
        if spec not in K_SCHEDULES:
            raise ConfigError(
                f"unknown k_schedule {spec!r}; expected one of {sorted(K_SCHEDULES)} or a table"
            )
        return spec, K_SCHEDULES[spec]
    table = [int(v) for v in spec]
    if not table or any(v < 1 for v in table):
        raise ConfigError("a k_schedule table must be a non-empty list of positive integers")
    if any(b < a for a, b in zip(table, table[1:])):
        raise ConfigError("a k_schedule table must be monotone non-decreasing")

    def from_table(lam: int, _table=tuple(table)) -> int:
        # phases beyond the table keep the last budget
        return _table[min(lam, len(_table)) - 1]

    return "table", from_table


def make_players(algorithm: str, space: ArmSpace, seed: int, k_schedule=None) -> list:
    if algorithm == "mucb":
        return [MucbPlayer(i, space) for i in range(space.n_players)]
    if algorithm == "agnostic_ucb":
        return [AgnosticUcbPlayer(i, space) for i in range(space.n_players)]
    if algorithm == "mdsee":
        k_fn = k_schedule if k_schedule is not None else K_SCHEDULES["identity"]
        return [
            DseePlayer(i, space, k_fn, tie_break_rng(seed, i))
            for i in range(space.n_players)
        ]
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def run_episode(
    env: IidEnv | MarkovEnv,
    variant: Variant | str,
    players: Sequence,
    horizon: int,
    seed: int,
    *,
    grid: Sequence[int] | None = None,
    use_kernel: bool | None = None,
    tail_window: int = 0,
) -> RegretLedger:
    """Run one episode of `horizon` rounds; deterministic given (env spec, seed).

    Each round: collect every player's arm, form the joint tuple, sample rewards
    under the variant's routing, hand each player only the feedback fields the
    variant permits, and accrue the realized tuple's gap into the ledger.
    """
    variant = Variant(variant)
    space = env.space
    if len(players) != space.n_players:
        raise ConfigError(
            f"{space.n_players} players expected for this arm space, got {len(players)}"
        )
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    if isinstance(env, MarkovEnv) and variant is not Variant.A:
        raise ConfigError("Markovian environments support variant A only")
    algorithm = getattr(players[0], "algorithm", None)
    if algorithm is not None and all(getattr(p, "algorithm", None) == algorithm for p in players):
        check_compatible(algorithm, variant, env.kind)
    if grid is None:
        grid_list = checkpoint_grid(horizon)
    else:
        grid_list = [int(t) for t in grid]
        if grid_list != sorted(set(grid_list)) or grid_list[0] < 1 or grid_list[-1] > horizon:
            raise ConfigError("checkpoint grid must be strictly increasing within [1, horizon]")
    if not 0 <= tail_window <= horizon:
        raise ConfigError("tail_window must lie in [0, horizon]")

    if use_kernel is not False:
        ledger = _kernel_episode(env, variant, players, horizon, seed, grid_list, tail_window)
        if ledger is not None:
            return ledger
        if use_kernel:
            raise ConfigError("no compiled kernel supports this configuration")
    return _python_episode(env, variant, players, horizon, seed, grid_list, tail_window)


def _python_episode(env, variant, players, horizon, seed, grid, tail_window) -> RegretLedger:
    space = env.space
    k_max = space.k_max
    strides = space.strides
    gaps = [float(g) for g in env.gaps_flat]
    bound = env.bind(seed)
    n_players = space.n_players

    pulls = [0] * k_max
    tail = [0] * k_max if tail_window > 0 else None
    checkpoints: list[tuple[int, float]] = []
    # compensated (Kahan) accumulators; read as s - c
    ps, pc = 0.0, 0.0
    rs, rc = 0.0, 0.0
    max_err = 0.0
    mismatches = 0
    track_mucb = all(isinstance(p, MucbPlayer) for p in players)
    gi = 0

    for t in range(1, horizon + 1):
        arms = [p.select(t) for p in players]
        kk = 0
        for i in range(n_players):
            kk += (arms[i] - 1) * strides[i]
        if track_mucb:
            for p in players:
                if p._pending != kk:
                    mismatches += 1
                    break
        joint = tuple(arms)

        if variant is Variant.A:
            x = bound.sample_common(joint)
            for p in players:
                fb = Feedback(x, None, True)
                p.update(fb.own_reward, joint_action=fb.joint_action)
            x0 = x
        else:
            xs = bound.sample_independent(joint)
            shared = joint if variant is Variant.B_PRIME else None
            for i, p in enumerate(players):
                fb = Feedback(xs[i], shared, False)
                p.update(fb.own_reward, joint_action=fb.joint_action)
            x0 = xs[0]

        y = gaps[kk] - pc
        tt = ps + y
        pc = (tt - ps) - y
        ps = tt
        y = x0 - rc
        tt = rs + y
        rc = (tt - rs) - y
        rs = tt

        pulls[kk] += 1
        if tail is not None and t > horizon - tail_window:
            tail[kk] += 1
        if gi < len(grid) and t == grid[gi]:
            total = ps - pc
            dot = 0.0
            for k in range(k_max):
                dot += gaps[k] * pulls[k]
            err = abs(total - dot)
            if err > max_err:
                max_err = err
            checkpoints.append((t, total))
            gi += 1

    if max_err > DECOMP_TOLERANCE:
        raise RuntimeError(
            f"regret decomposition violated: |pseudo - sum(gap * pulls)| = {max_err}"
        )

    final_commit = None
    if all(isinstance(p, DseePlayer) for p in players):
        comps = [p.committed_tuple for p in players]
        if all(c is not None for c in comps):
            final_commit = tuple(c[i] for i, c in enumerate(comps))

    return RegretLedger(
        pseudo_regret=ps - pc,
        pulls={space.tuple_at(k): pulls[k] for k in range(k_max)},
        checkpoints=checkpoints,
        realized_reward=rs - rc,
        max_decomposition_error=max_err,
        anticipation_mismatches=mismatches if track_mucb else None,
        final_commit=final_commit,
        tail_pulls=(
            {space.tuple_at(k): tail[k] for k in range(k_max)} if tail is not None else None
        ),
    )


def _kernel_episode(env, variant, players, horizon, seed, grid, tail_window):
    if not kernels.compiled_available():
        return None
    space = env.space
    dims = np.asarray(space.arm_counts, dtype=np.int64)
    gaps = np.asarray(env.gaps_flat, dtype=np.float64)
    grid_arr = np.asarray(grid, dtype=np.int64)

    fresh = all(getattr(p, "t", None) == 0 or getattr(getattr(p, "table", None), "t", None) == 0
                for p in players)
    if not fresh:
        return None

    out = None
    if all(isinstance(p, MucbPlayer) for p in players):
        if isinstance(env, IidEnv) and variant in (Variant.A, Variant.B_PRIME):
            bound = env.bind(seed)
            out = kernels.compiled.run_mucb_iid(
                dims, gaps, horizon, grid_arr, bound, CHUNK,
                variant is Variant.A, tail_window,
            )
        elif isinstance(env, MarkovEnv) and variant is Variant.A:
            bound = env.bind(seed)
            smax = max(c.n_states for c in env.chains)
            rewards = np.zeros((space.k_max, smax), dtype=np.float64)
            cum = np.ones((space.k_max, smax, smax), dtype=np.float64)
            nstates = np.zeros(space.k_max, dtype=np.int64)
            states = np.zeros(space.k_max, dtype=np.int64)
            for k, chain in enumerate(env.chains):
                s = chain.n_states
                rewards[k, :s] = chain.rewards
                cum[k, :s, :s] = env.cum_rows[k]
                nstates[k] = s
                states[k] = chain.initial_state
            out = kernels.compiled.run_mucb_markov(
                dims, gaps, horizon, grid_arr, bound, CHUNK,
                rewards, cum, nstates, states, tail_window,
            )
    elif all(isinstance(p, AgnosticUcbPlayer) for p in players):
        if isinstance(env, IidEnv) and variant is Variant.A:
            bound = env.bind(seed)
            out = kernels.compiled.run_agnostic_iid(
                dims, gaps, horizon, grid_arr, bound, CHUNK, tail_window,
            )
    elif all(isinstance(p, DseePlayer) for p in players):
        same_schedule = all(p.k_of_lambda is players[0].k_of_lambda for p in players)
        if isinstance(env, IidEnv) and same_schedule:
            lam_max = max(2, horizon).bit_length() + 3
            kvals = np.zeros(lam_max + 1, dtype=np.int64)
            for lam in range(1, lam_max + 1):
                kvals[lam] = phase_repeats(players[0].k_of_lambda, lam)
            bound = env.bind(seed)
            out = kernels.compiled.run_mdsee_iid(
                dims, gaps, horizon, grid_arr, bound, CHUNK,
                kvals, players[0].min_exponent,
                [p.tie_rng for p in players],
                variant is Variant.A, tail_window,
            )

    if out is None:
        return None
    if out["max_decomp_err"] > DECOMP_TOLERANCE:
        raise RuntimeError(
            "regret decomposition violated: |pseudo - sum(gap * pulls)| = "
            f"{out['max_decomp_err']}"
        )
    k_range = range(space.k_max)
    final_commit = None
    if out.get("final_commit", -1) >= 0:
        final_commit = space.tuple_at(int(out["final_commit"]))
    return RegretLedger(
        pseudo_regret=float(out["pseudo"]),
        pulls={space.tuple_at(k): int(out["pulls"][k]) for k in k_range},
        checkpoints=[(int(t), float(v)) for t, v in zip(grid, out["checkpoints"])],
        realized_reward=float(out["realized"]),
        max_decomposition_error=float(out["max_decomp_err"]),
        anticipation_mismatches=(
            int(out["mismatches"]) if out.get("mismatches", -1) >= 0 else None
        ),
        final_commit=final_commit,
        tail_pulls=(
            {space.tuple_at(k): int(out["tail"][k]) for k in k_range}
            if tail_window > 0
            else None
        ),
    )


def run_experiment(config) -> ExperimentResult:
    """Run `config.runs` seeded episodes against one fixed environment realization and aggregate.

    Run r uses seed `config.seed + r`; aggregation is ordered by run index, so
    the result is reproducible regardless of scheduling.
    """
    if config.runs < 1:
        raise ConfigError("runs must be >= 1")
    space = ArmSpace(config.arm_counts)
    env = build_environment(space, config.environment)
    if env.kind != config.reward_model:
        raise ConfigError(
            f"reward_model {config.reward_model!r} does not match the "
            f"{env.kind!r} environment kind"
        )
    variant = Variant(config.variant)
    if config.algorithm == "mucb" and variant is Variant.B:
        if not config.allow_negative_result:
            raise ConfigError(
                "mucb under variant B requires allow_negative_result=true "
                "(linear-regret demonstration; runs under B_prime)"
            )
        variant = Variant.B_PRIME
    check_compatible(config.algorithm, variant, config.reward_model)

    if config.checkpoint_grid == "default":
        grid = checkpoint_grid(config.horizon)
    else:
        grid = [int(t) for t in config.checkpoint_grid]
    _, k_fn = resolve_k_schedule(config.k_schedule)

    seeds = [config.seed + r for r in range(config.runs)]
    ledgers = []
    for seed_r in seeds:
        players = make_players(config.algorithm, space, seed_r, k_schedule=k_fn)
        ledgers.append(
            run_episode(env, variant, players, config.horizon, seed_r, grid=grid)
        )
    matrix = np.array(
        [[v for _, v in ledger.checkpoints] for ledger in ledgers], dtype=np.float64
    )
    mean = matrix.mean(axis=0)
    if config.runs == 1:
        std = np.zeros_like(mean)
    else:
        std = matrix.std(axis=0, ddof=1)
    return ExperimentResult(
        algorithm=config.algorithm,
        variant=variant.value,
        grid=grid,
        seeds=seeds,
        matrix=matrix,
        mean=mean,
        std=std,
        ledgers=ledgers,
        env_means=env.mu if isinstance(env, IidEnv) else env.stationary_mean,
        env_gaps=env.gaps,
    )
