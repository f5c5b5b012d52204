"""Experiment configuration parsing, orchestration entry point, and bit-stable CSV output.

Config files are JSON objects; see README.md for the schema.  Every default is
echoed explicitly into the metadata sidecar so results are self-describing.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .analysis import BoundInput, bound_thm1, bound_thm2
from .arms import ArmSpace
from .environments import build_environment, estimate_lockin_probability
from .simulator import (
    ConfigError,
    ExperimentResult,
    resolve_k_schedule,
    run_experiment,
)

ALGORITHMS = ("mucb", "mdsee", "agnostic_ucb")
VARIANTS = ("A", "B_prime", "B")
REWARD_MODELS = ("iid", "markov")

_TOP_KEYS = {
    "algorithm",
    "variant",
    "reward_model",
    "arm_counts",
    "horizon",
    "runs",
    "seed",
    "environment",
    "k_schedule",
    "checkpoint_grid",
    "output_path",
    "allow_negative_result",
}

_ENV_KEYS = {
    "random_gaussian": {"kind", "mean_range", "std_range", "seed"},
    "explicit": {"kind", "entries"},
    "counterexample": {"kind"},
    "markov": {"kind", "chains"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    variant: str
    reward_model: str
    arm_counts: tuple[int, ...]
    horizon: int
    runs: int
    seed: int
    environment: dict
    k_schedule: str | tuple[int, ...] = "identity"
    checkpoint_grid: str | tuple[int, ...] = "default"
    output_path: str | None = None
    allow_negative_result: bool = False


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _validate_environment(env: dict, arm_counts: tuple[int, ...], variant: str) -> dict:
    _require(isinstance(env, dict), "environment must be an object")
    kind = env.get("kind")
    _require(
        kind in _ENV_KEYS,
        f"environment.kind must be one of {sorted(_ENV_KEYS)}, got {kind!r}",
    )
    unknown = set(env) - _ENV_KEYS[kind]
    _require(not unknown, f"unknown environment key(s): {sorted(unknown)}")
    if kind == "random_gaussian":
        for key in ("mean_range", "std_range"):
            rng = env.get(key)
            _require(
                isinstance(rng, (list, tuple)) and len(rng) == 2,
                f"environment.{key} must be a [low, high] pair",
            )
        _require("seed" in env, "environment.seed is required for random_gaussian")
        _require(
            0 < float(env["std_range"][0]) <= float(env["std_range"][1]),
            "environment.std_range must satisfy 0 < low <= high",
        )
    elif kind == "explicit":
        _require(
            isinstance(env.get("entries"), list) and env["entries"],
            "environment.entries must be a non-empty list",
        )
    elif kind == "counterexample":
        _require(
            tuple(arm_counts) == (2, 2),
            "the counterexample environment forces arm_counts = [2, 2]",
        )
        _require(
            variant == "B_prime",
            "the counterexample environment forces variant B_prime",
        )
    elif kind == "markov":
        _require(
            isinstance(env.get("chains"), list) and env["chains"],
            "environment.chains must be a non-empty list",
        )
    return dict(env)


def parse_config(data: bytes) -> ExperimentConfig:
    """Parse and validate a JSON config; diagnostics name the offending key."""
    try:
        raw = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config is not valid UTF-8 JSON: {exc}") from exc
    _require(isinstance(raw, dict), "config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"unknown config key(s): {sorted(unknown)}")
    for key in ("algorithm", "variant", "arm_counts", "horizon", "runs", "seed", "environment"):
        _require(key in raw, f"missing required config key {key!r}")

    algorithm = raw["algorithm"]
    _require(algorithm in ALGORITHMS, f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    variant = raw["variant"]
    _require(variant in VARIANTS, f"variant must be one of {VARIANTS}, got {variant!r}")
    reward_model = raw.get("reward_model", "iid")
    _require(
        reward_model in REWARD_MODELS,
        f"reward_model must be one of {REWARD_MODELS}, got {reward_model!r}",
    )

    arm_counts = raw["arm_counts"]
    _require(
        isinstance(arm_counts, list) and arm_counts and all(isinstance(k, int) and k >= 1 for k in arm_counts),
        "arm_counts must be a non-empty list of integers >= 1",
    )
    arm_counts = tuple(arm_counts)

    horizon = raw["horizon"]
    _require(isinstance(horizon, int) and horizon >= 1, "horizon must be an integer >= 1")
    runs = raw["runs"]
    _require(isinstance(runs, int) and runs >= 1, "runs must be >= 1")
    seed = raw["seed"]
    _require(isinstance(seed, int) and 0 <= seed < 2**64, "seed must be an unsigned 64-bit integer")

    allow_negative = raw.get("allow_negative_result", False)
    _require(isinstance(allow_negative, bool), "allow_negative_result must be a boolean")
    if algorithm == "mucb" and variant == "B":
        _require(
            allow_negative,
            "algorithm mucb under variant B is accepted only with "
            "allow_negative_result=true (linear-regret demonstration via B_prime)",
        )

    # with the demonstration flag, mucb under B executes under B_prime semantics
    effective_variant = (
        "B_prime" if (algorithm == "mucb" and variant == "B" and allow_negative) else variant
    )
    environment = _validate_environment(raw["environment"], arm_counts, effective_variant)
    env_kind = environment["kind"]
    _require(
        (reward_model == "markov") == (env_kind == "markov"),
        f"reward_model {reward_model!r} does not match environment.kind {env_kind!r}",
    )
    if reward_model == "markov":
        _require(variant == "A", "Markovian rewards require variant A")

    k_schedule = raw.get("k_schedule", "identity")
    if "k_schedule" in raw:
        _require(algorithm == "mdsee", "k_schedule applies to the mdsee algorithm only")
    resolve_k_schedule(k_schedule)  # validates shape
    if isinstance(k_schedule, list):
        k_schedule = tuple(k_schedule)

    grid = raw.get("checkpoint_grid", "default")
    if grid != "default":
        _require(
            isinstance(grid, list) and grid and all(isinstance(t, int) for t in grid),
            "checkpoint_grid must be \"default\" or a list of integers",
        )
        _require(
            grid == sorted(set(grid)) and grid[0] >= 1 and grid[-1] <= horizon,
            "checkpoint_grid must be strictly increasing within [1, horizon]",
        )
        grid = tuple(grid)

    output_path = raw.get("output_path")
    _require(
        output_path is None or isinstance(output_path, str),
        "output_path must be a string path",
    )

    return ExperimentConfig(
        algorithm=algorithm,
        variant=variant,
        reward_model=reward_model,
        arm_counts=arm_counts,
        horizon=horizon,
        runs=runs,
        seed=seed,
        environment=environment,
        k_schedule=k_schedule,
        checkpoint_grid=grid,
        output_path=output_path,
        allow_negative_result=allow_negative,
    )


def config_to_dict(config: ExperimentConfig) -> dict:
    """Full config echo, defaults included; parse_config on its JSON round-trips."""
    return {
        "algorithm": config.algorithm,
        "variant": config.variant,
        "reward_model": config.reward_model,
        "arm_counts": list(config.arm_counts),
        "horizon": config.horizon,
        "runs": config.runs,
        "seed": config.seed,
        "environment": config.environment,
        **({"k_schedule": list(config.k_schedule) if isinstance(config.k_schedule, tuple) else config.k_schedule}
           if config.algorithm == "mdsee" else {}),
        "checkpoint_grid": (
            list(config.checkpoint_grid)
            if isinstance(config.checkpoint_grid, tuple)
            else config.checkpoint_grid
        ),
        "output_path": config.output_path,
        "allow_negative_result": config.allow_negative_result,
    }


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(result: ExperimentResult, path: str | Path, config: ExperimentConfig | None = None) -> None:
    """Write per-run checkpoint rows, aggregate rows, and a metadata sidecar.

    Data rows:      algorithm,variant,run,seed,t,pseudo_regret
    Aggregate rows: algorithm,variant,AGG,seed0,t,mean,std
    Byte-identical output for identical inputs.
    """
    if not result.grid or result.matrix.shape[0] < 1:
        raise ValueError("cannot emit an empty result")
    lines = ["algorithm,variant,run,seed,t,pseudo_regret"]
    for r, seed_r in enumerate(result.seeds):
        for j, t in enumerate(result.grid):
            lines.append(
                f"{result.algorithm},{result.variant},{r},{seed_r},{t},{_fmt(result.matrix[r, j])}"
            )
    seed0 = result.seeds[0]
    for j, t in enumerate(result.grid):
        lines.append(
            f"{result.algorithm},{result.variant},AGG,{seed0},{t},"
            f"{_fmt(result.mean[j])},{_fmt(result.std[j])}"
        )
    path = Path(path)
    if path.parent != Path():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    meta = {
        "artifact_version": __version__,
        "regret_definition": "pseudo-regret: sum over rounds of the realized tuple's gap",
        "effective_variant": result.variant,
        "environment": {
            "means": {_tuple_key(a): m for a, m in result.env_means.items()},
            "gaps": {_tuple_key(a): g for a, g in result.env_gaps.items()},
        },
    }
    if config is not None:
        meta["config"] = config_to_dict(config)
    meta_path = Path(str(path) + ".meta.json")
    meta_path.write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n"
    )


def _tuple_key(a) -> str:
    return ",".join(str(x) for x in a)


def _load_config(args) -> ExperimentConfig:
    data = Path(args.config).read_bytes()
    raw = json.loads(data.decode("utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for name in ("seed", "runs", "horizon"):
        value = getattr(args, name, None)
        if value is not None:
            raw[name] = value
    if getattr(args, "out", None) is not None:
        raw["output_path"] = args.out
    return parse_config(json.dumps(raw).encode("utf-8"))


def _cmd_run(args) -> int:
    config = _load_config(args)
    result = run_experiment(config)
    out = config.output_path
    if out is None:
        raise ConfigError("no output path: set output_path in the config or pass --out")
    emit_csv(result, out, config)
    print(f"wrote {out} ({config.runs} runs x {len(result.grid)} checkpoints)")
    return 0


def _cmd_bounds(args) -> int:
    config = _load_config(args)
    space = ArmSpace(config.arm_counts)
    env = build_environment(space, config.environment)
    inp = BoundInput(gaps=env.gaps, k_max=space.k_max, horizon=config.horizon)
    print(f"horizon {config.horizon}")
    print(f"gap_dependent_bound {_fmt(bound_thm1(inp))}")
    print(f"gap_independent_bound {_fmt(bound_thm2(inp))}")
    return 0


def _cmd_counterexample(args) -> int:
    p_hat, se = estimate_lockin_probability(args.trials, args.seed)
    lo, hi = p_hat - 3.0 * se, p_hat + 3.0 * se
    print(f"trials {args.trials}")
    print(f"p_hat {_fmt(p_hat)}")
    print(f"standard_error {_fmt(se)}")
    print(f"interval_3sigma [{_fmt(lo)}, {_fmt(hi)}]")
    print(f"positive_at_3sigma {str(lo > 0).lower()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decmab",
        description="Decentralized multi-player bandit experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a configured experiment and write CSV output")
    run_p.add_argument("--config", required=True, help="path to a JSON experiment config")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--runs", type=int, default=None, help="override the run count")
    run_p.add_argument("--horizon", type=int, default=None, help="override the horizon")
    run_p.add_argument("--out", default=None, help="override the output CSV path")
    run_p.set_defaults(func=_cmd_run)

    bounds_p = sub.add_parser("bounds", help="print the closed-form regret bounds for a config")
    bounds_p.add_argument("--config", required=True)
    bounds_p.set_defaults(func=_cmd_bounds)

    ce_p = sub.add_parser(
        "counterexample", help="Monte-Carlo estimate of the linear-regret lock-in probability"
    )
    ce_p.add_argument("--trials", type=int, default=1_000_000)
    ce_p.add_argument("--seed", type=int, default=0)
    ce_p.set_defaults(func=_cmd_counterexample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
