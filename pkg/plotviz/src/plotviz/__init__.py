"""Regret-curve figures from decmab CSV output: mean line plus a shaded 2-std band, log time axis."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__version__ = "0.1.0"

HEADER = "algorithm,variant,run,seed,t,pseudo_regret"

# first series black, baselines green/red, then the default cycle
DEFAULT_COLORS = ["black", "green", "red", "tab:blue", "tab:orange", "tab:purple"]


class SchemaError(ValueError):
    """A CSV does not conform to the decmab output schema."""


class SeriesData(NamedTuple):
    t: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    runs: dict[str, np.ndarray]  # run id -> per-checkpoint values


@dataclass
class PlotSpec:
    series: list[tuple[str, str]]  # (label, csv path)
    out: str
    title: str | None = None
    colors: dict[str, str] = field(default_factory=dict)
    show_runs: bool = False


def load_series(path: str | Path) -> SeriesData:
    """Parse one decmab CSV; aggregate rows drive the plot, per-run rows are optional overlays."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != HEADER:
        raise SchemaError(f"{path}: line 1: expected header {HEADER!r}")
    agg_t, agg_mean, agg_std = [], [], []
    runs: dict[str, list[float]] = {}
    run_t: dict[str, list[int]] = {}
    for n, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) == 7 and fields[2] == "AGG":
            try:
                agg_t.append(int(fields[4]))
                agg_mean.append(float(fields[5]))
                agg_std.append(float(fields[6]))
            except ValueError as exc:
                raise SchemaError(f"{path}: line {n}: bad aggregate row: {exc}") from exc
        elif len(fields) == 6:
            try:
                run_t.setdefault(fields[2], []).append(int(fields[4]))
                runs.setdefault(fields[2], []).append(float(fields[5]))
            except ValueError as exc:
                raise SchemaError(f"{path}: line {n}: bad data row: {exc}") from exc
        else:
            raise SchemaError(f"{path}: line {n}: expected 6 or 7 fields, got {len(fields)}")
    if not agg_t:
        raise SchemaError(f"{path}: no aggregate rows found")
    t = np.array(agg_t, dtype=np.int64)
    for run, ts in run_t.items():
        if ts != agg_t:
            raise SchemaError(f"{path}: run {run} checkpoint grid differs from the aggregate grid")
    return SeriesData(
        t=t,
        mean=np.array(agg_mean, dtype=np.float64),
        std=np.array(agg_std, dtype=np.float64),
        runs={r: np.array(v, dtype=np.float64) for r, v in runs.items()},
    )


def render(spec: PlotSpec) -> dict[str, SeriesData]:
    """Render the figure to spec.out and return the data plotted, keyed by label.

    A pure function of the CSV bytes and the spec: no clock, no RNG.
    """
    if not spec.series:
        raise ValueError("at least one --series is required")
    loaded: dict[str, SeriesData] = {}
    grid_ref = None
    grid_src = None
    for label, path in spec.series:
        data = load_series(path)
        if grid_ref is None:
            grid_ref, grid_src = data.t, path
        elif not np.array_equal(grid_ref, data.t):
            first_bad = int(np.argmax(grid_ref[: len(data.t)] != data.t[: len(grid_ref)])) \
                if len(data.t) == len(grid_ref) else min(len(data.t), len(grid_ref))
            raise SchemaError(
                f"{path}: checkpoint grid differs from {grid_src} "
                f"(first difference at grid row {first_bad})"
            )
        loaded[label] = data

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for idx, (label, path) in enumerate(spec.series):
        data = loaded[label]
        color = spec.colors.get(label, DEFAULT_COLORS[idx % len(DEFAULT_COLORS)])
        ax.plot(data.t, data.mean, color=color, label=label)
        ax.fill_between(
            data.t, data.mean - 2.0 * data.std, data.mean + 2.0 * data.std,
            color=color, alpha=0.25, linewidth=0,
        )
        if spec.show_runs:
            for values in data.runs.values():
                ax.plot(data.t, values, color=color, alpha=0.2, linewidth=0.6)
    ax.set_xscale("log")
    ax.set_xlabel("round")
    ax.set_ylabel("pseudo-regret")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.tight_layout()
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return loaded
