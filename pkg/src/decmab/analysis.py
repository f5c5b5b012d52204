"""Closed-form regret bounds, growth-shape classification, and confidence bands."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .arms import ArmTuple

# constant in both bound formulas
BOUND_COEFF = 6.0 + 4.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class BoundInput:
    """Gap profile of an environment plus the horizon the bound is evaluated at."""

    gaps: Mapping[ArmTuple, float]
    k_max: int
    horizon: int

    def __post_init__(self):
        if len(self.gaps) != self.k_max:
            raise ValueError(f"expected {self.k_max} gaps, got {len(self.gaps)}")
        vals = list(self.gaps.values())
        if any(g < 0 for g in vals):
            raise ValueError("gaps must be non-negative")
        if min(vals) != 0.0:
            raise ValueError("at least one gap must be zero (the optimum)")
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")


def bound_thm1(inp: BoundInput) -> float:
    """Gap-dependent regret bound: 3*sum(gaps) + sum over positive gaps of (6+4*sqrt(2))*ln(T)/gap."""
    log_t = math.log(inp.horizon)
    total = 3.0 * sum(inp.gaps.values())
    for g in inp.gaps.values():
        if g > 0:
            total += BOUND_COEFF * log_t / g
    return total


def bound_thm2(inp: BoundInput) -> float:
    """Gap-independent bound: 3*k_max + (1 + (6+4*sqrt(2))*#{gaps > eps})*sqrt(T*ln(T)), eps = sqrt(ln(T)/T)."""
    log_t = math.log(inp.horizon)
    eps = math.sqrt(log_t / inp.horizon)
    n_large = sum(1 for g in inp.gaps.values() if g > eps)
    return 3.0 * inp.k_max + (1.0 + BOUND_COEFF * n_large) * math.sqrt(inp.horizon * log_t)


@dataclass(frozen=True)
class GrowthFits:
    """Least-squares fits of a regret curve against ln(t) and against t."""

    fit_log: tuple[float, float]     # (slope, r_squared)
    fit_linear: tuple[float, float]


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), r2


def growth_classifier(checkpoints: Sequence[tuple[int, float]]) -> GrowthFits:
    """Fit the upper half of the checkpoint list (ascending t) both ways.

    The lower half is discarded to skip the forced-exploration transient.
    Requires at least 10 checkpoints spanning at least two decades.
    """
    pts = sorted((int(t), float(v)) for t, v in checkpoints)
    if len(pts) < 10:
        raise ValueError(f"need at least 10 checkpoints, got {len(pts)}")
    if pts[0][0] < 1 or pts[-1][0] < 100 * pts[0][0]:
        raise ValueError("checkpoints must span at least two decades of time")
    upper = pts[len(pts) // 2:]
    if len(upper) < 3:
        raise ValueError("fewer than 3 checkpoints in the upper half")
    t = np.array([p[0] for p in upper], dtype=np.float64)
    v = np.array([p[1] for p in upper], dtype=np.float64)
    return GrowthFits(fit_log=_fit(np.log(t), v), fit_linear=_fit(t, v))


def confidence_band(per_run_values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-checkpoint (mean, mean - 2*std, mean + 2*std); sample std with n-1 denominator."""
    m = np.asarray(per_run_values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("need a runs-by-checkpoints matrix with at least 2 runs")
    mean = m.mean(axis=0)
    std = m.std(axis=0, ddof=1)
    return mean, mean - 2.0 * std, mean + 2.0 * std
