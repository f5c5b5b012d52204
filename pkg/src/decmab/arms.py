"""Joint arm space, its lexicographic order, and the deterministic exploration schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

ArmTuple = tuple[int, ...]


@dataclass(frozen=True)
class ArmSpace:
    """Product action set for M players; player i picks from {1, ..., K_i}.

    Arm indices are 1-based on the outside (tuples, serialization).  The flat
    rank used internally enumerates tuples in lexicographic order with the last
    player's component varying fastest.
    """

    arm_counts: tuple[int, ...]

    def __init__(self, arm_counts: Sequence[int]):
        counts = tuple(int(k) for k in arm_counts)
        if not counts:
            raise ValueError("arm_counts must name at least one player")
        if any(k < 1 for k in counts):
            raise ValueError(f"every player needs at least one arm, got {counts}")
        object.__setattr__(self, "arm_counts", counts)

    @property
    def n_players(self) -> int:
        return len(self.arm_counts)

    @property
    def k_max(self) -> int:
        return math.prod(self.arm_counts)

    @property
    def strides(self) -> tuple[int, ...]:
        """Flat-rank weight of each component: strides[i] = K_{i+1} * ... * K_M."""
        out = [1] * self.n_players
        for i in range(self.n_players - 2, -1, -1):
            out[i] = out[i + 1] * self.arm_counts[i + 1]
        return tuple(out)

    def check_tuple(self, a: Sequence[int]) -> ArmTuple:
        t = tuple(int(x) for x in a)
        if len(t) != self.n_players:
            raise ValueError(
                f"arm tuple {t} has {len(t)} components, expected {self.n_players}"
            )
        for i, (x, k) in enumerate(zip(t, self.arm_counts)):
            if not 1 <= x <= k:
                raise ValueError(
                    f"component {i + 1} of {t} is outside [1, {k}]"
                )
        return t

    def flat_index(self, a: Sequence[int]) -> int:
        t = self.check_tuple(a)
        idx = 0
        for x, s in zip(t, self.strides):
            idx += (x - 1) * s
        return idx

    def tuple_at(self, flat: int) -> ArmTuple:
        if not 0 <= flat < self.k_max:
            raise ValueError(f"flat index {flat} outside [0, {self.k_max})")
        out = []
        for k, s in zip(self.arm_counts, self.strides):
            out.append((flat // s) % k + 1)
        return tuple(out)

    def all_tuples(self) -> Iterator[ArmTuple]:
        for flat in range(self.k_max):
            yield self.tuple_at(flat)


def lex_compare(x: Sequence[int], y: Sequence[int]) -> int:
    """Strict lexicographic comparison of two arm tuples: -1, 0, or +1.

    The first differing component decides, so the relation is a total order.
    """
    if len(x) != len(y):
        raise ValueError(f"cannot compare tuples of lengths {len(x)} and {len(y)}")
    for a, b in zip(x, y):
        if a < b:
            return -1
        if a > b:
            return 1
    return 0


def initial_schedule(space: ArmSpace) -> Iterator[ArmTuple]:
    """Joint action sequence of the coordinated initial sweep.

    Player i holds each arm for K_{i+1}...K_M consecutive rounds and repeats
    the sweep K_1...K_{i-1} times; jointly this enumerates all k_max tuples
    exactly once in lexicographic order (last player's component fastest).
    """
    for flat in range(space.k_max):
        yield space.tuple_at(flat)


def dsee_schedule(
    space: ArmSpace, k_of_lambda: Callable[[int], int], phase: int
) -> Iterator[ArmTuple]:
    """Phase-`phase` joint exploration block of the phased explore-then-commit scheme.

    The initial-sweep order with every tuple held for K(phase) consecutive
    rounds; total length K(phase) * k_max.  The schedule function must be
    integer-valued, monotone non-decreasing and diverging (caller's
    responsibility; see the schedule property tests).
    """
    if phase < 1:
        raise ValueError(f"phase must be >= 1, got {phase}")
    reps = phase_repeats(k_of_lambda, phase)
    for flat in range(space.k_max):
        t = space.tuple_at(flat)
        for _ in range(reps):
            yield t


def phase_repeats(k_of_lambda: Callable[[int], int], phase: int) -> int:
    """Evaluate a per-arm exploration budget K(phase), validating the value."""
    reps = k_of_lambda(phase)
    if not isinstance(reps, int) or reps < 1:
        raise ValueError(
            f"schedule function must return a positive integer, got {reps!r} at phase {phase}"
        )
    return reps
