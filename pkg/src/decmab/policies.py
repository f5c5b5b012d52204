"""Per-player learning policies: coordinated UCB, phased explore-then-commit, and the agnostic baseline.

Players are driven round by round: ``arm = player.select(t)`` then
``player.update(reward, joint_action=...)`` once feedback arrives.  Each player
object is confined to one run and sees nothing beyond its feedback values.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .arms import ArmSpace, ArmTuple, phase_repeats


class InvalidStateError(RuntimeError):
    """A policy operation was invoked outside its legal lifecycle."""


def k_identity(lam: int) -> int:
    return lam


def k_ceil_log2(lam: int) -> int:
    # ceil(log2(lam + 1)) computed exactly in integer arithmetic
    return lam.bit_length()


K_SCHEDULES: dict[str, Callable[[int], int]] = {
    "identity": k_identity,
    "ceil_log2": k_ceil_log2,
}


class UcbTable:
    """Pull counts and running sample means over joint tuples.

    ``t`` is the current round number; the confidence level is pinned to
    delta = 1/t^2, so the exploration bonus is sqrt(4 ln t / n).
    """

    __slots__ = ("space", "n", "mean", "t")

    def __init__(self, space: ArmSpace):
        self.space = space
        self.n = [0] * space.k_max
        self.mean = [0.0] * space.k_max
        self.t = 0

    def record(self, k: int, reward: float) -> None:
        n1 = self.n[k] + 1
        self.n[k] = n1
        m = self.mean[k]
        self.mean[k] = m + (reward - m) / n1


def index_value(mean: float, n: int, t: int) -> float:
    """UCB index: +inf while unsampled, else mean + sqrt(4 ln t / n)."""
    if n == 0:
        return math.inf
    return mean + math.sqrt(4.0 * math.log(t) / n)


def ucb_index(table: UcbTable, a: Sequence[int]) -> float:
    if table.t == 0:
        raise InvalidStateError("the index is undefined before any round")
    k = table.space.flat_index(a)
    return index_value(table.mean[k], table.n[k], table.t)


def argmax_index(table: UcbTable) -> int:
    """Flat index of the maximal-index tuple; ties resolved to the lexicographic minimum.

    An unsampled tuple dominates (its index is the +inf sentinel), compared
    before any arithmetic; among several the lexicographically first wins.
    """
    k_max = table.space.k_max
    for k in range(k_max):
        if table.n[k] == 0:
            return k
    bonus_num = 4.0 * math.log(table.t)
    best = 0
    best_val = table.mean[0] + math.sqrt(bonus_num / table.n[0])
    for k in range(1, k_max):
        v = table.mean[k] + math.sqrt(bonus_num / table.n[k])
        if v > best_val:
            best_val = v
            best = k
    return best


class MucbPlayer:
    """Coordinated UCB over joint tuples.

    Rounds 1..k_max follow the agreed initial sweep; afterwards the player
    plays its component of the index-maximizing tuple.  Under common rewards
    every player holds an identical table, so the anticipated joint action
    matches what is actually played.
    """

    algorithm = "mucb"

    def __init__(self, player_index: int, space: ArmSpace):
        self.player_index = player_index
        self.space = space
        self.table = UcbTable(space)
        self.anticipated_joint: ArmTuple | None = None
        self._pending: int | None = None

    def select(self, t: int) -> int:
        if t != self.table.t + 1:
            raise InvalidStateError(f"expected round {self.table.t + 1}, got {t}")
        self.table.t = t
        if t <= self.space.k_max:
            k = t - 1
        else:
            k = argmax_index(self.table)
        self.anticipated_joint = self.space.tuple_at(k)
        self._pending = k
        return self.anticipated_joint[self.player_index]

    def update(self, reward: float, joint_action: Sequence[int] | None = None) -> None:
        if self._pending is None:
            raise InvalidStateError("update without a pending selection")
        k = self._pending if joint_action is None else self.space.flat_index(joint_action)
        self.table.record(k, reward)
        self._pending = None


def mucb_select(player: MucbPlayer, t: int) -> int:
    """Exploit-phase selection; rejects calls during the initial sweep."""
    if t <= player.space.k_max:
        raise InvalidStateError(
            f"round {t} is still inside the initial sweep of length {player.space.k_max}"
        )
    return player.select(t)


class DseePlayer:
    """Phased explore-then-commit over joint tuples.

    Phase lam explores every tuple K(lam) times in the shared deterministic
    order, then the player commits to its component of its own sample-mean
    argmax until the next power-of-2 round eligible to start a phase
    (2^n with n >= floor(log2(K(1) * k_max)) + 1).  Sample means accumulate
    from exploration rounds only: during a commit stretch the joint tuple is
    unknown to the player, so those rewards are not attributed.
    """

    algorithm = "mdsee"

    def __init__(
        self,
        player_index: int,
        space: ArmSpace,
        k_of_lambda: Callable[[int], int] = k_identity,
        tie_rng: np.random.Generator | None = None,
    ):
        self.player_index = player_index
        self.space = space
        self.k_of_lambda = k_of_lambda
        self.tie_rng = tie_rng if tie_rng is not None else np.random.default_rng(0)
        self.lam = 1
        self.reps = phase_repeats(k_of_lambda, 1)
        self.block_len = self.reps * space.k_max
        self.pos = 0
        self.mode = "explore"
        self.counts = [0] * space.k_max
        self.means = [0.0] * space.k_max
        self.commit_k: int | None = None
        self.next_boundary: int | None = None
        # phases may start at rounds 2^n with n >= this exponent
        self.min_exponent = (self.reps * space.k_max).bit_length()
        self.t = 0
        self._pending: int | None = None

    def select(self, t: int) -> int:
        if t != self.t + 1:
            raise InvalidStateError(f"expected round {self.t + 1}, got {t}")
        if self.mode == "commit" and t == self.next_boundary:
            self.lam += 1
            self.reps = phase_repeats(self.k_of_lambda, self.lam)
            self.block_len = self.reps * self.space.k_max
            self.pos = 0
            self.mode = "explore"
        if self.mode == "explore":
            k = self.pos // self.reps
        else:
            assert self.commit_k is not None
            k = self.commit_k
        self._pending = k
        return self.space.tuple_at(k)[self.player_index]

    def update(self, reward: float, joint_action: Sequence[int] | None = None) -> None:
        if self._pending is None:
            raise InvalidStateError("update without a pending selection")
        if self.mode == "explore":
            k = self._pending
            n1 = self.counts[k] + 1
            self.counts[k] = n1
            m = self.means[k]
            self.means[k] = m + (reward - m) / n1
            self.pos += 1
            if self.pos == self.block_len:
                self.commit_k = self._pick_commit()
                self.mode = "commit"
                self.next_boundary = self._boundary_after(self.t + 1)
        self.t += 1
        self._pending = None

    def _pick_commit(self) -> int:
        best = max(self.means)
        ties = [k for k in range(self.space.k_max) if self.means[k] == best]
        if len(ties) > 1:
            return ties[int(self.tie_rng.integers(len(ties)))]
        return ties[0]

    def _boundary_after(self, t_end: int) -> int:
        b = 1 << self.min_exponent
        while b <= t_end:
            b <<= 1
        return b

    @property
    def committed_tuple(self) -> ArmTuple | None:
        return None if self.commit_k is None else self.space.tuple_at(self.commit_k)


def dsee_step(player: DseePlayer, t: int) -> int:
    return player.select(t)


class AgnosticUcbPlayer:
    """Single-player UCB over the player's own arms; other players are ignored entirely."""

    algorithm = "agnostic_ucb"

    def __init__(self, player_index: int, space: ArmSpace):
        self.player_index = player_index
        self.space = space
        self.n_arms = space.arm_counts[player_index]
        self.counts = [0] * self.n_arms
        self.means = [0.0] * self.n_arms
        self.t = 0
        self._pending: int | None = None

    def select(self, t: int) -> int:
        if t != self.t + 1:
            raise InvalidStateError(f"expected round {self.t + 1}, got {t}")
        if t <= self.n_arms:
            arm = t - 1
        else:
            arm = 0
            for a in range(self.n_arms):
                if self.counts[a] == 0:
                    arm = a
                    break
            else:
                bonus_num = 4.0 * math.log(t)
                best_val = self.means[0] + math.sqrt(bonus_num / self.counts[0])
                for a in range(1, self.n_arms):
                    v = self.means[a] + math.sqrt(bonus_num / self.counts[a])
                    if v > best_val:
                        best_val = v
                        arm = a
        self._pending = arm
        return arm + 1

    def update(self, reward: float, joint_action: Sequence[int] | None = None) -> None:
        if self._pending is None:
            raise InvalidStateError("update without a pending selection")
        a = self._pending
        n1 = self.counts[a] + 1
        self.counts[a] = n1
        m = self.means[a]
        self.means[a] = m + (reward - m) / n1
        self.t += 1
        self._pending = None
