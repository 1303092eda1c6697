"""Tabular Q-learning with epsilon-greedy exploration.

The learner observes the agent's cell only; the incorrect-ping counter is
hidden from it.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .env import N_ACTIONS, Action, GridConfig

# every select_action call consumes exactly this many rng.random() values
DRAWS_PER_SELECT = 2


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.6
    gamma: float = 0.9
    epsilon: float = 0.6

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")


class QTable:
    """Dense action values, one list of 5 floats per cell (row-major)."""

    def __init__(self, rows: int, cols: int, fill: float = 0.0):
        self.rows = rows
        self.cols = cols
        self.values = [[float(fill)] * N_ACTIONS for _ in range(rows * cols)]

    @classmethod
    def for_grid(cls, cfg: GridConfig, fill: float = 0.0) -> "QTable":
        return cls(cfg.rows, cfg.cols, fill)

    @classmethod
    def from_array(cls, arr) -> "QTable":
        arr = np.asarray(arr, dtype=float)
        rows, cols, n = arr.shape
        if n != N_ACTIONS:
            raise ValueError(f"expected {N_ACTIONS} actions per cell, got {n}")
        q = cls(rows, cols)
        q.values = [list(map(float, cell)) for cell in arr.reshape(rows * cols, n)]
        return q

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float).reshape(self.rows, self.cols, N_ACTIONS)

    def copy(self) -> "QTable":
        q = QTable(self.rows, self.cols)
        q.values = [list(cell) for cell in self.values]
        return q

    def cell(self, pos) -> list[float]:
        return self.values[pos[0] * self.cols + pos[1]]

    def __getitem__(self, key) -> float:
        pos, action = key
        return self.values[pos[0] * self.cols + pos[1]][action]

    def __setitem__(self, key, value: float) -> None:
        pos, action = key
        self.values[pos[0] * self.cols + pos[1]][action] = float(value)

    def __eq__(self, other):
        if not isinstance(other, QTable):
            return NotImplemented
        return (self.rows, self.cols, self.values) == (other.rows, other.cols, other.values)

    def __repr__(self):
        return f"QTable({self.rows}x{self.cols}, max={max_q(self):.4g})"


def greedy_actions(values: list[float]) -> list[int]:
    best = max(values)
    return [a for a, v in enumerate(values) if v == best]


def select_action(q: QTable, pos, epsilon: float, rng: random.Random) -> Action:
    """Epsilon-greedy choice at ``pos``.

    Draws two uniforms every call: the first decides explore vs exploit, the
    second picks uniformly among all 5 actions (explore) or among the tied
    maximisers (exploit).
    """
    u = rng.random()
    v = rng.random()
    if u < epsilon:
        return Action(int(v * N_ACTIONS))
    best = greedy_actions(q.values[pos[0] * q.cols + pos[1]])
    return Action(best[int(v * len(best))])


def q_update(q: QTable, pos, action, reward: float, next_pos, terminal: bool,
             hp: Hyperparams) -> QTable:
    """One Q-learning backup, in place. Terminal transitions do not bootstrap."""
    if not math.isfinite(reward):
        raise ValueError(f"reward must be finite, got {reward}")
    cols = q.cols
    row = q.values[pos[0] * cols + pos[1]]
    if terminal:
        target = reward
    else:
        target = reward + hp.gamma * max(q.values[next_pos[0] * cols + next_pos[1]])
    row[action] += hp.alpha * (target - row[action])
    return q


def max_q(q: QTable) -> float:
    return max(max(cell) for cell in q.values)
