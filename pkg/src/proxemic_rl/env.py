"""Proxemic gridworld: an issuer sits on a fixed cell, surrounded by an
uncomfortable ring and, outside that, a target ring.  The agent moves with
the four usual actions and may PING to ask whether it stands in the target.

Episodes end when the agent walks onto the issuer (C1), pings incorrectly
``max_incorrect_pings`` times (C2) or pings inside the target ring (C3).

Coordinates are ``(row, col)``, 0-based, origin top-left, rows grow downward.
All state objects are immutable; :func:`env_step` returns a fresh state.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import cached_property
from typing import NamedTuple, Optional


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    PING = 4


MOVES = (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)
N_ACTIONS = len(Action)

# (drow, dcol) per movement action, indexed by int(action)
_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))


class Region(IntEnum):
    ISSUER = 0
    UNCOMFORTABLE = 1
    TARGET = 2
    OUTSIDE = 3


class Termination(Enum):
    C1 = "C1"  # walked onto the issuer
    C2 = "C2"  # too many incorrect pings
    C3 = "C3"  # pinged inside the target ring


# grid reward table
R_FAIL = -1.0
R_UNCOMFORTABLE = -0.8
R_BAD_PING = -0.4
R_STEP = -0.1
R_SUCCESS = 1.0
GRID_REWARDS = frozenset({R_FAIL, R_UNCOMFORTABLE, R_BAD_PING, R_STEP, R_SUCCESS})


class Position(NamedTuple):
    row: int
    col: int


class EnvState(NamedTuple):
    agent_pos: Position
    incorrect_pings: int = 0
    terminated: Optional[Termination] = None


class StepOutcome(NamedTuple):
    next_state: EnvState
    grid_reward: float
    region_after: Region
    was_ping: bool
    ping_correct: bool

    @property
    def terminal(self) -> bool:
        return self.next_state.terminated is not None


class TerminatedError(RuntimeError):
    """Raised when stepping an episode that has already ended."""


def chebyshev(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def manhattan(a: tuple[int, int], b: tuple[int, int]) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


@dataclass(frozen=True)
class GridConfig:
    """Static layout of the world. Defaults reproduce the 10x12 experiment."""

    rows: int = 10
    cols: int = 12
    issuer_pos: tuple[int, int] = (6, 8)
    start_pos: tuple[int, int] = (0, 0)
    uncomfortable_radius: int = 1
    target_radius: int = 2
    max_incorrect_pings: int = 5

    def __post_init__(self):
        object.__setattr__(self, "issuer_pos", Position(*self.issuer_pos))
        object.__setattr__(self, "start_pos", Position(*self.start_pos))
        for name in ("rows", "cols", "uncomfortable_radius", "target_radius",
                     "max_incorrect_pings"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.uncomfortable_radius >= self.target_radius:
            raise ValueError("uncomfortable_radius must be smaller than target_radius")
        if not self.contains(self.issuer_pos):
            raise ValueError(f"issuer_pos {tuple(self.issuer_pos)} lies outside the grid")
        if not self.contains(self.start_pos):
            raise ValueError(f"start_pos {tuple(self.start_pos)} lies outside the grid")
        if chebyshev(self.start_pos, self.issuer_pos) <= self.target_radius:
            raise ValueError("start_pos must lie outside the issuer, uncomfortable and target cells")

    def contains(self, pos: tuple[int, int]) -> bool:
        return 0 <= pos[0] < self.rows and 0 <= pos[1] < self.cols

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def cell_index(self, pos: tuple[int, int]) -> int:
        return pos[0] * self.cols + pos[1]

    def cells(self):
        """Yield every position in row-major order."""
        for r in range(self.rows):
            for c in range(self.cols):
                yield Position(r, c)

    @cached_property
    def region_table(self) -> tuple[tuple[Region, ...], ...]:
        # precomputed labels; the hot loop reads this instead of region_of
        return tuple(
            tuple(_label(Position(r, c), self) for c in range(self.cols))
            for r in range(self.rows)
        )


def _label(pos: Position, cfg: GridConfig) -> Region:
    d = chebyshev(pos, cfg.issuer_pos)
    if d == 0:
        return Region.ISSUER
    if d <= cfg.uncomfortable_radius:
        return Region.UNCOMFORTABLE
    if d <= cfg.target_radius:
        return Region.TARGET
    return Region.OUTSIDE


def region_of(pos: tuple[int, int], cfg: GridConfig) -> Region:
    """Label a cell by its Chebyshev ring around the issuer."""
    if not cfg.contains(pos):
        raise ValueError(f"position {tuple(pos)} lies outside the {cfg.rows}x{cfg.cols} grid")
    return cfg.region_table[pos[0]][pos[1]]


def apply_move(pos: tuple[int, int], action: Action, cfg: GridConfig) -> Position:
    """Shift one cell; moves that would leave the grid keep the agent in place."""
    if action == Action.PING:
        raise ValueError("PING is not a movement action")
    dr, dc = _DELTAS[action]
    r, c = pos[0] + dr, pos[1] + dc
    if 0 <= r < cfg.rows and 0 <= c < cfg.cols:
        return Position(r, c)
    return Position(pos[0], pos[1])


def grid_reward(
    region_after: Region,
    termination: Optional[Termination],
    was_ping: bool,
    ping_correct: bool,
) -> float:
    """Environment part of the reward.

    Overlapping cases resolve in table order: terminal outcomes first, then
    occupying the uncomfortable ring, then an incorrect ping, then the step
    cost.
    """
    if termination is Termination.C1 or termination is Termination.C2:
        return R_FAIL
    if termination is Termination.C3:
        return R_SUCCESS
    if region_after == Region.UNCOMFORTABLE:
        return R_UNCOMFORTABLE
    if was_ping and not ping_correct:
        return R_BAD_PING
    return R_STEP


def env_reset(cfg: GridConfig) -> EnvState:
    return EnvState(cfg.start_pos, 0, None)


def env_step(state: EnvState, action: Action, cfg: GridConfig) -> StepOutcome:
    if state.terminated is not None:
        raise TerminatedError(f"episode already ended with {state.terminated.value}")
    pos = state.agent_pos
    pings = state.incorrect_pings
    term = None
    if action == Action.PING:
        region = cfg.region_table[pos[0]][pos[1]]
        correct = region == Region.TARGET
        if correct:
            term = Termination.C3
        else:
            pings += 1
            if pings >= cfg.max_incorrect_pings:
                term = Termination.C2
        nxt = EnvState(pos, pings, term)
        return StepOutcome(nxt, grid_reward(region, term, True, correct), region, True, correct)

    new_pos = apply_move(pos, action, cfg)
    region = cfg.region_table[new_pos[0]][new_pos[1]]
    if region == Region.ISSUER:
        term = Termination.C1
    nxt = EnvState(new_pos, pings, term)
    return StepOutcome(nxt, grid_reward(region, term, False, False), region, False, False)


def region_counts(cfg: GridConfig) -> dict[Region, int]:
    counts = {r: 0 for r in Region}
    for row in cfg.region_table:
        for label in row:
            counts[label] += 1
    return counts
