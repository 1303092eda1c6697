"""Exact value iteration on the fully observed MDP.

The learner only sees its cell, but the environment also carries the
incorrect-ping counter.  Here the state is ``(cell, pings)`` with
``pings < max_incorrect_pings``, which makes the process Markov.  Transitions
and rewards come from :func:`env_step` and the issuer model, never from a
separate copy of the dynamics.  S2 is solved in expectation (mean issuer
reward 0), so its solution equals S1's.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .env import N_ACTIONS, Action, EnvState, GridConfig, Position, env_step
from .issuer import Scenario, expected_issuer_reward

DEFAULT_TOL = 1e-10
MAX_ITERATIONS = 10_000


class AugmentedState(NamedTuple):
    pos: Position
    pings: int


class ConvergenceError(RuntimeError):
    pass


@dataclass
class Model:
    """Tabulated one-step dynamics over augmented states."""

    cfg: GridConfig
    scenario: Scenario
    reward: np.ndarray      # (S, A)
    next_index: np.ndarray  # (S, A); self-index for terminal transitions
    terminal: np.ndarray    # (S, A) bool
    termination: list       # (S, A) Termination or None

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    def state_index(self, pos, pings: int) -> int:
        return self.cfg.cell_index(pos) * self.cfg.max_incorrect_pings + pings

    def state_at(self, index: int) -> AugmentedState:
        cell, pings = divmod(index, self.cfg.max_incorrect_pings)
        return AugmentedState(Position(*divmod(cell, self.cfg.cols)), pings)


def transition(cfg: GridConfig, scenario: Scenario, pos, pings: int, action: Action):
    """Return ``(reward, next_state_or_None, termination)`` for one step."""
    out = env_step(EnvState(Position(*pos), pings, None), action, cfg)
    reward = out.grid_reward
    if out.was_ping:
        reward = reward + expected_issuer_reward(scenario, pos, cfg)
    nxt = out.next_state
    if nxt.terminated is not None:
        return reward, None, nxt.terminated
    return reward, AugmentedState(nxt.agent_pos, nxt.incorrect_pings), None


def build_model(cfg: GridConfig, scenario: Scenario) -> Model:
    n_pings = cfg.max_incorrect_pings
    n_states = cfg.n_cells * n_pings
    reward = np.zeros((n_states, N_ACTIONS))
    next_index = np.zeros((n_states, N_ACTIONS), dtype=np.int64)
    terminal = np.zeros((n_states, N_ACTIONS), dtype=bool)
    termination = [[None] * N_ACTIONS for _ in range(n_states)]
    s = 0
    for pos in cfg.cells():
        for pings in range(n_pings):
            for a in Action:
                r, nxt, term = transition(cfg, scenario, pos, pings, a)
                reward[s, a] = r
                if nxt is None:
                    terminal[s, a] = True
                    next_index[s, a] = s
                    termination[s][a] = term
                else:
                    next_index[s, a] = cfg.cell_index(nxt.pos) * n_pings + nxt.pings
            s += 1
    return Model(cfg, scenario, reward, next_index, terminal, termination)


@dataclass
class ExactQ:
    model: Model
    gamma: float
    values: np.ndarray  # (S, A)
    residual: float
    iterations: int
    deltas: list

    @property
    def cfg(self) -> GridConfig:
        return self.model.cfg

    def q(self, pos, pings: int, action: Action) -> float:
        return float(self.values[self.model.state_index(pos, pings), action])

    def v(self, pos, pings: int = 0) -> float:
        return float(self.values[self.model.state_index(pos, pings)].max())

    def as_array(self) -> np.ndarray:
        """Values shaped ``(rows, cols, pings, actions)``."""
        cfg = self.cfg
        return self.values.reshape(cfg.rows, cfg.cols, cfg.max_incorrect_pings, N_ACTIONS)


def bellman_backup(model: Model, values: np.ndarray, gamma: float) -> np.ndarray:
    cont = values.max(axis=1)[model.next_index]
    return np.where(model.terminal, model.reward, model.reward + gamma * cont)


def value_iteration(cfg: GridConfig, scenario: Scenario, gamma: float = 0.9,
                    tol: float = DEFAULT_TOL, max_iter: int = MAX_ITERATIONS) -> ExactQ:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    model = build_model(cfg, scenario)
    values = np.zeros_like(model.reward)
    deltas = []
    for it in range(1, max_iter + 1):
        new = bellman_backup(model, values, gamma)
        delta = float(np.abs(new - values).max())
        deltas.append(delta)
        values = new
        # values is now one backup past the last check; its residual is
        # at most gamma * delta
        if delta <= tol:
            residual = float(np.abs(bellman_backup(model, values, gamma) - values).max())
            if residual <= tol:
                return ExactQ(model, gamma, values, residual, it, deltas)
    raise ConvergenceError(f"no convergence to {tol} within {max_iter} sweeps")


def greedy_policy(q: ExactQ) -> dict[AugmentedState, Action]:
    """Argmax per state; ties go to the lowest action (UP, DOWN, LEFT, RIGHT, PING)."""
    best = np.argmax(q.values, axis=1)  # argmax returns the first maximiser
    return {q.model.state_at(s): Action(int(a)) for s, a in enumerate(best)}


def rollout(policy, cfg: GridConfig, max_steps: int = 1000):
    """Follow ``policy(state) -> Action`` from the start cell.

    Returns ``(termination_or_None, path)``; ``None`` means the step cap hit.
    """
    state = EnvState(cfg.start_pos, 0, None)
    path = [state.agent_pos]
    for _ in range(max_steps):
        out = env_step(state, policy(state), cfg)
        state = out.next_state
        path.append(state.agent_pos)
        if state.terminated is not None:
            return state.terminated, path
    return None, path


def oracle_rollout(q: ExactQ, max_steps: int = 1000):
    pol = greedy_policy(q)
    return rollout(lambda st: pol[AugmentedState(st.agent_pos, st.incorrect_pings)],
                   q.cfg, max_steps)

