"""Batch training: N independent agents, T steps each, aggregated per step.

Child seeds come from SplitMix64 so any language can reproduce them:

    z = (master_seed + (index + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    seed = z ^ (z >> 31)

i.e. the ``index + 1``-th output of a SplitMix64 generator started at
``master_seed``.  Each agent then owns a ``random.Random(seed)`` stream.
"""
from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .env import Action, GridConfig, Termination, env_reset, env_step
from .issuer import Scenario, issuer_reward
from .qlearning import Hyperparams, QTable, greedy_actions, q_update, select_action

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_mix(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_agent_seed(master_seed: int, agent_index: int) -> int:
    if agent_index < 0:
        raise ValueError("agent_index must be non-negative")
    return splitmix64_mix(master_seed + (agent_index + 1) * GOLDEN_GAMMA)


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    scenario: Scenario = Scenario.S1_ZERO
    hp: Hyperparams = field(default_factory=Hyperparams)
    n_agents: int = 100
    total_steps: int = 10_000
    master_seed: int = 0

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be at least 1")
        if self.total_steps < 1:
            raise ValueError("total_steps must be at least 1")
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        g = self.grid
        return {
            "scenario": self.scenario.value,
            "rows": g.rows,
            "cols": g.cols,
            "issuer": f"{g.issuer_pos[0]},{g.issuer_pos[1]}",
            "start": f"{g.start_pos[0]},{g.start_pos[1]}",
            "uncomfortable_radius": g.uncomfortable_radius,
            "target_radius": g.target_radius,
            "ping_limit": g.max_incorrect_pings,
            "alpha": self.hp.alpha,
            "gamma": self.hp.gamma,
            "epsilon": self.hp.epsilon,
            "agents": self.n_agents,
            "steps": self.total_steps,
            "seed": self.master_seed,
        }


@dataclass
class AgentResult:
    final_q: QTable
    max_q_trace: np.ndarray
    # (length, Termination) per episode; the last entry may carry None when
    # the step budget cut the episode short
    episode_log: list

    @property
    def truncated(self) -> bool:
        return self.episode_log[-1][1] is None


def run_agent(cfg: ExperimentConfig, agent_seed: int,
              select: Optional[Callable] = None) -> AgentResult:
    """Train one agent for ``cfg.total_steps`` steps.

    The reward per step is the grid reward plus, on pings only, the issuer
    reward.  Episodes restart at the start cell on termination; the final
    episode is cut at the budget without a terminal update.  ``select`` may
    replace the epsilon-greedy rule (same signature as :func:`select_action`).
    """
    grid, hp, scenario = cfg.grid, cfg.hp, cfg.scenario
    rng = random.Random(agent_seed)
    select = select or select_action
    q = QTable.for_grid(grid)
    values = q.values
    cols = grid.cols
    eps = hp.epsilon
    shaped = scenario is not Scenario.S1_ZERO
    ping = Action.PING

    # per-cell maxima let the global max be refreshed in O(cells) only when
    # the current maximum entry decreases
    cell_max = [0.0] * grid.n_cells
    best = 0.0

    trace = np.empty(cfg.total_steps)
    log = []
    state = env_reset(grid)
    ep_len = 0
    for t in range(cfg.total_steps):
        pos = state.agent_pos
        action = select(q, pos, eps, rng)
        out = env_step(state, action, grid)
        reward = out.grid_reward
        if shaped and action == ping:
            reward = reward + issuer_reward(scenario, pos, grid, rng)
        nxt = out.next_state

        ci = pos[0] * cols + pos[1]
        row = values[ci]
        old = row[action]
        q_update(q, pos, action, reward, nxt.agent_pos, nxt.terminated is not None, hp)
        new = row[action]

        if new >= cell_max[ci]:
            cell_max[ci] = new
        elif old == cell_max[ci]:
            cell_max[ci] = max(row)
        if new >= best:
            best = new
        elif old == best:
            best = max(cell_max)
        trace[t] = best

        ep_len += 1
        if nxt.terminated is not None:
            log.append((ep_len, nxt.terminated))
            ep_len = 0
            state = env_reset(grid)
        else:
            state = nxt
    if ep_len:
        log.append((ep_len, None))
    return AgentResult(q, trace, log)


@dataclass
class BatchResult:
    trace_mean: np.ndarray   # (T,)
    trace_min: np.ndarray
    trace_max: np.ndarray
    mean_q: np.ndarray       # (rows, cols, 5), mean final Q over agents
    n_agents: int
    final_max_q: np.ndarray  # (n_agents,), each agent's final table maximum

    @property
    def movement_q(self) -> np.ndarray:
        return self.mean_q[..., :4]

    @property
    def movement_q_max(self) -> np.ndarray:
        return self.mean_q[..., :4].max(axis=-1)

    @property
    def ping_q(self) -> np.ndarray:
        return self.mean_q[..., 4]

    @property
    def band(self) -> np.ndarray:
        return self.trace_max - self.trace_min


def aggregate(results: list[AgentResult]) -> BatchResult:
    """Combine agent results; order of ``results`` fixes the summation order."""
    if not results:
        raise ValueError("nothing to aggregate")
    traces = np.stack([r.max_q_trace for r in results])
    tables = np.stack([r.final_q.as_array() for r in results])
    return BatchResult(
        trace_mean=traces.mean(axis=0),
        trace_min=traces.min(axis=0),
        trace_max=traces.max(axis=0),
        mean_q=tables.mean(axis=0),
        n_agents=len(results),
        final_max_q=traces[:, -1].copy(),
    )


def combine(a: BatchResult, b: BatchResult) -> BatchResult:
    """Merge two aggregates as if their agents had been aggregated together."""
    n = a.n_agents + b.n_agents
    wa, wb = a.n_agents / n, b.n_agents / n
    return BatchResult(
        trace_mean=wa * a.trace_mean + wb * b.trace_mean,
        trace_min=np.minimum(a.trace_min, b.trace_min),
        trace_max=np.maximum(a.trace_max, b.trace_max),
        mean_q=wa * a.mean_q + wb * b.mean_q,
        n_agents=n,
        final_max_q=np.concatenate([a.final_max_q, b.final_max_q]),
    )


def _run_indexed(args):
    cfg, index = args
    return run_agent(cfg, derive_agent_seed(cfg.master_seed, index))


def run_agents(cfg: ExperimentConfig, workers: int = 1) -> list[AgentResult]:
    jobs = [(cfg, i) for i in range(cfg.n_agents)]
    if workers <= 1:
        return [_run_indexed(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so aggregation order is fixed
        return list(pool.map(_run_indexed, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_batch(cfg: ExperimentConfig, workers: int = 1) -> BatchResult:
    return aggregate(run_agents(cfg, workers))


def episode_counts(result: AgentResult) -> dict:
    counts = {kind: 0 for kind in Termination}
    for _, kind in result.episode_log:
        if kind is not None:
            counts[kind] += 1
    return counts


def greedy_rollout(q: QTable, grid: GridConfig, max_steps: int = 1000):
    """Run the learned greedy policy from the start cell.

    Ties go to the first action in UP, DOWN, LEFT, RIGHT, PING order.
    Returns ``(termination_or_None, steps_taken)``.
    """
    state = env_reset(grid)
    for step in range(1, max_steps + 1):
        action = Action(greedy_actions(q.cell(state.agent_pos))[0])
        state = env_step(state, action, grid).next_state
        if state.terminated is not None:
            return state.terminated, step
    return None, max_steps
