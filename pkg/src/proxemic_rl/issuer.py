"""Issuer feedback added to the grid reward whenever the agent pings."""
from __future__ import annotations

import random
from enum import Enum

from .env import GridConfig, manhattan


class Scenario(Enum):
    S1_ZERO = "s1"
    S2_RANDOM = "s2"
    S3_DISTANCE = "s3"

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown scenario {text!r}; expected s1, s2 or s3") from None


def issuer_reward(scenario: Scenario, agent_pos, cfg: GridConfig, rng: random.Random) -> float:
    """Issuer reward for a PING made at ``agent_pos``.

    S1 pays nothing.  S2 pays a uniform draw on the open interval (-1, 1) and
    takes one ``rng.random()`` value (a draw of exactly 0.0 is redrawn, which
    happens with probability 2**-53).  S3 pays the Manhattan distance to the
    issuer, negated and normalised by the start cell's distance; it never
    touches ``rng``.
    """
    if scenario is Scenario.S1_ZERO:
        return 0.0
    if scenario is Scenario.S2_RANDOM:
        u = rng.random()
        while u == 0.0:
            u = rng.random()
        return 2.0 * u - 1.0
    if scenario is Scenario.S3_DISTANCE:
        span = manhattan(cfg.start_pos, cfg.issuer_pos)
        if span == 0:
            raise ValueError("distance shaping needs start_pos != issuer_pos")
        return -manhattan(agent_pos, cfg.issuer_pos) / span
    raise ValueError(f"unsupported scenario {scenario!r}")


def expected_issuer_reward(scenario: Scenario, agent_pos, cfg: GridConfig) -> float:
    """Mean issuer reward at a cell; used by the exact solver."""
    if scenario is Scenario.S2_RANDOM:
        return 0.0
    return issuer_reward(scenario, agent_pos, cfg, None)
