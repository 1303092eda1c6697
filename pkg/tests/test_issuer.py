import random

import numpy as np
import pytest

from proxemic_rl.env import GridConfig, manhattan
from proxemic_rl.issuer import Scenario, expected_issuer_reward, issuer_reward


def test_s1_is_zero_everywhere(grid):
    rng = random.Random(0)
    assert all(issuer_reward(Scenario.S1_ZERO, p, grid, rng) == 0.0 for p in grid.cells())


def test_s2_open_interval_and_mean():
    grid = GridConfig()
    rng = random.Random(2024)
    draws = np.array([issuer_reward(Scenario.S2_RANDOM, (0, 0), grid, rng) for _ in range(200_000)])
    assert np.all(draws > -1.0) and np.all(draws < 1.0)
    # standard error of the mean is sqrt(1/3)/sqrt(n) ~ 0.0013
    assert abs(draws.mean()) < 0.006


def test_s2_consumes_one_draw(grid):
    a, b = random.Random(5), random.Random(5)
    issuer_reward(Scenario.S2_RANDOM, (1, 1), grid, a)
    b.random()
    assert a.random() == b.random()


def test_s2_redraws_exact_zero(grid):
    class Stub:
        def __init__(self):
            self.vals = [0.0, 0.75]

        def random(self):
            return self.vals.pop(0)

    assert issuer_reward(Scenario.S2_RANDOM, (0, 0), grid, Stub()) == 0.5


def test_s3_examples(grid):
    assert issuer_reward(Scenario.S3_DISTANCE, (0, 0), grid, None) == -1.0
    assert issuer_reward(Scenario.S3_DISTANCE, (6, 6), grid, None) == pytest.approx(-2 / 14, abs=1e-15)


def test_s3_leaves_rng_untouched(grid):
    a, b = random.Random(9), random.Random(9)
    issuer_reward(Scenario.S3_DISTANCE, (3, 3), grid, a)
    assert a.random() == b.random()


def test_s3_range_and_extremes(grid):
    vals = {p: issuer_reward(Scenario.S3_DISTANCE, p, grid, None) for p in grid.cells()}
    assert max(manhattan(p, grid.issuer_pos) for p in grid.cells()) == 14
    assert min(vals.values()) == -1.0
    assert [p for p, v in vals.items() if v == -1.0] == [(0, 0)]
    assert max(vals.values()) == 0.0  # the issuer cell itself
    off_issuer = [v for p, v in vals.items() if p != grid.issuer_pos]
    assert all(-1.0 <= v < 0.0 for v in off_issuer)
    best = max(off_issuer)
    assert {p for p, v in vals.items() if v == best and p != grid.issuer_pos} == {
        p for p in grid.cells() if manhattan(p, grid.issuer_pos) == 1}


def test_s3_monotone_in_distance(grid):
    cells = list(grid.cells())
    for a in cells:
        for b in cells:
            if manhattan(a, grid.issuer_pos) < manhattan(b, grid.issuer_pos):
                assert (issuer_reward(Scenario.S3_DISTANCE, a, grid, None)
                        > issuer_reward(Scenario.S3_DISTANCE, b, grid, None))


def test_expected_reward(grid):
    assert expected_issuer_reward(Scenario.S2_RANDOM, (3, 3), grid) == 0.0
    assert expected_issuer_reward(Scenario.S3_DISTANCE, (6, 6), grid) == -2 / 14


@pytest.mark.parametrize("text, sc", [("s1", Scenario.S1_ZERO), ("S2", Scenario.S2_RANDOM),
                                      (" s3 ", Scenario.S3_DISTANCE)])
def test_parse(text, sc):
    assert Scenario.parse(text) is sc


def test_parse_rejects():
    with pytest.raises(ValueError):
        Scenario.parse("s4")
