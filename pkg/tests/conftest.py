"""Shared builders for scheduler/metrics/cli tests."""

import numpy as np
import pytest

from subnet_hpo.space import MERGE, GroupId, build_space, continuous, integer
from subnet_hpo.surrogate import CostModel, SurrogateSpec, make_surrogate


def make_tiny_space():
    """2 subnet groups x 2 params + 1 merge param (dim 5)."""
    return build_space(
        [
            continuous("a1", 0.0, 1.0, GroupId.subnet(1)),
            integer("w1", 2, 10, GroupId.subnet(1)),
            continuous("a2", 0.0, 1.0, GroupId.subnet(2)),
            integer("w2", 2, 10, GroupId.subnet(2)),
            continuous("m", 0.0, 1.0, MERGE),
        ],
        group_count=2,
    )


def make_tiny_objective(space=None, noise_sigma=0.01, landscape_seed=7, weights=(0.6, 0.4)):
    space = space or make_tiny_space()
    spec = SurrogateSpec(
        space.group_count, weights, landscape_seed=landscape_seed, noise_sigma=noise_sigma
    )
    return make_surrogate(spec, space, CostModel())


@pytest.fixture
def tiny_space():
    return make_tiny_space()


@pytest.fixture
def tiny_objective(tiny_space):
    return make_tiny_objective(tiny_space)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
