"""Tests for grouped configuration spaces."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subnet_hpo.errors import (
    BadBounds,
    DuplicateName,
    EmptyGroup,
    MissingGroup,
    OverlappingNames,
    UnknownGroup,
)
from subnet_hpo.space import (
    MERGE,
    GroupId,
    build_space,
    categorical,
    continuous,
    integer,
)


def demo_space():
    """3 subnet groups with 4, 4, 3 params plus a 2-param merge (dim 13)."""
    g1, g2, g3 = GroupId.subnet(1), GroupId.subnet(2), GroupId.subnet(3)
    defs = [
        continuous("lr1", 1e-4, 1e-1, g1, log_scale=True),
        integer("width1", 8, 64, g1),
        integer("depth1", 1, 4, g1),
        continuous("drop1", 0.0, 0.5, g1),
        continuous("lr2", 1e-4, 1e-1, g2, log_scale=True),
        integer("width2", 8, 64, g2),
        integer("depth2", 1, 4, g2),
        categorical("act2", ["relu", "tanh", "elu"], g2),
        continuous("lr3", 1e-4, 1e-1, g3, log_scale=True),
        integer("width3", 8, 64, g3),
        continuous("drop3", 0.0, 0.5, g3),
        integer("merge_width", 4, 32, MERGE),
        continuous("merge_drop", 0.0, 0.5, MERGE),
    ]
    return build_space(defs, group_count=3)


class TestBuildSpace:
    def test_dims(self):
        space = demo_space()
        assert space.dim == 13
        assert space.group_dim(GroupId.subnet(1)) == 4
        assert space.group_dim(GroupId.subnet(2)) == 4
        assert space.group_dim(GroupId.subnet(3)) == 3
        assert space.group_dim(MERGE) == 2

    def test_dim_additivity(self):
        space = demo_space()
        assert space.dim == sum(space.group_dim(g) for g in space.groups)

    def test_minimal_space(self):
        space = build_space(
            [continuous("a", 0, 1, GroupId.subnet(1)), continuous("b", 0, 1, MERGE)],
            group_count=1,
        )
        assert space.dim == 2

    def test_bad_bounds(self):
        with pytest.raises(BadBounds):
            continuous("x", 1.0, 0.5, MERGE)
        with pytest.raises(BadBounds):
            continuous("x", 0.0, 1.0, MERGE, log_scale=True)
        with pytest.raises(BadBounds):
            categorical("x", [], MERGE)

    def test_duplicate_name(self):
        defs = [
            continuous("a", 0, 1, GroupId.subnet(1)),
            continuous("a", 0, 1, MERGE),
        ]
        with pytest.raises(DuplicateName):
            build_space(defs, group_count=1)

    def test_empty_group(self):
        defs = [continuous("a", 0, 1, GroupId.subnet(1))]
        with pytest.raises(EmptyGroup):
            build_space(defs, group_count=1)  # merge owns nothing
        defs = [continuous("a", 0, 1, MERGE)]
        with pytest.raises(EmptyGroup):
            build_space(defs, group_count=1)  # subnet1 owns nothing

    def test_group_beyond_count(self):
        defs = [
            continuous("a", 0, 1, GroupId.subnet(2)),
            continuous("m", 0, 1, MERGE),
        ]
        with pytest.raises(UnknownGroup):
            build_space(defs, group_count=1)


class TestSampling:
    def test_degenerate_integer(self):
        space = build_space(
            [integer("k", 0, 0, GroupId.subnet(1)), integer("m", 0, 1, MERGE)],
            group_count=1,
        )
        rng = np.random.default_rng(0)
        assert all(space.sample_uniform(rng)["k"] == 0 for _ in range(50))

    def test_log_uniform_median(self):
        # Uniform in log10 on [1e-4, 1e-1] has median log10 = -2.5. The
        # empirical median of 10k draws concentrates within +-0.1 of it.
        space = build_space(
            [
                continuous("lr", 1e-4, 1e-1, GroupId.subnet(1), log_scale=True),
                continuous("m", 0, 1, MERGE),
            ],
            group_count=1,
        )
        rng = np.random.default_rng(7)
        values = [space.sample_uniform(rng)["lr"] for _ in range(10_000)]
        assert abs(np.median(np.log10(values)) - (-2.5)) < 0.1

    def test_seed_determinism(self):
        space = demo_space()
        a = space.sample_uniform(np.random.default_rng(42))
        b = space.sample_uniform(np.random.default_rng(42))
        assert a == b

    def test_group_sample_projection(self):
        space = demo_space()
        rng = np.random.default_rng(3)
        part = space.sample_group_uniform(GroupId.subnet(2), rng)
        assert set(part) == {"lr2", "width2", "depth2", "act2"}

    def test_single_choice_categorical(self):
        space = build_space(
            [
                continuous("a", 0, 1, GroupId.subnet(1)),
                categorical("m", ["only"], MERGE),
            ],
            group_count=1,
        )
        part = space.sample_group_uniform(MERGE, np.random.default_rng(0))
        assert part == {"m": "only"}

    def test_unknown_group(self):
        space = demo_space()
        with pytest.raises(UnknownGroup):
            space.sample_group_uniform(GroupId.subnet(9), np.random.default_rng(0))

    def test_integer_range_coverage(self):
        # P(some value of {1,2,3} unseen in 100 draws) <= 3*(2/3)^100 < 1e-15.
        space = build_space(
            [integer("k", 1, 3, GroupId.subnet(1)), integer("m", 0, 1, MERGE)],
            group_count=1,
        )
        rng = np.random.default_rng(11)
        seen = {space.sample_group_uniform(GroupId.subnet(1), rng)["k"] for _ in range(100)}
        assert seen == {1, 2, 3}


class TestComposeProject:
    def test_round_trip(self):
        space = demo_space()
        config = space.sample_uniform(np.random.default_rng(5))
        parts = {g: space.project(config, g) for g in space.groups}
        assert space.compose(parts) == config

    def test_missing_group(self):
        space = demo_space()
        config = space.sample_uniform(np.random.default_rng(5))
        parts = {g: space.project(config, g) for g in space.subnet_groups}
        with pytest.raises(MissingGroup):
            space.compose(parts)

    def test_cross_trial_mix(self):
        space = demo_space()
        a = space.sample_uniform(np.random.default_rng(1))
        b = space.sample_uniform(np.random.default_rng(2))
        parts = {g: space.project(a, g) for g in space.subnet_groups}
        parts[MERGE] = space.project(b, MERGE)
        mixed = space.compose(parts)
        merge_names = {d.name for d in space.group_defs(MERGE)}
        for name in space.names():
            expected = b[name] if name in merge_names else a[name]
            assert mixed[name] == expected

    def test_overlap_rejected(self):
        space = demo_space()
        config = space.sample_uniform(np.random.default_rng(5))
        parts = {g: space.project(config, g) for g in space.groups}
        parts[MERGE] = dict(parts[MERGE], lr1=config["lr1"])
        with pytest.raises(OverlappingNames):
            space.compose(parts)


class TestEncoding:
    def test_categorical_index(self):
        space = build_space(
            [
                categorical("c", ["a", "b", "c"], GroupId.subnet(1)),
                continuous("m", 0, 1, MERGE),
            ],
            group_count=1,
        )
        enc = space.encode({"c": "b", "m": 0.5})
        assert enc[0] == 1.0

    def test_log_encoding(self):
        space = build_space(
            [
                continuous("lr", 1e-4, 1e-1, GroupId.subnet(1), log_scale=True),
                continuous("m", 0, 1, MERGE),
            ],
            group_count=1,
        )
        enc = space.encode({"lr": 1e-3, "m": 0.0})
        assert enc[0] == pytest.approx(-3.0, abs=1e-12)

    def test_encode_stability(self):
        space = demo_space()
        config = space.sample_uniform(np.random.default_rng(9))
        assert np.array_equal(space.encode(config), space.encode(dict(config)))
        # rebuilt space with identical definition order encodes identically
        space2 = demo_space()
        assert np.array_equal(space.encode(config), space2.encode(config))

    def test_encode_injective(self):
        space = demo_space()
        rng = np.random.default_rng(13)
        configs = [space.sample_uniform(rng) for _ in range(1000)]
        distinct = {tuple(sorted(c.items())) for c in configs}
        encoded = {tuple(space.encode(c)) for c in configs}
        assert len(encoded) == len(distinct)

    def test_decode_round_trip(self):
        space = demo_space()
        rng = np.random.default_rng(17)
        for _ in range(100):
            config = space.sample_uniform(rng)
            decoded = space.decode(space.encode(config))
            for d in space.defs:
                if d.kind == "continuous":
                    assert decoded[d.name] == pytest.approx(config[d.name], rel=1e-12)
                else:
                    assert decoded[d.name] == config[d.name]


# -- property tests -----------------------------------------------------

group_counts = st.integers(min_value=1, max_value=4)


@st.composite
def spaces(draw):
    count = draw(group_counts)
    defs = []
    for gi in range(1, count + 1):
        g = GroupId.subnet(gi)
        n = draw(st.integers(min_value=1, max_value=3))
        for j in range(n):
            kind = draw(st.sampled_from(["continuous", "integer", "categorical"]))
            name = f"p{gi}_{j}"
            if kind == "continuous":
                defs.append(continuous(name, 0.0, draw(st.floats(0.5, 10.0)), g))
            elif kind == "integer":
                defs.append(integer(name, 0, draw(st.integers(0, 9)), g))
            else:
                defs.append(categorical(name, ["a", "b", "c"][: draw(st.integers(1, 3))], g))
    defs.append(continuous("m0", 0.0, 1.0, MERGE))
    return build_space(defs, group_count=count)


@settings(max_examples=50, deadline=None)
@given(spaces(), st.integers(0, 2**32 - 1))
def test_sample_validates_and_round_trips(space, seed):
    rng = np.random.default_rng(seed)
    config = space.sample_uniform(rng)
    space.validate(config)
    parts = {g: space.project(config, g) for g in space.groups}
    assert space.compose(parts) == config
    assert space.dim == sum(space.group_dim(g) for g in space.groups)


@settings(max_examples=25, deadline=None)
@given(spaces(), st.integers(0, 2**32 - 1))
def test_group_samples_stay_in_group(space, seed):
    rng = np.random.default_rng(seed)
    for g in space.groups:
        part = space.sample_group_uniform(g, rng)
        assert set(part) == {d.name for d in space.group_defs(g)}
