"""Grouped hyperparameter configuration spaces.

A space partitions its parameters into per-subnetwork groups (subnet 1..I)
plus a merge group for the head that combines subnetwork outputs.
Configurations are plain ``{name: value}`` dicts; a numeric, order-stable
encoding backs the density models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    BadBounds,
    DimensionMismatch,
    DuplicateName,
    EmptyGroup,
    MissingGroup,
    OverlappingNames,
    UnknownGroup,
)

CONTINUOUS = "continuous"
INTEGER = "integer"
CATEGORICAL = "categorical"

_MERGE_INDEX = 0


@dataclass(frozen=True, order=True)
class GroupId:
    """Identifies a hyperparameter group: subnet ``i`` (1-based) or the merge head.

    Index 0 is reserved for the merge group; subnet groups use 1..I.
    """

    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise UnknownGroup(f"group index must be >= 0, got {self.index}")

    @classmethod
    def subnet(cls, i: int) -> "GroupId":
        if i < 1:
            raise UnknownGroup(f"subnet indices are 1-based, got {i}")
        return cls(i)

    @classmethod
    def merge(cls) -> "GroupId":
        return cls(_MERGE_INDEX)

    @property
    def is_merge(self) -> bool:
        return self.index == _MERGE_INDEX

    @property
    def label(self) -> str:
        return "merge" if self.is_merge else f"subnet{self.index}"

    @classmethod
    def from_label(cls, label: str) -> "GroupId":
        if label == "merge":
            return cls.merge()
        if label.startswith("subnet"):
            return cls.subnet(int(label[len("subnet"):]))
        raise UnknownGroup(f"unrecognized group label {label!r}")

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"GroupId({self.label})"


MERGE = GroupId.merge()


@dataclass(frozen=True)
class HyperparameterDef:
    """One hyperparameter: a name, a group, and a sampling domain.

    ``kind`` is one of ``continuous`` (real interval, optionally log10
    scale), ``integer`` (inclusive range) or ``categorical`` (ordered
    choices). Use the :func:`continuous`, :func:`integer` and
    :func:`categorical` helpers rather than the raw constructor.
    """

    name: str
    group: GroupId
    kind: str
    lo: float | None = None
    hi: float | None = None
    log_scale: bool = False
    choices: tuple[Any, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == CONTINUOUS:
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise BadBounds(f"{self.name}: continuous needs lo < hi")
            if self.log_scale and self.lo <= 0:
                raise BadBounds(f"{self.name}: log scale needs lo > 0")
        elif self.kind == INTEGER:
            if self.lo is None or self.hi is None or not self.lo <= self.hi:
                raise BadBounds(f"{self.name}: integer needs lo <= hi")
            if self.log_scale:
                raise BadBounds(f"{self.name}: log scale is continuous-only")
        elif self.kind == CATEGORICAL:
            if not self.choices:
                raise BadBounds(f"{self.name}: categorical needs >= 1 choice")
        else:
            raise BadBounds(f"{self.name}: unknown kind {self.kind!r}")

    # -- encoding -------------------------------------------------------

    @property
    def encoded_bounds(self) -> tuple[float, float]:
        """Bounds of this parameter's coordinate in encoded space."""
        if self.kind == CATEGORICAL:
            return 0.0, float(len(self.choices) - 1)
        if self.log_scale:
            return math.log10(self.lo), math.log10(self.hi)
        return float(self.lo), float(self.hi)

    def encode_value(self, value: Any) -> float:
        """Map a parameter value to its real coordinate."""
        if self.kind == CATEGORICAL:
            return float(self.choices.index(value))
        if self.log_scale:
            return math.log10(value)
        return float(value)

    def decode_value(self, coord: float) -> Any:
        """Inverse of :meth:`encode_value`, clamping/rounding to the domain."""
        lo, hi = self.encoded_bounds
        coord = min(max(coord, lo), hi)
        if self.kind == CATEGORICAL:
            return self.choices[int(round(coord))]
        if self.kind == INTEGER:
            return int(round(coord))
        return 10.0 ** coord if self.log_scale else coord

    def contains(self, value: Any) -> bool:
        if self.kind == CATEGORICAL:
            return value in self.choices
        if self.kind == INTEGER:
            return isinstance(value, (int, np.integer)) and self.lo <= value <= self.hi
        return isinstance(value, (int, float, np.floating)) and self.lo <= value <= self.hi

    def sample(self, rng: np.random.Generator) -> Any:
        """Draw one value uniformly (uniform in log10 domain when log-scaled)."""
        if self.kind == CATEGORICAL:
            return self.choices[int(rng.integers(len(self.choices)))]
        if self.kind == INTEGER:
            return int(rng.integers(int(self.lo), int(self.hi) + 1))
        lo, hi = self.encoded_bounds
        return self.decode_value(rng.uniform(lo, hi))


def continuous(
    name: str,
    lo: float,
    hi: float,
    group: GroupId,
    log_scale: bool = False,
) -> HyperparameterDef:
    return HyperparameterDef(name, group, CONTINUOUS, lo=lo, hi=hi, log_scale=log_scale)


def integer(name: str, lo: int, hi: int, group: GroupId) -> HyperparameterDef:
    return HyperparameterDef(name, group, INTEGER, lo=lo, hi=hi)


def categorical(name: str, choices: Sequence[Any], group: GroupId) -> HyperparameterDef:
    return HyperparameterDef(name, group, CATEGORICAL, choices=tuple(choices))


@dataclass(frozen=True)
class GroupedConfigSpace:
    """A validated, immutable space of grouped hyperparameters.

    Definition order is the encoding order; two spaces built from the same
    definition list encode identically.
    """

    defs: tuple[HyperparameterDef, ...]
    group_count: int
    _by_name: dict[str, HyperparameterDef] = field(repr=False, compare=False, default_factory=dict)
    _group_defs: dict[GroupId, tuple[HyperparameterDef, ...]] = field(
        repr=False, compare=False, default_factory=dict
    )

    @property
    def dim(self) -> int:
        """Total parameter count N."""
        return len(self.defs)

    @property
    def groups(self) -> tuple[GroupId, ...]:
        """All groups in canonical order: subnet 1..I, then merge."""
        return tuple(GroupId.subnet(i) for i in range(1, self.group_count + 1)) + (MERGE,)

    @property
    def subnet_groups(self) -> tuple[GroupId, ...]:
        return tuple(GroupId.subnet(i) for i in range(1, self.group_count + 1))

    def group_defs(self, group: GroupId) -> tuple[HyperparameterDef, ...]:
        if group not in self._group_defs:
            raise UnknownGroup(f"no group {group.label} in this space")
        return self._group_defs[group]

    def group_dim(self, group: GroupId) -> int:
        return len(self.group_defs(group))

    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.defs)

    def __iter__(self) -> Iterator[HyperparameterDef]:
        return iter(self.defs)

    # -- configurations -------------------------------------------------

    def validate(self, config: Mapping[str, Any]) -> None:
        """Raise if ``config`` is not a full, in-domain assignment."""
        extra = set(config) - set(self._by_name)
        if extra:
            raise OverlappingNames(f"unknown parameter names: {sorted(extra)}")
        for d in self.defs:
            if d.name not in config:
                raise MissingGroup(f"missing value for {d.name}")
            if not d.contains(config[d.name]):
                raise BadBounds(f"{d.name}: value {config[d.name]!r} out of domain")

    def project(self, config: Mapping[str, Any], group: GroupId) -> dict[str, Any]:
        """Restrict a configuration to one group's parameters."""
        return {d.name: config[d.name] for d in self.group_defs(group)}

    def compose(self, parts: Mapping[GroupId, Mapping[str, Any]]) -> dict[str, Any]:
        """Union per-group partial assignments into a full configuration.

        The parts must jointly cover every parameter exactly once.
        """
        config: dict[str, Any] = {}
        for group in self.groups:
            if group not in parts:
                raise MissingGroup(f"no assignment for group {group.label}")
            part = parts[group]
            expected = {d.name for d in self.group_defs(group)}
            if set(part) != expected:
                stray = set(part) - expected
                if stray:
                    raise OverlappingNames(
                        f"{group.label}: names outside the group: {sorted(stray)}"
                    )
                raise MissingGroup(
                    f"{group.label}: missing {sorted(expected - set(part))}"
                )
            for name, value in part.items():
                if name in config:
                    raise OverlappingNames(f"{name} assigned twice")
                config[name] = value
        unknown = set(parts) - set(self.groups)
        if unknown:
            raise UnknownGroup(f"assignments for unknown groups: {sorted(g.label for g in unknown)}")
        return config

    # -- sampling -------------------------------------------------------

    def sample_uniform(self, rng: np.random.Generator) -> dict[str, Any]:
        """Sample every parameter independently and uniformly."""
        return {d.name: d.sample(rng) for d in self.defs}

    def sample_group_uniform(self, group: GroupId, rng: np.random.Generator) -> dict[str, Any]:
        """Uniform sample covering exactly one group's parameters."""
        return {d.name: d.sample(rng) for d in self.group_defs(group)}

    # -- encoding -------------------------------------------------------

    def encode(self, config: Mapping[str, Any]) -> np.ndarray:
        """Encode a full configuration as a real vector of length ``dim``."""
        return np.array([d.encode_value(config[d.name]) for d in self.defs], dtype=float)

    def encode_group(self, part: Mapping[str, Any], group: GroupId) -> np.ndarray:
        """Encode one group's partial assignment (group definition order)."""
        return np.array(
            [d.encode_value(part[d.name]) for d in self.group_defs(group)], dtype=float
        )

    def decode(self, coords: np.ndarray) -> dict[str, Any]:
        """Decode an encoded vector back into a configuration."""
        if len(coords) != self.dim:
            raise DimensionMismatch(f"expected {self.dim} coordinates, got {len(coords)}")
        return {d.name: d.decode_value(float(c)) for d, c in zip(self.defs, coords)}


def build_space(
    defs: Sequence[HyperparameterDef], group_count: int
) -> GroupedConfigSpace:
    """Validate definitions and build a :class:`GroupedConfigSpace`.

    Every group in {subnet 1..group_count, merge} must own at least one
    parameter, and names must be unique. Definition bounds were already
    checked at :class:`HyperparameterDef` construction.
    """
    if not defs:
        raise EmptyGroup("a space needs at least one parameter")
    if group_count < 1:
        raise EmptyGroup("group_count must be >= 1")

    by_name: dict[str, HyperparameterDef] = {}
    for d in defs:
        if d.name in by_name:
            raise DuplicateName(f"duplicate parameter name {d.name!r}")
        if not d.group.is_merge and d.group.index > group_count:
            raise UnknownGroup(
                f"{d.name}: group {d.group.label} exceeds group_count={group_count}"
            )
        by_name[d.name] = d

    groups = tuple(GroupId.subnet(i) for i in range(1, group_count + 1)) + (MERGE,)
    group_defs = {g: tuple(d for d in defs if d.group == g) for g in groups}
    for g, members in group_defs.items():
        if not members:
            raise EmptyGroup(f"group {g.label} owns no parameters")

    return GroupedConfigSpace(
        defs=tuple(defs),
        group_count=group_count,
        _by_name=by_name,
        _group_defs=group_defs,
    )
