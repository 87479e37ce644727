"""Seeded synthetic multi-subnetwork objectives with a transfer-aware cost model.

Each group (subnets and merge) gets a smooth quality landscape in [0, 1]
built from Gaussian bumps derived deterministically from a landscape seed.
Per-group losses are 1 - quality; the total merge loss couples the merge
landscape with the signal-weighted subnet qualities, so recombining good
subnet assignments and tuning the merge both matter. Groups with signal
weight 0 are noise inputs: their achievable quality is depressed so their
per-group losses sit near chance, the way a subnetwork fed noise would.

Costs scale with a capacity proxy summed over groups. A transfer
evaluation with every subnet frozen costs ``transfer_ratio`` times the
complete evaluation of the same configuration in expectation, interpolating
linearly toward full price as groups train fresh.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import GroupCountMismatch, HashMismatch
from .space import (
    CATEGORICAL,
    MERGE,
    GroupedConfigSpace,
    GroupId,
    build_space,
    continuous,
    integer,
)

# quality range compression for zero-weight (noise input) groups
_NOISE_Q_LO = 0.05
_NOISE_Q_SPAN = 0.20

# the merge head is small and reliably trainable: its quality modulates
# performance instead of gating it, so per-subnet contributions stay
# visible in the total loss
_MERGE_Q_LO = 0.5
_MERGE_Q_SPAN = 0.5

_PROBE_COUNT = 4096


def assignment_digest(assignment: Mapping[str, Any]) -> str:
    """Stable digest of a group assignment, keyed by sorted name/value pairs."""
    text = ",".join(f"{k}={v!r}" for k, v in sorted(assignment.items()))
    return hashlib.blake2b(text.encode("utf-8"), digest_size=12).hexdigest()


@dataclass(frozen=True)
class SurrogateSpec:
    """Shape of a synthetic objective: group count, signal weights, seed."""

    group_count: int
    signal_weights: tuple[float, ...]
    landscape_seed: int
    noise_sigma: float = 0.02
    landscape_components: int = 8

    def __post_init__(self) -> None:
        if len(self.signal_weights) != self.group_count:
            raise GroupCountMismatch(
                f"{len(self.signal_weights)} weights for {self.group_count} groups"
            )
        if any(w < 0 for w in self.signal_weights):
            raise ValueError("signal weights must be nonnegative")
        if not any(w > 0 for w in self.signal_weights):
            raise ValueError("at least one signal weight must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.landscape_components < 1:
            raise ValueError("landscape_components must be >= 1")

    @property
    def normalized_weights(self) -> np.ndarray:
        w = np.asarray(self.signal_weights, dtype=float)
        return w / w.sum()


@dataclass(frozen=True)
class QualityState:
    """Trained state of one group: its reached quality and what it was trained on."""

    group: GroupId
    quality: float
    trained_config_hash: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"quality must be in [0, 1], got {self.quality}")


@dataclass(frozen=True)
class CostModel:
    """Resource pricing: capacity-proportional complete cost, discounted transfers."""

    base_complete_cost: float = 1.0
    transfer_ratio: float = 0.39
    epoch_jitter: float = 0.1

    def __post_init__(self) -> None:
        if self.base_complete_cost <= 0:
            raise ValueError("base_complete_cost must be positive")
        if not 0.0 < self.transfer_ratio < 1.0:
            raise ValueError("transfer_ratio must be in (0, 1)")
        if not 0.0 <= self.epoch_jitter < 1.0:
            raise ValueError("epoch_jitter must be in [0, 1)")

    def group_size(
        self, space: GroupedConfigSpace, group: GroupId, assignment: Mapping[str, Any]
    ) -> float:
        """Capacity proxy: 1 plus the normalized position of each numeric parameter."""
        size = 1.0
        for d in space.group_defs(group):
            if d.kind == CATEGORICAL:
                continue
            lo, hi = d.encoded_bounds
            if hi > lo:
                size += (d.encode_value(assignment[d.name]) - lo) / (hi - lo)
        return size

    def total_size(self, space: GroupedConfigSpace, config: Mapping[str, Any]) -> float:
        return sum(
            self.group_size(space, g, space.project(config, g)) for g in space.groups
        )

    def min_total_size(self, space: GroupedConfigSpace) -> float:
        return float(len(space.groups))

    def expected_total_size(self, space: GroupedConfigSpace) -> float:
        # each non-degenerate numeric parameter contributes 0.5 in expectation
        # under uniform sampling (uniform in encoded space)
        numeric = sum(
            1
            for d in space.defs
            if d.kind != CATEGORICAL and d.encoded_bounds[1] > d.encoded_bounds[0]
        )
        return len(space.groups) + 0.5 * numeric


@dataclass(frozen=True)
class Outcome:
    """One evaluation: merge loss, per-group losses, states, and its cost."""

    merge_loss: float
    group_losses: tuple[float, ...]
    states: dict[GroupId, QualityState]
    cost: float
    epochs_equivalent: float


class _Landscape:
    """Sum of Gaussian bumps over one group's encoded box, scaled to [0, 1]."""

    def __init__(
        self,
        bounds: np.ndarray,  # (d, 2)
        components: int,
        rng: np.random.Generator,
        q_lo: float = 0.0,
        q_span: float = 1.0,
    ):
        lo = bounds[:, 0]
        hi = bounds[:, 1]
        span = np.where(hi > lo, hi - lo, 1.0)
        # bump widths sized so the landscape stays resolvable by the
        # engine's Scott-bandwidth density models
        self.centers = rng.uniform(lo, hi, size=(components, len(lo)))
        self.widths = span * rng.uniform(0.3, 0.8, size=(components, len(lo)))
        self.amplitudes = rng.uniform(0.3, 1.0, size=components)
        probes = rng.uniform(lo, hi, size=(_PROBE_COUNT, len(lo)))
        self.scale = float(np.max(self._raw(probes)))
        self.q_lo = q_lo
        self.q_span = q_span

    def _raw(self, x: np.ndarray) -> np.ndarray:
        z = (x[:, None, :] - self.centers[None, :, :]) / self.widths[None, :, :]
        return np.sum(self.amplitudes * np.exp(-0.5 * np.sum(z * z, axis=2)), axis=1)

    def __call__(self, encoded: np.ndarray) -> float:
        x = np.atleast_2d(np.asarray(encoded, dtype=float))
        q = min(float(self._raw(x)[0]) / self.scale, 1.0)
        return self.q_lo + self.q_span * q

    def lipschitz_bound(self) -> float:
        # |d raw/dx_j| <= sum_k a_k * max_z |z e^{-z^2/2}| / s_kj with the max
        # at z=1; clipping and affine rescale only shrink the constant
        per_dim = np.sum(
            self.amplitudes[:, None] * np.exp(-0.5) / self.widths, axis=0
        )
        return float(np.linalg.norm(per_dim)) / self.scale * self.q_span


class SurrogateObjective:
    """Deterministic multi-subnetwork objective with observable per-group losses."""

    def __init__(
        self,
        spec: SurrogateSpec,
        space: GroupedConfigSpace,
        cost_model: CostModel | None = None,
    ):
        if spec.group_count != space.group_count:
            raise GroupCountMismatch(
                f"spec has {spec.group_count} groups, space has {space.group_count}"
            )
        self.spec = spec
        self.space = space
        self.cost_model = cost_model or CostModel()
        self.weights = spec.normalized_weights

        seqs = np.random.SeedSequence(spec.landscape_seed).spawn(spec.group_count + 1)
        self._landscapes: dict[GroupId, _Landscape] = {}
        for i, g in enumerate(space.subnet_groups):
            bounds = np.array([d.encoded_bounds for d in space.group_defs(g)])
            noise_input = spec.signal_weights[i] == 0
            self._landscapes[g] = _Landscape(
                bounds,
                spec.landscape_components,
                np.random.default_rng(seqs[i]),
                q_lo=_NOISE_Q_LO if noise_input else 0.0,
                q_span=_NOISE_Q_SPAN if noise_input else 1.0,
            )
        merge_bounds = np.array([d.encoded_bounds for d in space.group_defs(MERGE)])
        self._landscapes[MERGE] = _Landscape(
            merge_bounds,
            spec.landscape_components,
            np.random.default_rng(seqs[-1]),
            q_lo=_MERGE_Q_LO,
            q_span=_MERGE_Q_SPAN,
        )

    # -- landscape access -------------------------------------------------

    def group_quality(self, group: GroupId, assignment: Mapping[str, Any]) -> float:
        """Quality a fresh training run reaches for this group assignment."""
        return self._landscapes[group](self.space.encode_group(assignment, group))

    def merge_quality(self, assignment: Mapping[str, Any]) -> float:
        return self.group_quality(MERGE, assignment)

    def lipschitz_bound(self, group: GroupId) -> float:
        return self._landscapes[group].lipschitz_bound()

    # -- costs --------------------------------------------------------------

    @property
    def mean_complete_cost(self) -> float:
        """Expected complete-trial cost under uniform sampling."""
        return self.cost_model.base_complete_cost * self.cost_model.expected_total_size(
            self.space
        )

    @property
    def min_complete_cost(self) -> float:
        """Cheapest possible complete trial (smallest config, lowest jitter)."""
        return (
            self.cost_model.base_complete_cost
            * self.cost_model.min_total_size(self.space)
            * (1.0 - self.cost_model.epoch_jitter)
        )

    # -- evaluation -----------------------------------------------------------

    def _draw_noise_and_jitter(self, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        # fixed draw protocol: group noises 1..I then merge, then one jitter
        noise = rng.normal(0.0, self.spec.noise_sigma, size=self.space.group_count + 1)
        jitter = 1.0 + self.cost_model.epoch_jitter * float(rng.uniform(-1.0, 1.0))
        return noise, jitter

    def _losses(
        self, qualities: dict[GroupId, float], merge_q: float, noise: np.ndarray
    ) -> tuple[float, tuple[float, ...]]:
        t = np.array([qualities[g] for g in self.space.subnet_groups])
        group_losses = tuple(
            float(max(1.0 - ti + float(ni), 0.0)) for ti, ni in zip(t, noise[:-1])
        )
        merge_loss = max(1.0 - merge_q * float(np.dot(self.weights, t)) + float(noise[-1]), 0.0)
        return merge_loss, group_losses

    def eval_complete(self, config: Mapping[str, Any], rng: np.random.Generator) -> Outcome:
        """Train every group fresh: qualities come straight off the landscapes."""
        noise, jitter = self._draw_noise_and_jitter(rng)
        qualities = {}
        states = {}
        for g in self.space.subnet_groups:
            part = self.space.project(config, g)
            qualities[g] = self.group_quality(g, part)
            states[g] = QualityState(g, qualities[g], assignment_digest(part))
        merge_part = self.space.project(config, MERGE)
        merge_q = self.merge_quality(merge_part)
        states[MERGE] = QualityState(MERGE, merge_q, assignment_digest(merge_part))

        merge_loss, group_losses = self._losses(qualities, merge_q, noise)
        total_size = self.cost_model.total_size(self.space, config)
        cost = self.cost_model.base_complete_cost * total_size * jitter
        return Outcome(merge_loss, group_losses, states, cost, total_size * jitter)

    def eval_transfer(
        self,
        config: Mapping[str, Any],
        frozen: Mapping[GroupId, QualityState],
        rng: np.random.Generator,
    ) -> Outcome:
        """Keep frozen groups' qualities verbatim; train the rest fresh.

        Cost interpolates between the transfer_ratio floor (everything
        frozen) and full complete price (nothing frozen).
        """
        for g, state in frozen.items():
            part = self.space.project(config, g)
            if assignment_digest(part) != state.trained_config_hash:
                raise HashMismatch(
                    f"frozen state for {g.label} was trained on a different assignment"
                )

        noise, jitter = self._draw_noise_and_jitter(rng)
        qualities = {}
        states: dict[GroupId, QualityState] = {}
        for g in self.space.subnet_groups:
            if g in frozen:
                qualities[g] = frozen[g].quality
                states[g] = frozen[g]
            else:
                part = self.space.project(config, g)
                qualities[g] = self.group_quality(g, part)
                states[g] = QualityState(g, qualities[g], assignment_digest(part))
        merge_part = self.space.project(config, MERGE)
        merge_q = self.merge_quality(merge_part)
        states[MERGE] = QualityState(MERGE, merge_q, assignment_digest(merge_part))

        merge_loss, group_losses = self._losses(qualities, merge_q, noise)

        sizes = {
            g: self.cost_model.group_size(self.space, g, self.space.project(config, g))
            for g in self.space.groups
        }
        subnet_size = sum(sizes[g] for g in self.space.subnet_groups)
        unfrozen_size = sum(
            sizes[g] for g in self.space.subnet_groups if g not in frozen
        )
        total_size = subnet_size + sizes[MERGE]
        rho = self.cost_model.transfer_ratio
        factor = rho + (1.0 - rho) * (unfrozen_size / subnet_size)
        cost = self.cost_model.base_complete_cost * total_size * factor * jitter
        return Outcome(merge_loss, group_losses, states, cost, total_size * factor * jitter)


def make_surrogate(
    spec: SurrogateSpec,
    space: GroupedConfigSpace,
    cost_model: CostModel | None = None,
) -> SurrogateObjective:
    """Build the deterministic objective for a spec/space pair."""
    return SurrogateObjective(spec, space, cost_model)


# -- shipped benchmarks -----------------------------------------------------


@dataclass(frozen=True)
class Benchmark:
    name: str
    space: GroupedConfigSpace
    spec: SurrogateSpec
    cost_model: CostModel

    def objective(self) -> SurrogateObjective:
        return make_surrogate(self.spec, self.space, self.cost_model)


def _subnet_block(i: int) -> list:
    # architecture knobs: block depth and log2 channel width per subnetwork
    g = GroupId.subnet(i)
    return [
        integer(f"depth{i}", 1, 4, g),
        integer(f"width_exp{i}", 3, 6, g),
    ]


def _merge_block() -> list:
    return [
        integer("merge_width_exp", 2, 6, MERGE),
        continuous("merge_drop", 0.0, 0.5, MERGE),
    ]


def _space_with_subnets(count: int) -> GroupedConfigSpace:
    defs = []
    for i in range(1, count + 1):
        defs.extend(_subnet_block(i))
    defs.extend(_merge_block())
    return build_space(defs, group_count=count)


def _calibrated_cost(space: GroupedConfigSpace) -> CostModel:
    # mean complete-trial cost lands at 516 resource units, so budgets read
    # as GPU seconds
    probe = CostModel()
    return CostModel(base_complete_cost=516.0 / probe.expected_total_size(space))


def standard_benchmarks() -> dict[str, Benchmark]:
    """The shipped benchmark instances, with fixed landscape seeds."""
    dc4_space = _space_with_subnets(4)
    dc9_space = _space_with_subnets(9)
    sa_space = _space_with_subnets(4)
    benches = [
        Benchmark(
            "dc-4",
            dc4_space,
            SurrogateSpec(4, (0.25, 0.25, 0.25, 0.25), landscape_seed=1979),
            _calibrated_cost(dc4_space),
        ),
        Benchmark(
            "dc-9",
            dc9_space,
            SurrogateSpec(9, (1.0 / 9,) * 9, landscape_seed=1307),
            _calibrated_cost(dc9_space),
        ),
        Benchmark(
            "sa-noise",
            sa_space,
            SurrogateSpec(4, (0.5, 0.0, 0.5, 0.0), landscape_seed=977),
            _calibrated_cost(sa_space),
        ),
    ]
    return {b.name: b for b in benches}
