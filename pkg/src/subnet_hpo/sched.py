"""Trial history and the optimization schedulers.

Four scheduler kinds share one loop: ``random`` (uniform search), ``bo``
(plain TPE), ``dcbo`` (divide-and-conquer: recombines trained subnetworks
across parents via focal TPE and freezes them), and ``sabo`` (subnetwork
adaptive: freezes each group with probability inversely tied to its
importance). A trial either trains every group fresh (complete) or
assembles frozen, previously trained subnetwork states (transfer), which
costs a fraction of complete training.

Randomness protocol, for exact replay and resume: ``bo`` draws one
exploration uniform only when past its bootstrap gate; ``dcbo`` and
``sabo`` draw the exploration and complete-training uniforms up front on
every step, then whatever their chosen branch consumes (per-group draws in
group order). Each record stores the generator state captured after its
trial completed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    BudgetTooSmall,
    NoGroupLosses,
    UnknownSourceTrial,
)
from .space import MERGE, GroupedConfigSpace, GroupId
from .surrogate import QualityState
from .tpe import (
    ObservationSet,
    TpeParams,
    density_ratio,
    propose_focal_tpe,
    propose_tpe,
)

COMPLETE = "complete"
TRANSFER = "transfer"

SCHEDULER_KINDS = ("random", "bo", "dcbo", "sabo")


def _assignment_key(assignment: Mapping[str, Any]) -> tuple:
    return tuple(sorted(assignment.items()))


@dataclass(frozen=True)
class TrainingPlan:
    """How a trial trains: everything fresh, or selected groups frozen.

    ``frozen`` maps each frozen subnet group to the trial id supplying its
    trained state.
    """

    kind: str
    frozen: dict[GroupId, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in (COMPLETE, TRANSFER):
            raise ValueError(f"unknown plan kind {self.kind!r}")
        if self.kind == TRANSFER and not self.frozen:
            raise ValueError("a transfer plan must freeze at least one group")
        if self.kind == COMPLETE and self.frozen:
            raise ValueError("a complete plan freezes nothing")

    @classmethod
    def complete(cls) -> "TrainingPlan":
        return cls(COMPLETE)

    @classmethod
    def transfer(cls, frozen: Mapping[GroupId, int]) -> "TrainingPlan":
        return cls(TRANSFER, dict(frozen))


@dataclass(frozen=True)
class TrialRecord:
    """One evaluated trial, as journaled."""

    trial_id: int
    config: dict[str, Any]
    plan: TrainingPlan
    loss: float
    merge_loss: float
    group_losses: tuple[float, ...]
    states: dict[GroupId, QualityState]
    cost: float
    cumulative_time: float
    branch: str
    rng_state: str


class Proposal(NamedTuple):
    config: dict[str, Any]
    plan: TrainingPlan
    branch: str


@dataclass(frozen=True)
class SchedulerParams:
    """Scheduler gates and the TPE knobs.

    ``explore_prob`` is the chance a step explores at random;
    ``complete_prob`` the chance an eligible step trains from scratch
    instead of transferring; ``aux_loss_weight`` scales the per-subnetwork
    loss heads added into the total loss. ``min_complete`` can raise (never
    lower) the observation count required before full-space TPE engages;
    the floor is dim + 1.
    """

    explore_prob: float = 1.0 / 3.0
    complete_prob: float = 0.2
    aux_loss_weight: float = 0.1
    tpe: TpeParams = field(default_factory=TpeParams)
    min_complete: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.explore_prob <= 1.0:
            raise ValueError("explore_prob must be in [0, 1]")
        if not 0.0 <= self.complete_prob <= 1.0:
            raise ValueError("complete_prob must be in [0, 1]")
        if self.aux_loss_weight < 0.0:
            raise ValueError("aux_loss_weight must be >= 0")

    def tpe_gate(self, dim: int) -> int:
        return max(self.min_complete or 0, dim + 1)


@dataclass(frozen=True)
class ImportanceVector:
    """Per-subnet-group probabilities; higher means more fresh training."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probs):
            raise ValueError("importance probabilities must be >= 0")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError("importance probabilities must sum to 1")

    @classmethod
    def uniform(cls, group_count: int) -> "ImportanceVector":
        return cls(tuple(1.0 / group_count for _ in range(group_count)))


def combine_loss(merge_loss: float, group_losses: Sequence[float], aux_weight: float) -> float:
    """Total loss: merge loss plus the weighted sum of per-group losses."""
    return merge_loss + aux_weight * sum(group_losses)


class History:
    """Ordered trial records plus the derived views the schedulers need.

    Transfer eligibility for a group covers only trials that trained it
    unfrozen; frozen copies never mint new source entries.
    """

    def __init__(self, space: GroupedConfigSpace):
        self.space = space
        self.records: list[TrialRecord] = []
        self._trained: dict[GroupId, list[tuple[int, dict[str, Any], float]]] = {
            g: [] for g in space.subnet_groups
        }
        self._distinct: dict[GroupId, dict[tuple, dict[str, Any]]] = {
            g: {} for g in space.subnet_groups
        }
        self._best_source: dict[GroupId, dict[tuple, tuple[float, int]]] = {
            g: {} for g in space.subnet_groups
        }
        self._complete_count = 0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TrialRecord]:
        return iter(self.records)

    def append(self, record: TrialRecord) -> None:
        if record.cost <= 0:
            raise ValueError("trial cost must be positive")
        if record.cumulative_time <= self.cumulative_time:
            raise ValueError("cumulative_time must be strictly increasing")
        self.records.append(record)
        if record.plan.kind == COMPLETE:
            self._complete_count += 1
        for i, g in enumerate(self.space.subnet_groups):
            if record.plan.kind == TRANSFER and g in record.plan.frozen:
                continue
            part = self.space.project(record.config, g)
            key = _assignment_key(part)
            l_i = record.group_losses[i]
            self._trained[g].append((record.trial_id, part, l_i))
            self._distinct[g].setdefault(key, part)
            best = self._best_source[g].get(key)
            if best is None or (l_i, record.trial_id) < best:
                self._best_source[g][key] = (l_i, record.trial_id)

    @property
    def cumulative_time(self) -> float:
        return self.records[-1].cumulative_time if self.records else 0.0

    def get(self, trial_id: int) -> TrialRecord:
        if not 0 <= trial_id < len(self.records):
            raise UnknownSourceTrial(f"no trial with id {trial_id}")
        return self.records[trial_id]

    def losses(self) -> list[float]:
        return [r.loss for r in self.records]

    def group_losses(self, group: GroupId) -> list[float]:
        i = group.index - 1
        return [r.group_losses[i] for r in self.records]

    def has_complete_parent(self) -> bool:
        return self._complete_count > 0

    def trained_entries(self, group: GroupId) -> list[tuple[int, dict[str, Any], float]]:
        """(trial id, assignment, group loss) for unfrozen trainings of the group."""
        return self._trained[group]

    def distinct_trained(self, group: GroupId) -> list[dict[str, Any]]:
        """Distinct unfrozen-trained assignments, in first-observed order."""
        return list(self._distinct[group].values())

    def distinct_count(self, group: GroupId) -> int:
        return len(self._distinct[group])

    def resolve_best_source(self, group: GroupId, assignment: Mapping[str, Any]) -> int:
        """Trial id with the best group loss among unfrozen trainings of this assignment."""
        best = self._best_source[group].get(_assignment_key(assignment))
        if best is None:
            raise UnknownSourceTrial(
                f"assignment for {group.label} was never trained unfrozen"
            )
        return best[1]

    def observation_set(self) -> ObservationSet:
        return ObservationSet.of([r.config for r in self.records], self.losses())

    def group_observation_set(self, group: GroupId) -> ObservationSet:
        configs = [self.space.project(r.config, group) for r in self.records]
        return ObservationSet.of(configs, self.group_losses(group))


# -- gates -------------------------------------------------------------------

def _needs_bootstrap(history: History) -> bool:
    space = history.space
    groups_short = any(
        history.distinct_count(g) <= space.group_dim(g) for g in space.subnet_groups
    )
    return groups_short and not history.has_complete_parent()


def _full_ready(history: History, params: SchedulerParams) -> bool:
    return len(history) >= params.tpe_gate(history.space.dim)


def _group_ready(history: History) -> bool:
    space = history.space
    return all(
        history.distinct_count(g) > space.group_dim(g) for g in space.subnet_groups
    )


def _uniform_complete(space: GroupedConfigSpace, rng: np.random.Generator, branch: str) -> Proposal:
    return Proposal(space.sample_uniform(rng), TrainingPlan.complete(), branch)


# -- scheduler steps ----------------------------------------------------------

def bo_step(
    history: History,
    space: GroupedConfigSpace,
    params: SchedulerParams,
    rng: np.random.Generator,
) -> Proposal:
    """Baseline: uniform until the TPE gate, then explore-or-propose."""
    if len(history) < params.tpe_gate(space.dim):
        return _uniform_complete(space, rng, "bootstrap")
    if rng.random() < params.explore_prob:
        return _uniform_complete(space, rng, "explore")
    config = propose_tpe(space, history.observation_set(), params.tpe, rng)
    return Proposal(config, TrainingPlan.complete(), "tpe")


def dcbo_step(
    history: History,
    space: GroupedConfigSpace,
    params: SchedulerParams,
    rng: np.random.Generator,
) -> Proposal:
    """Divide and conquer: recombine trained subnetworks across parents.

    Five branches, checked in order after drawing the exploration and
    complete-training uniforms: bootstrap, explore (random complete or
    random recombination transfer), full-space TPE (complete or focal
    transfer), per-group TPE (complete or per-group focal argmax transfer),
    and a random-complete fallback.
    """
    u_explore = rng.random()
    u_complete = rng.random()

    if _needs_bootstrap(history):
        return _uniform_complete(space, rng, "bootstrap")

    if u_explore < params.explore_prob:
        if u_complete < params.complete_prob:
            return _uniform_complete(space, rng, "explore_complete")
        parts: dict[GroupId, dict[str, Any]] = {}
        frozen: dict[GroupId, int] = {}
        for g in space.subnet_groups:
            entries = history.trained_entries(g)
            tid, part, _ = entries[int(rng.integers(len(entries)))]
            parts[g] = part
            frozen[g] = tid
        parts[MERGE] = space.sample_group_uniform(MERGE, rng)
        return Proposal(space.compose(parts), TrainingPlan.transfer(frozen), "explore_transfer")

    if _full_ready(history, params):
        obs = history.observation_set()
        if u_complete < params.complete_prob:
            config = propose_tpe(space, obs, params.tpe, rng)
            return Proposal(config, TrainingPlan.complete(), "full_tpe_complete")
        restrictions = {g: history.distinct_trained(g) for g in space.subnet_groups}
        config = propose_focal_tpe(space, obs, restrictions, params.tpe, rng)
        frozen = {
            g: history.resolve_best_source(g, space.project(config, g))
            for g in space.subnet_groups
        }
        return Proposal(config, TrainingPlan.transfer(frozen), "full_focal_transfer")

    if _group_ready(history):
        if u_complete < params.complete_prob:
            parts = {
                g: propose_tpe(
                    space.group_defs(g), history.group_observation_set(g), params.tpe, rng
                )
                for g in space.subnet_groups
            }
            parts[MERGE] = space.sample_group_uniform(MERGE, rng)
            return Proposal(space.compose(parts), TrainingPlan.complete(), "group_tpe_complete")
        parts = {}
        frozen = {}
        for g in space.subnet_groups:
            allowed = history.distinct_trained(g)
            scores = density_ratio(
                space.group_defs(g), history.group_observation_set(g), params.tpe, allowed
            )
            pick = allowed[int(np.argmax(scores))]
            parts[g] = pick
            frozen[g] = history.resolve_best_source(g, pick)
        parts[MERGE] = space.sample_group_uniform(MERGE, rng)
        return Proposal(
            space.compose(parts), TrainingPlan.transfer(frozen), "group_focal_transfer"
        )

    return _uniform_complete(space, rng, "fallback")


def sabo_importance(history: History, group_count: int) -> ImportanceVector:
    """Importance from the 90th percentile of per-group performance.

    Scores are negated group losses (higher is better); percentiles use
    linear interpolation. The per-group 90th-percentile scores are shifted
    so the worst group sits at zero, then normalized with a 1e-6 floor, so
    a dominated group's probability collapses toward zero.
    """
    space = history.space
    if group_count != space.group_count:
        raise NoGroupLosses(
            f"history has {space.group_count} subnet groups, asked for {group_count}"
        )
    if len(history) == 0:
        raise NoGroupLosses("importance needs at least one trial with group losses")
    epsilon = 1e-6
    s90 = np.array(
        [
            np.percentile([-l for l in history.group_losses(g)], 90)
            for g in space.subnet_groups
        ]
    )
    shifted = s90 - s90.min() + epsilon
    return ImportanceVector(tuple(float(p) for p in shifted / shifted.sum()))


def sabo_step(
    history: History,
    space: GroupedConfigSpace,
    params: SchedulerParams,
    importance: ImportanceVector,
    rng: np.random.Generator,
) -> Proposal:
    """Subnetwork adaptive: freeze group i with probability 1 - importance[i].

    Exploration mirrors the divide-and-conquer scheduler: with probability
    ``explore_prob`` the step randomizes, training fully from scratch with
    probability ``complete_prob`` and otherwise drawing a randomized mix
    (frozen groups copy a random trained entry, the rest sample fresh
    uniform). Exploiting steps use the mix before the full-space gate and
    focal TPE after it, with frozen groups as focal restrictions and each
    frozen state taken from the best-scoring trial that trained the chosen
    entry.
    """
    u_explore = rng.random()
    u_complete = rng.random()

    if _needs_bootstrap(history):
        return _uniform_complete(space, rng, "bootstrap")

    exploring = u_explore < params.explore_prob
    if exploring and u_complete < params.complete_prob:
        return _uniform_complete(space, rng, "explore_complete")

    if exploring or not _full_ready(history, params):
        parts: dict[GroupId, dict[str, Any]] = {}
        frozen: dict[GroupId, int] = {}
        for i, g in enumerate(space.subnet_groups):
            if importance.probs[i] < rng.random():
                entries = history.trained_entries(g)
                tid, part, _ = entries[int(rng.integers(len(entries)))]
                parts[g] = part
                frozen[g] = tid
            else:
                parts[g] = space.sample_group_uniform(g, rng)
        parts[MERGE] = space.sample_group_uniform(MERGE, rng)
        config = space.compose(parts)
        if frozen:
            return Proposal(config, TrainingPlan.transfer(frozen), "mix_transfer")
        return Proposal(config, TrainingPlan.complete(), "mix_complete")

    restrictions = {}
    for i, g in enumerate(space.subnet_groups):
        if importance.probs[i] < rng.random():
            restrictions[g] = history.distinct_trained(g)
    config = propose_focal_tpe(
        space, history.observation_set(), restrictions, params.tpe, rng
    )
    frozen = {
        g: history.resolve_best_source(g, space.project(config, g)) for g in restrictions
    }
    if frozen:
        return Proposal(config, TrainingPlan.transfer(frozen), "focal_transfer")
    return Proposal(config, TrainingPlan.complete(), "focal_complete")


# -- execution ------------------------------------------------------------------

def execute_trial(
    proposal: Proposal,
    objective,
    history: History,
    params: SchedulerParams,
    rng: np.random.Generator,
) -> TrialRecord:
    """Evaluate a proposal, append the resulting record, and return it."""
    config, plan, branch = proposal
    if plan.kind == TRANSFER:
        frozen_states = {
            g: history.get(tid).states[g] for g, tid in plan.frozen.items()
        }
        outcome = objective.eval_transfer(config, frozen_states, rng)
    else:
        outcome = objective.eval_complete(config, rng)
    loss = combine_loss(outcome.merge_loss, outcome.group_losses, params.aux_loss_weight)
    record = TrialRecord(
        trial_id=len(history),
        config=dict(config),
        plan=plan,
        loss=loss,
        merge_loss=outcome.merge_loss,
        group_losses=tuple(outcome.group_losses),
        states=dict(outcome.states),
        cost=outcome.cost,
        cumulative_time=history.cumulative_time + outcome.cost,
        branch=branch,
        rng_state=rng_state_hex(rng),
    )
    history.append(record)
    return record


def step(
    kind: str,
    history: History,
    space: GroupedConfigSpace,
    params: SchedulerParams,
    rng: np.random.Generator,
) -> Proposal:
    """Dispatch one scheduling decision for the given scheduler kind."""
    if kind == "random":
        return _uniform_complete(space, rng, "random")
    if kind == "bo":
        return bo_step(history, space, params, rng)
    if kind == "dcbo":
        return dcbo_step(history, space, params, rng)
    if kind == "sabo":
        if len(history) == 0:
            importance = ImportanceVector.uniform(space.group_count)
        else:
            importance = sabo_importance(history, space.group_count)
        return sabo_step(history, space, params, importance, rng)
    raise ValueError(f"unknown scheduler kind {kind!r}")


def run(
    kind: str,
    objective,
    space: GroupedConfigSpace,
    params: SchedulerParams,
    budget: float,
    seed: int,
    max_trials: int | None = None,
) -> History:
    """Run one scheduler until the budget is spent.

    A trial starts only while cumulative time is below the budget; the last
    trial may overshoot. Deterministic in (kind, space, params, objective,
    budget, seed).
    """
    if budget <= 0:
        raise BudgetTooSmall("budget must be positive")
    if budget < objective.min_complete_cost:
        raise BudgetTooSmall(
            f"budget {budget} is below one complete trial's minimum cost "
            f"{objective.min_complete_cost}"
        )
    rng = np.random.default_rng(seed)
    history = History(space)
    while history.cumulative_time < budget:
        if max_trials is not None and len(history) >= max_trials:
            break
        proposal = step(kind, history, space, params, rng)
        execute_trial(proposal, objective, history, params, rng)
    return history


# -- combinatorics ----------------------------------------------------------------

def max_speedup_bound(complete_count: int, subnet_count: int) -> int:
    """Upper bound on the transfer speedup: T^(I-1)."""
    if complete_count < 1 or subnet_count < 1:
        raise ValueError("counts must be >= 1")
    return complete_count ** (subnet_count - 1)


def transfer_combo_count(complete_count: int, subnet_count: int) -> int:
    """Novel cross-parent recombinations: T^I - T."""
    if complete_count < 1 or subnet_count < 1:
        raise ValueError("counts must be >= 1")
    return complete_count**subnet_count - complete_count


# -- rng state serialization --------------------------------------------------------

def rng_state_hex(rng: np.random.Generator) -> str:
    """Opaque hex encoding of the generator's full state."""
    return json.dumps(rng.bit_generator.state, sort_keys=True).encode("ascii").hex()


def rng_from_state_hex(state_hex: str) -> np.random.Generator:
    """Rebuild a generator positioned exactly at a stored state."""
    state = json.loads(bytes.fromhex(state_hex).decode("ascii"))
    rng = np.random.default_rng()
    if state["bit_generator"] != rng.bit_generator.state["bit_generator"]:
        raise ValueError(
            f"stored state is for {state['bit_generator']}, "
            f"not {rng.bit_generator.state['bit_generator']}"
        )
    rng.bit_generator.state = state
    return rng
