"""Append-only trial journals with exact resume.

One JSON-lines file per (scheduler, seed, fold): a header line holding the
plan digest and the run's identity, then one line per trial. Floats
serialize at full precision (shortest round-trip repr), dictionary keys are
sorted, and each record carries the post-trial generator state, so a
resumed run reproduces the uninterrupted journal byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Any

import numpy as np

from .config import ExperimentPlan
from .errors import BudgetTooSmall, ResumeMismatch
from .sched import (
    History,
    TrainingPlan,
    TrialRecord,
    execute_trial,
    rng_from_state_hex,
    step,
)
from .space import GroupId
from .surrogate import QualityState, SurrogateObjective

JOURNAL_VERSION = 1


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def journal_path(out_dir: str | Path, scheduler: str, seed: int, fold: int) -> Path:
    return Path(out_dir) / f"{scheduler}_seed{seed}_fold{fold}.jsonl"


def record_to_line(record: TrialRecord) -> str:
    states = {
        g.label: {"quality": s.quality, "hash": s.trained_config_hash}
        for g, s in record.states.items()
    }
    payload = {
        "type": "trial",
        "id": record.trial_id,
        "branch": record.branch,
        "plan": {
            "kind": record.plan.kind,
            "frozen": {g.label: tid for g, tid in record.plan.frozen.items()},
        },
        "config": record.config,
        "loss": record.loss,
        "merge_loss": record.merge_loss,
        "group_losses": list(record.group_losses),
        "states": states,
        "cost": record.cost,
        "cumulative_time": record.cumulative_time,
        "rng_state": record.rng_state,
    }
    return _dumps(payload)


def record_from_line(line: str) -> TrialRecord:
    data = json.loads(line)
    plan_data = data["plan"]
    frozen = {GroupId.from_label(l): tid for l, tid in plan_data["frozen"].items()}
    plan = (
        TrainingPlan.transfer(frozen)
        if plan_data["kind"] == "transfer"
        else TrainingPlan.complete()
    )
    states = {
        GroupId.from_label(l): QualityState(
            GroupId.from_label(l), s["quality"], s["hash"]
        )
        for l, s in data["states"].items()
    }
    return TrialRecord(
        trial_id=data["id"],
        config=data["config"],
        plan=plan,
        loss=data["loss"],
        merge_loss=data["merge_loss"],
        group_losses=tuple(data["group_losses"]),
        states=states,
        cost=data["cost"],
        cumulative_time=data["cumulative_time"],
        branch=data["branch"],
        rng_state=data["rng_state"],
    )


def header_line(plan: ExperimentPlan, seed: int, fold: int) -> str:
    return _dumps(
        {
            "type": "header",
            "version": JOURNAL_VERSION,
            "plan_digest": plan.digest(),
            "scheduler": plan.scheduler,
            "seed": seed,
            "fold": fold,
            "budget": plan.budget,
        }
    )


def read_journal(path: Path) -> tuple[dict, list[TrialRecord]]:
    """Parse a journal into its header and trial records."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line]
    if not lines:
        raise ResumeMismatch(f"{path}: journal is empty")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ResumeMismatch(f"{path}: missing journal header")
    return header, [record_from_line(line) for line in lines[1:]]


def load_history(path: Path, plan: ExperimentPlan) -> History:
    """Rebuild the History journaled at ``path`` (no digest check)."""
    _, records = read_journal(path)
    history = History(plan.space)
    for record in records:
        history.append(record)
    return history


def _check_resumable(header: dict, plan: ExperimentPlan, seed: int, fold: int, path: Path) -> None:
    expectations = {
        "plan_digest": plan.digest(),
        "scheduler": plan.scheduler,
        "seed": seed,
        "fold": fold,
        "budget": plan.budget,
    }
    for key, expected in expectations.items():
        if header.get(key) != expected:
            raise ResumeMismatch(
                f"{path}: journal {key} {header.get(key)!r} does not match plan {expected!r}"
            )


def run_seed(seed: int, fold: int) -> np.random.SeedSequence:
    """Seed derivation for one (seed, fold) worker."""
    return np.random.SeedSequence([seed, fold])


def _load_for_resume(path: Path) -> tuple[dict, list[TrialRecord]]:
    """Like :func:`read_journal`, but drops a torn trailing line.

    A kill mid-write can persist a prefix of the final record; everything
    up to the last newline is intact (single writer, line-buffered), so the
    file is truncated back to it before appending resumes.
    """
    raw = path.read_bytes()
    clean_len = raw.rfind(b"\n") + 1
    lines = raw[:clean_len].decode("utf-8").splitlines()
    if not lines:
        raise ResumeMismatch(f"{path}: no complete journal lines")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ResumeMismatch(f"{path}: missing journal header")
    records = [record_from_line(line) for line in lines[1:]]
    if clean_len != len(raw):
        with open(path, "rb+") as fh:
            fh.truncate(clean_len)
    return header, records


def run_with_journal(
    plan: ExperimentPlan,
    objective: SurrogateObjective,
    seed: int,
    fold: int,
    path: Path,
) -> History:
    """Run one (seed, fold) worker, journaling each trial as it completes.

    If the journal already exists the completed trials are loaded, the
    generator state is restored from the last record, and the run continues
    until the budget; a finished journal is a no-op.
    """
    if plan.budget < objective.min_complete_cost:
        raise BudgetTooSmall(
            f"budget {plan.budget} is below one complete trial's minimum cost"
        )
    path.parent.mkdir(parents=True, exist_ok=True)
    history = History(plan.space)

    if path.exists():
        header, records = _load_for_resume(path)
        _check_resumable(header, plan, seed, fold, path)
        for record in records:
            history.append(record)
        if records:
            rng = rng_from_state_hex(records[-1].rng_state)
        else:
            rng = np.random.default_rng(run_seed(seed, fold))
        mode = "a"
        write_header = False
    else:
        rng = np.random.default_rng(run_seed(seed, fold))
        mode = "w"
        write_header = True

    with open(path, mode, encoding="utf-8") as fh:
        if write_header:
            fh.write(header_line(plan, seed, fold) + "\n")
            fh.flush()
        _advance(plan, objective, history, rng, fh)
    return history


def _advance(
    plan: ExperimentPlan,
    objective: SurrogateObjective,
    history: History,
    rng: np.random.Generator,
    fh: IO[str],
) -> None:
    while history.cumulative_time < plan.budget:
        proposal = step(plan.scheduler, history, plan.space, plan.params, rng)
        record = execute_trial(proposal, objective, history, plan.params, rng)
        fh.write(record_to_line(record) + "\n")
        fh.flush()
