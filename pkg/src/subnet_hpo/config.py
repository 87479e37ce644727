"""Experiment configuration files and the resolved experiment plan.

Configs are TOML or JSON (auto-detected by extension). A minimal config
names a shipped benchmark, a scheduler, a budget, and seeds; everything
else (scheduler gates, TPE knobs, cost overrides) has defaults. Inline
experiments replace ``benchmark`` with a ``[surrogate]`` table and
``[[space]]`` parameter entries. Unknown keys are rejected; every
validation error names the offending key.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import tomli

from .errors import BadBounds, ParseError, UnknownKey, ValidationError
from .sched import SCHEDULER_KINDS, SchedulerParams
from .space import (
    CATEGORICAL,
    CONTINUOUS,
    INTEGER,
    GroupedConfigSpace,
    GroupId,
    HyperparameterDef,
    build_space,
)
from .surrogate import CostModel, SurrogateObjective, SurrogateSpec, make_surrogate, standard_benchmarks
from .tpe import TpeParams

_TOP_KEYS = {
    "scheduler",
    "budget",
    "seeds",
    "folds",
    "benchmark",
    "out_dir",
    "scheduler_params",
    "tpe",
    "cost",
    "surrogate",
    "space",
}
_SCHED_KEYS = {"explore_prob", "complete_prob", "aux_loss_weight", "min_complete"}
_TPE_KEYS = {"alpha", "n_candidates", "bandwidth_floor", "prior_weight"}
_COST_KEYS = {"base_complete_cost", "transfer_ratio", "epoch_jitter"}
_SURROGATE_KEYS = {
    "group_count",
    "signal_weights",
    "landscape_seed",
    "noise_sigma",
    "landscape_components",
}
_SPACE_ENTRY_KEYS = {"name", "group", "kind", "lo", "hi", "log", "choices"}


@dataclass(frozen=True)
class ExperimentPlan:
    """A fully resolved experiment: what to run, on what, with what budget."""

    scheduler: str
    budget: float
    seeds: tuple[int, ...]
    folds: int
    out_dir: str | None
    benchmark: str | None
    space: GroupedConfigSpace
    surrogate_spec: SurrogateSpec
    cost_model: CostModel
    params: SchedulerParams

    def objective(self) -> SurrogateObjective:
        return make_surrogate(self.surrogate_spec, self.space, self.cost_model)

    def digest(self) -> str:
        """Stable fingerprint of everything that shapes a run's trajectory."""
        payload = {
            "scheduler": self.scheduler,
            "budget": self.budget,
            "folds": self.folds,
            "benchmark": self.benchmark,
            "space": [_def_to_dict(d) for d in self.space.defs],
            "group_count": self.space.group_count,
            "surrogate": dataclasses.asdict(self.surrogate_spec),
            "cost": dataclasses.asdict(self.cost_model),
            "params": dataclasses.asdict(self.params),
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _def_to_dict(d: HyperparameterDef) -> dict:
    return {
        "name": d.name,
        "group": d.group.label,
        "kind": d.kind,
        "lo": d.lo,
        "hi": d.hi,
        "log": d.log_scale,
        "choices": list(d.choices) if d.choices else None,
    }


def _reject_unknown(table: Mapping[str, Any], allowed: set[str], context: str) -> None:
    for key in table:
        if key not in allowed:
            where = f"{context}.{key}" if context else key
            raise UnknownKey(f"unknown config key {where!r}")


def _fail(key: str, reason: str):
    raise ValidationError(f"{key}: {reason}")


def _number(raw: Mapping[str, Any], key: str, context: str = "") -> float:
    name = f"{context}.{key}" if context else key
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(name, f"expected a number, got {value!r}")
    return float(value)


def _integer(raw: Mapping[str, Any], key: str, context: str = "") -> int:
    name = f"{context}.{key}" if context else key
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(name, f"expected an integer, got {value!r}")
    return int(value)


def _in_range(name: str, value: float, lo: float, hi: float, *, lo_open=False, hi_open=False):
    ok_lo = value > lo if lo_open else value >= lo
    ok_hi = value < hi if hi_open else value <= hi
    if not (ok_lo and ok_hi):
        _fail(name, f"value {value} out of range")
    return value


def _parse_scheduler_params(raw: Mapping[str, Any]) -> SchedulerParams:
    sched_table = raw.get("scheduler_params", {})
    tpe_table = raw.get("tpe", {})
    _reject_unknown(sched_table, _SCHED_KEYS, "scheduler_params")
    _reject_unknown(tpe_table, _TPE_KEYS, "tpe")

    tpe_kwargs: dict[str, Any] = {}
    if "alpha" in tpe_table:
        tpe_kwargs["alpha"] = _in_range(
            "tpe.alpha", _number(tpe_table, "alpha", "tpe"), 0, 1, lo_open=True, hi_open=True
        )
    if "n_candidates" in tpe_table:
        n = _integer(tpe_table, "n_candidates", "tpe")
        if n < 1:
            _fail("tpe.n_candidates", "must be >= 1")
        tpe_kwargs["n_candidates"] = n
    if "bandwidth_floor" in tpe_table:
        bw = _number(tpe_table, "bandwidth_floor", "tpe")
        if bw <= 0:
            _fail("tpe.bandwidth_floor", "must be positive")
        tpe_kwargs["bandwidth_floor"] = bw
    if "prior_weight" in tpe_table:
        tpe_kwargs["prior_weight"] = _in_range(
            "tpe.prior_weight", _number(tpe_table, "prior_weight", "tpe"), 0, 1
        )

    sched_kwargs: dict[str, Any] = {"tpe": TpeParams(**tpe_kwargs)}
    if "explore_prob" in sched_table:
        sched_kwargs["explore_prob"] = _in_range(
            "scheduler_params.explore_prob",
            _number(sched_table, "explore_prob", "scheduler_params"),
            0,
            1,
        )
    if "complete_prob" in sched_table:
        sched_kwargs["complete_prob"] = _in_range(
            "scheduler_params.complete_prob",
            _number(sched_table, "complete_prob", "scheduler_params"),
            0,
            1,
        )
    if "aux_loss_weight" in sched_table:
        w = _number(sched_table, "aux_loss_weight", "scheduler_params")
        if w < 0:
            _fail("scheduler_params.aux_loss_weight", "must be >= 0")
        sched_kwargs["aux_loss_weight"] = w
    if "min_complete" in sched_table:
        mc = _integer(sched_table, "min_complete", "scheduler_params")
        if mc < 1:
            _fail("scheduler_params.min_complete", "must be >= 1")
        sched_kwargs["min_complete"] = mc
    return SchedulerParams(**sched_kwargs)


def _parse_cost(raw: Mapping[str, Any], base: CostModel) -> CostModel:
    table = raw.get("cost", {})
    _reject_unknown(table, _COST_KEYS, "cost")
    updates: dict[str, Any] = {}
    if "base_complete_cost" in table:
        value = _number(table, "base_complete_cost", "cost")
        if value <= 0:
            _fail("cost.base_complete_cost", "must be positive")
        updates["base_complete_cost"] = value
    if "transfer_ratio" in table:
        updates["transfer_ratio"] = _in_range(
            "cost.transfer_ratio",
            _number(table, "transfer_ratio", "cost"),
            0,
            1,
            lo_open=True,
            hi_open=True,
        )
    if "epoch_jitter" in table:
        updates["epoch_jitter"] = _in_range(
            "cost.epoch_jitter", _number(table, "epoch_jitter", "cost"), 0, 1, hi_open=True
        )
    return dataclasses.replace(base, **updates) if updates else base


def _parse_space_entry(entry: Mapping[str, Any], index: int) -> HyperparameterDef:
    context = f"space[{index}]"
    if not isinstance(entry, Mapping):
        _fail(context, "each space entry must be a table")
    _reject_unknown(entry, _SPACE_ENTRY_KEYS, context)
    for key in ("name", "group", "kind"):
        if key not in entry:
            _fail(f"{context}.{key}", "required")
    name = entry["name"]
    if not isinstance(name, str) or not name:
        _fail(f"{context}.name", "must be a nonempty string")

    group_raw = entry["group"]
    if group_raw == "merge":
        group = GroupId.merge()
    elif isinstance(group_raw, int) and not isinstance(group_raw, bool) and group_raw >= 1:
        group = GroupId.subnet(group_raw)
    else:
        _fail(f"{context}.group", f"expected 'merge' or a subnet index >= 1, got {group_raw!r}")

    kind = entry["kind"]
    try:
        if kind == CONTINUOUS:
            for key in ("lo", "hi"):
                if key not in entry:
                    _fail(f"{context}.{key}", "required for continuous")
            log = entry.get("log", False)
            if not isinstance(log, bool):
                _fail(f"{context}.log", "must be a boolean")
            return HyperparameterDef(
                name,
                group,
                CONTINUOUS,
                lo=_number(entry, "lo", context),
                hi=_number(entry, "hi", context),
                log_scale=log,
            )
        if kind == INTEGER:
            for key in ("lo", "hi"):
                if key not in entry:
                    _fail(f"{context}.{key}", "required for integer")
            return HyperparameterDef(
                name,
                group,
                INTEGER,
                lo=_integer(entry, "lo", context),
                hi=_integer(entry, "hi", context),
            )
        if kind == CATEGORICAL:
            choices = entry.get("choices")
            if not isinstance(choices, list) or not choices:
                _fail(f"{context}.choices", "must be a nonempty list")
            return HyperparameterDef(name, group, CATEGORICAL, choices=tuple(choices))
    except BadBounds as exc:
        raise ValidationError(f"{context}: {exc}") from exc
    _fail(f"{context}.kind", f"expected one of continuous/integer/categorical, got {kind!r}")


def _parse_surrogate(raw: Mapping[str, Any]) -> SurrogateSpec:
    table = raw["surrogate"]
    _reject_unknown(table, _SURROGATE_KEYS, "surrogate")
    for key in ("group_count", "signal_weights", "landscape_seed"):
        if key not in table:
            _fail(f"surrogate.{key}", "required")
    group_count = _integer(table, "group_count", "surrogate")
    if group_count < 1:
        _fail("surrogate.group_count", "must be >= 1")
    weights = table["signal_weights"]
    if not isinstance(weights, list) or len(weights) != group_count:
        _fail("surrogate.signal_weights", f"must list {group_count} numbers")
    kwargs: dict[str, Any] = {}
    if "noise_sigma" in table:
        sigma = _number(table, "noise_sigma", "surrogate")
        if sigma < 0:
            _fail("surrogate.noise_sigma", "must be >= 0")
        kwargs["noise_sigma"] = sigma
    if "landscape_components" in table:
        comps = _integer(table, "landscape_components", "surrogate")
        if comps < 1:
            _fail("surrogate.landscape_components", "must be >= 1")
        kwargs["landscape_components"] = comps
    try:
        return SurrogateSpec(
            group_count,
            tuple(float(w) for w in weights),
            landscape_seed=_integer(table, "landscape_seed", "surrogate"),
            **kwargs,
        )
    except ValueError as exc:
        raise ValidationError(f"surrogate: {exc}") from exc


def _load_raw(path: Path) -> dict:
    if path.suffix == ".toml":
        try:
            with open(path, "rb") as fh:
                return tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    raise ParseError(f"{path}: expected a .toml or .json config file")


def parse_experiment_config(path: str | Path) -> ExperimentPlan:
    """Load, validate, and resolve an experiment config file."""
    raw = _load_raw(Path(path))
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a table/object")
    _reject_unknown(raw, _TOP_KEYS, "")

    for key in ("scheduler", "budget", "seeds"):
        if key not in raw:
            _fail(key, "required")
    scheduler = raw["scheduler"]
    if scheduler not in SCHEDULER_KINDS:
        _fail("scheduler", f"expected one of {SCHEDULER_KINDS}, got {scheduler!r}")
    budget = _number(raw, "budget")
    if budget <= 0:
        _fail("budget", "must be positive")
    seeds_raw = raw["seeds"]
    if (
        not isinstance(seeds_raw, list)
        or not seeds_raw
        or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds_raw)
    ):
        _fail("seeds", "must be a nonempty list of integers")
    folds = 1
    if "folds" in raw:
        folds = _integer(raw, "folds")
        if folds < 1:
            _fail("folds", "must be >= 1")
    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        _fail("out_dir", "must be a string")

    params = _parse_scheduler_params(raw)

    benchmark_name = raw.get("benchmark")
    if benchmark_name is not None:
        if "surrogate" in raw or "space" in raw:
            _fail("benchmark", "cannot combine a named benchmark with an inline space")
        benches = standard_benchmarks()
        if benchmark_name not in benches:
            _fail("benchmark", f"unknown benchmark (have {sorted(benches)})")
        bench = benches[benchmark_name]
        space, spec, base_cost = bench.space, bench.spec, bench.cost_model
    else:
        if "surrogate" not in raw or "space" not in raw:
            _fail("benchmark", "either a benchmark or both [surrogate] and [[space]] are required")
        spec = _parse_surrogate(raw)
        entries = raw["space"]
        if not isinstance(entries, list) or not entries:
            _fail("space", "must be a nonempty list of parameter entries")
        defs = [_parse_space_entry(e, i) for i, e in enumerate(entries)]
        try:
            space = build_space(defs, group_count=spec.group_count)
        except Exception as exc:
            raise ValidationError(f"space: {exc}") from exc
        base_cost = CostModel()

    cost_model = _parse_cost(raw, base_cost)

    return ExperimentPlan(
        scheduler=scheduler,
        budget=budget,
        seeds=tuple(seeds_raw),
        folds=folds,
        out_dir=out_dir,
        benchmark=benchmark_name,
        space=space,
        surrogate_spec=spec,
        cost_model=cost_model,
        params=params,
    )
