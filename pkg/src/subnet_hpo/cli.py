"""Command-line experiment runner and report generator.

Subcommands: ``run`` executes an experiment config (one resumable journal
per scheduler/seed/fold), ``compare`` pairs two journal directories by
seed/fold into a speedup report plus CSV regret curves, and ``report``
re-emits the CSV curves from a stored report. Exit codes: 0 success,
1 validation problems, 2 I/O problems. The ``SUBNET_HPO_SEED_OFFSET``
environment variable (integer, default 0) shifts every seed, for sharding
repeats across workers.
"""

from __future__ import annotations

import json
import os
import re
import sys
from pathlib import Path

import click

from .config import ExperimentPlan, parse_experiment_config
from .errors import SubnetHpoError, UnpairedRuns, ValidationError
from .journal import journal_path, read_journal, run_with_journal
from .metrics import (
    SpeedupReport,
    curve_to_csv,
    regret_curve,
    report_from_dict,
    report_to_dict,
    summarize,
)

SEED_OFFSET_ENV = "SUBNET_HPO_SEED_OFFSET"

_JOURNAL_NAME = re.compile(r"^(?P<scheduler>[a-z]+)_seed(?P<seed>-?\d+)_fold(?P<fold>\d+)\.jsonl$")


def _seed_offset() -> int:
    raw = os.environ.get(SEED_OFFSET_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_OFFSET_ENV}: expected an integer, got {raw!r}")


def _run_plan(plan: ExperimentPlan, out_dir: Path) -> list[Path]:
    objective = plan.objective()
    offset = _seed_offset()
    paths = []
    for seed in plan.seeds:
        for fold in range(plan.folds):
            path = journal_path(out_dir, plan.scheduler, seed + offset, fold)
            run_with_journal(plan, objective, seed + offset, fold, path)
            paths.append(path)
    return paths


def _collect_journals(directory: Path) -> dict[tuple[int, int], Path]:
    journals = {}
    for path in sorted(directory.glob("*.jsonl")):
        match = _JOURNAL_NAME.match(path.name)
        if match:
            journals[(int(match["seed"]), int(match["fold"]))] = path
    if not journals:
        raise UnpairedRuns(f"no journals found in {directory}")
    return journals


def _compare_dirs(baseline_dir: Path, method_dir: Path, aggressive: bool) -> SpeedupReport:
    baseline = _collect_journals(baseline_dir)
    method = _collect_journals(method_dir)
    missing = sorted(set(baseline) ^ set(method))
    if missing:
        raise UnpairedRuns(f"unpaired seed/fold runs: {missing}")

    labels, b_curves, m_curves = [], [], []
    for key in sorted(baseline):
        seed, fold = key
        b_history = _history_points(baseline[key])
        m_history = _history_points(method[key])
        labels.append(f"seed{seed}_fold{fold}")
        b_curves.append(regret_curve(b_history))
        m_curves.append(regret_curve(m_history))
    return summarize(b_curves, m_curves, labels=labels, aggressive=aggressive)


def _history_points(path: Path) -> list[tuple[float, float]]:
    _, records = read_journal(path)
    if not records:
        raise UnpairedRuns(f"{path}: journal holds no trials")
    return [(r.cumulative_time, r.loss) for r in records]


def _write_report_csvs(report: SpeedupReport, csv_dir: Path) -> None:
    csv_dir.mkdir(parents=True, exist_ok=True)
    for pair in report.pairs:
        for side, curve in (("baseline", pair.baseline_curve), ("method", pair.method_curve)):
            (csv_dir / f"{pair.label}_{side}.csv").write_text(curve_to_csv(curve))


def _echo_report(report: SpeedupReport) -> None:
    click.echo(
        f"speedup ({report.rule}): mean={report.mean_speedup:.3f} "
        f"max={report.max_speedup:.3f} final={report.final_speedup:.3f} "
        f"gain={report.final_gain:.4f} over {len(report.pairs)} pairs"
    )


@click.group()
def main() -> None:
    """Hyperparameter optimization for multi-subnetwork models."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", default=None, type=click.Path(path_type=Path))
def cmd_run(config_path: Path, out_dir: Path | None) -> None:
    """Execute an experiment config; journals land in the output directory."""
    plan = parse_experiment_config(config_path)
    target = out_dir or (Path(plan.out_dir) if plan.out_dir else None)
    if target is None:
        raise ValidationError("out_dir: set it in the config or pass --out")
    paths = _run_plan(plan, target)
    click.echo(f"completed {len(paths)} journal(s) in {target}")


@main.command("compare")
@click.option("--baseline", "baseline_dir", required=True, type=click.Path(path_type=Path))
@click.option("--method", "method_dir", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--aggressive-speedup", is_flag=True, default=False)
def cmd_compare(
    baseline_dir: Path, method_dir: Path, out_path: Path, aggressive_speedup: bool
) -> None:
    """Pair two journal directories by seed/fold and write the speedup report."""
    report = _compare_dirs(baseline_dir, method_dir, aggressive_speedup)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report_to_dict(report), sort_keys=True, indent=1) + "\n")
    _write_report_csvs(report, out_path.parent / (out_path.stem + "_curves"))
    _echo_report(report)


@main.command("report")
@click.option("--in", "in_path", required=True, type=click.Path(path_type=Path))
@click.option("--csv", "csv_dir", required=True, type=click.Path(path_type=Path))
def cmd_report(in_path: Path, csv_dir: Path) -> None:
    """Re-emit CSV regret curves from a stored speedup report."""
    report = report_from_dict(json.loads(in_path.read_text()))
    _write_report_csvs(report, csv_dir)
    _echo_report(report)


def entrypoint(argv: list[str] | None = None) -> int:
    """Run the CLI with the documented exit codes (for tests and scripts)."""
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except SubnetHpoError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 2


def _script_main() -> None:  # pragma: no cover - console script shim
    sys.exit(entrypoint())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(entrypoint())
