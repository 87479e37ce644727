"""Regret curves, speedup statistics, and cross-method comparison reports.

Regret at time t is the gap between the best value found by t and a
reference best (by default the run's own final best, so the final regret
is 0). Cross-method comparison re-references both curves of a pair to the
best value either run achieved, then walks the baseline's attained regret
levels: the speedup at level G is the baseline's first crossing time of G
divided by the method's. The conservative rule uses plain crossings
(regret <= G) on both sides; the aggressive variant requires the baseline
to get strictly below G, crediting time the baseline sat at that level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyHistory, LevelNotReached, UnpairedRuns
from .sched import History

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

CONSERVATIVE = "conservative"
AGGRESSIVE = "aggressive"


@dataclass(frozen=True)
class CurveStep:
    time: float
    best: float
    regret: float


@dataclass(frozen=True)
class RegretCurve:
    """Step function of (time, best-so-far, regret), one step per trial."""

    steps: tuple[CurveStep, ...]
    orientation: str
    reference_best: float

    @property
    def final_best(self) -> float:
        return self.steps[-1].best

    @property
    def final_regret(self) -> float:
        return self.steps[-1].regret

    @property
    def total_time(self) -> float:
        return self.steps[-1].time

    def attained_levels(self) -> list[float]:
        """Distinct regret values in attainment order (nonincreasing)."""
        levels: list[float] = []
        for s in self.steps:
            if not levels or s.regret < levels[-1]:
                levels.append(s.regret)
        return levels

    def first_crossing(self, level: float, strict: bool = False) -> float | None:
        """Earliest time regret drops to (or strictly below) the level."""
        for s in self.steps:
            if s.regret < level or (not strict and s.regret == level):
                return s.time
        return None

    def with_reference(self, reference_best: float) -> "RegretCurve":
        """Recompute regrets against a different reference best."""
        sign = 1.0 if self.orientation == MINIMIZE else -1.0
        steps = tuple(
            CurveStep(s.time, s.best, sign * (s.best - reference_best)) for s in self.steps
        )
        return RegretCurve(steps, self.orientation, reference_best)

    def to_rows(self) -> list[tuple[float, float, float]]:
        return [(s.time, s.best, s.regret) for s in self.steps]


def regret_curve(
    history: History | Sequence[tuple[float, float]],
    orientation: str = MINIMIZE,
    reference_best: float | None = None,
) -> RegretCurve:
    """Build the regret curve of one run.

    Accepts a History or a raw sequence of (cumulative_time, loss) pairs.
    ``reference_best`` defaults to the run's own final best, making the
    final regret exactly zero.
    """
    if isinstance(history, History):
        points = [(r.cumulative_time, r.loss) for r in history]
    else:
        points = [(float(t), float(v)) for t, v in history]
    if not points:
        raise EmptyHistory("a regret curve needs at least one trial")
    if orientation not in (MINIMIZE, MAXIMIZE):
        raise ValueError(f"unknown orientation {orientation!r}")

    better = min if orientation == MINIMIZE else max
    best_values = []
    best = points[0][1]
    for _, value in points:
        best = better(best, value)
        best_values.append(best)
    reference = best_values[-1] if reference_best is None else reference_best
    sign = 1.0 if orientation == MINIMIZE else -1.0
    steps = tuple(
        CurveStep(t, b, sign * (b - reference))
        for (t, _), b in zip(points, best_values)
    )
    return RegretCurve(steps, orientation, reference)


def speedup_at(
    baseline: RegretCurve,
    method: RegretCurve,
    level: float,
    aggressive: bool = False,
) -> float:
    """Baseline-over-method ratio of first crossing times at a regret level.

    Both curves must be referenced against the same best for the ratio to
    mean anything; :func:`summarize` arranges that per pair.
    """
    baseline_time = baseline.first_crossing(level, strict=aggressive)
    if baseline_time is None:
        raise LevelNotReached(f"baseline never reaches regret {level}")
    method_time = method.first_crossing(level)
    if method_time is None:
        raise LevelNotReached(f"method never reaches regret {level}")
    return baseline_time / method_time


@dataclass(frozen=True)
class PairReport:
    """Comparison of one paired (seed/fold) baseline-vs-method run."""

    label: str
    reference_best: float
    baseline_final_best: float
    method_final_best: float
    level_speedups: tuple[tuple[float, float], ...]
    final_speedup: float
    final_censored: bool  # method never attained the baseline's final level
    baseline_curve: RegretCurve
    method_curve: RegretCurve


@dataclass(frozen=True)
class SpeedupReport:
    """Aggregate speedup/gain statistics over paired runs."""

    mean_speedup: float
    max_speedup: float
    final_speedup: float
    final_gain: float
    rule: str
    orientation: str
    pairs: tuple[PairReport, ...]


def summarize(
    baseline_curves: Sequence[RegretCurve],
    method_curves: Sequence[RegretCurve],
    labels: Sequence[str] | None = None,
    aggressive: bool = False,
) -> SpeedupReport:
    """Pairwise speedup report over per-seed curves.

    Per pair the curves are re-referenced to the best value either run
    achieved, then every baseline-attained regret level is walked. Levels
    the method never attains are skipped; if that includes the baseline's
    final level, the pair's final speedup is censored at the method's total
    elapsed time.
    """
    if len(baseline_curves) != len(method_curves) or not baseline_curves:
        raise UnpairedRuns(
            f"{len(baseline_curves)} baseline vs {len(method_curves)} method runs"
        )
    orientation = baseline_curves[0].orientation
    if labels is None:
        labels = [str(i) for i in range(len(baseline_curves))]

    better = min if orientation == MINIMIZE else max
    sign = 1.0 if orientation == MINIMIZE else -1.0

    pairs: list[PairReport] = []
    all_speedups: list[float] = []
    for label, b_curve, m_curve in zip(labels, baseline_curves, method_curves):
        reference = better(b_curve.final_best, m_curve.final_best)
        b = b_curve.with_reference(reference)
        m = m_curve.with_reference(reference)

        level_speedups = []
        for level in b.attained_levels():
            if m.first_crossing(level) is None:
                continue
            level_speedups.append((level, speedup_at(b, m, level, aggressive=aggressive)))
        all_speedups.extend(s for _, s in level_speedups)

        final_level = b.final_regret
        if m.first_crossing(final_level) is not None:
            final_speedup = speedup_at(b, m, final_level, aggressive=aggressive)
            censored = False
        else:
            baseline_time = b.first_crossing(final_level, strict=aggressive)
            if baseline_time is None:
                baseline_time = b.total_time
            final_speedup = baseline_time / m.total_time
            censored = True

        pairs.append(
            PairReport(
                label=str(label),
                reference_best=reference,
                baseline_final_best=b.final_best,
                method_final_best=m.final_best,
                level_speedups=tuple(level_speedups),
                final_speedup=final_speedup,
                final_censored=censored,
                baseline_curve=b,
                method_curve=m,
            )
        )

    gains = [sign * (p.baseline_final_best - p.method_final_best) for p in pairs]
    finals = [p.final_speedup for p in pairs]
    return SpeedupReport(
        mean_speedup=sum(all_speedups) / len(all_speedups) if all_speedups else float("nan"),
        max_speedup=max(all_speedups) if all_speedups else float("nan"),
        final_speedup=sum(finals) / len(finals),
        final_gain=sum(gains) / len(gains),
        rule=AGGRESSIVE if aggressive else CONSERVATIVE,
        orientation=orientation,
        pairs=tuple(pairs),
    )


# -- serialization ---------------------------------------------------------

def curve_to_dict(curve: RegretCurve) -> dict:
    return {
        "orientation": curve.orientation,
        "reference_best": curve.reference_best,
        "steps": [[s.time, s.best, s.regret] for s in curve.steps],
    }


def curve_from_dict(data: dict) -> RegretCurve:
    steps = tuple(CurveStep(t, b, r) for t, b, r in data["steps"])
    return RegretCurve(steps, data["orientation"], data["reference_best"])


def report_to_dict(report: SpeedupReport) -> dict:
    return {
        "mean_speedup": report.mean_speedup,
        "max_speedup": report.max_speedup,
        "final_speedup": report.final_speedup,
        "final_gain": report.final_gain,
        "rule": report.rule,
        "orientation": report.orientation,
        "pairs": [
            {
                "label": p.label,
                "reference_best": p.reference_best,
                "baseline_final_best": p.baseline_final_best,
                "method_final_best": p.method_final_best,
                "level_speedups": [[l, s] for l, s in p.level_speedups],
                "final_speedup": p.final_speedup,
                "final_censored": p.final_censored,
                "baseline_curve": curve_to_dict(p.baseline_curve),
                "method_curve": curve_to_dict(p.method_curve),
            }
            for p in report.pairs
        ],
    }


def report_from_dict(data: dict) -> SpeedupReport:
    pairs = tuple(
        PairReport(
            label=p["label"],
            reference_best=p["reference_best"],
            baseline_final_best=p["baseline_final_best"],
            method_final_best=p["method_final_best"],
            level_speedups=tuple((l, s) for l, s in p["level_speedups"]),
            final_speedup=p["final_speedup"],
            final_censored=p["final_censored"],
            baseline_curve=curve_from_dict(p["baseline_curve"]),
            method_curve=curve_from_dict(p["method_curve"]),
        )
        for p in data["pairs"]
    )
    return SpeedupReport(
        mean_speedup=data["mean_speedup"],
        max_speedup=data["max_speedup"],
        final_speedup=data["final_speedup"],
        final_gain=data["final_gain"],
        rule=data["rule"],
        orientation=data["orientation"],
        pairs=pairs,
    )


def curve_to_csv(curve: RegretCurve) -> str:
    lines = ["time,best,regret"]
    lines.extend(f"{s.time!r},{s.best!r},{s.regret!r}" for s in curve.steps)
    return "\n".join(lines) + "\n"
