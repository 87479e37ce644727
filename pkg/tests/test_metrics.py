"""Tests for regret curves and speedup reports."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subnet_hpo.errors import EmptyHistory, LevelNotReached, UnpairedRuns
from subnet_hpo.metrics import (
    MAXIMIZE,
    MINIMIZE,
    curve_from_dict,
    curve_to_csv,
    curve_to_dict,
    regret_curve,
    report_from_dict,
    report_to_dict,
    speedup_at,
    summarize,
)


def curve(points, orientation=MINIMIZE, reference=None):
    return regret_curve(points, orientation, reference)


class TestRegretCurve:
    def test_single_trial(self):
        c = curve([(1.0, 3.0)])
        assert len(c.steps) == 1
        assert c.steps[0].regret == 0.0

    def test_hand_example(self):
        c = curve([(1, 5.0), (2, 3.0), (3, 4.0), (4, 2.0)])
        assert [s.regret for s in c.steps] == [3.0, 1.0, 1.0, 0.0]
        assert [s.best for s in c.steps] == [5.0, 3.0, 3.0, 2.0]

    def test_maximize_orientation(self):
        c = curve([(1, 0.6), (2, 0.9), (3, 0.8)], orientation=MAXIMIZE)
        assert [s.regret for s in c.steps] == pytest.approx([0.3, 0.0, 0.0])

    def test_empty(self):
        with pytest.raises(EmptyHistory):
            curve([])

    def test_attained_levels(self):
        c = curve([(1, 5.0), (2, 3.0), (3, 4.0), (4, 2.0)])
        assert c.attained_levels() == [3.0, 1.0, 0.0]

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(0.0, 100.0, allow_nan=False), min_size=1, max_size=50),
        st.sampled_from([MINIMIZE, MAXIMIZE]),
    )
    def test_monotone_regret(self, losses, orientation):
        points = [(float(i + 1), l) for i, l in enumerate(losses)]
        c = curve(points, orientation=orientation)
        regrets = [s.regret for s in c.steps]
        assert all(r1 >= r2 for r1, r2 in zip(regrets, regrets[1:]))
        assert c.final_regret == 0.0
        assert all(r >= 0 for r in regrets)


class TestSpeedupAt:
    def test_final_crossing_ratio(self):
        baseline = curve([(10_000, 5.0), (86_400, 0.0)])
        method = curve([(19_000, 0.0)])
        assert speedup_at(baseline, method, 0.0) == pytest.approx(4.547, abs=0.005)

    def test_identity(self):
        c = curve([(1, 5.0), (2, 3.0), (4, 2.0)])
        for level in c.attained_levels():
            assert speedup_at(c, c, level) == 1.0

    def test_hand_walk(self):
        baseline = curve([(10, 1.0), (20, 0.0)])
        method = curve([(5, 1.0), (8, 0.0)])
        assert speedup_at(baseline, method, 0.0) == pytest.approx(2.5)

    def test_level_not_reached(self):
        baseline = curve([(10, 1.0), (20, 0.0)])
        stuck = curve([(5, 1.0), (8, 0.5)], reference=0.0)
        with pytest.raises(LevelNotReached):
            speedup_at(baseline, stuck, 0.0)


class TestSummarize:
    def test_self_comparison(self):
        curves = [curve([(1, 4.0), (2, 2.0), (3, 1.0)]) for _ in range(3)]
        report = summarize(curves, curves)
        assert report.mean_speedup == 1.0
        assert report.max_speedup == 1.0
        assert report.final_speedup == 1.0
        assert report.final_gain == 0.0

    def test_final_is_mean_of_pair_finals(self):
        b1 = curve([(2, 1.0), (4, 0.0)])
        m1 = curve([(1, 1.0), (2, 0.0)])
        b2 = curve([(4, 1.0), (8, 0.0)])
        m2 = curve([(1, 1.0), (2, 0.0)])
        report = summarize([b1, b2], [m1, m2])
        assert [p.final_speedup for p in report.pairs] == [2.0, 4.0]
        assert report.final_speedup == 3.0
        assert report.mean_speedup == 3.0
        assert report.max_speedup == 4.0

    def test_level_walk_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n_b, n_m = rng.integers(2, 12, size=2)
            b_pts = [
                (float(t), float(l))
                for t, l in zip(np.cumsum(rng.uniform(0.5, 2, n_b)), rng.uniform(0, 5, n_b))
            ]
            m_pts = [
                (float(t), float(l))
                for t, l in zip(np.cumsum(rng.uniform(0.5, 2, n_m)), rng.uniform(0, 5, n_m))
            ]
            b_curve, m_curve = curve(b_pts), curve(m_pts)
            report = summarize([b_curve], [m_curve])

            # independent level walk on re-referenced step functions
            ref = min(min(l for _, l in b_pts), min(l for _, l in m_pts))
            def best_by(points):
                best, out = float("inf"), []
                for t, l in points:
                    best = min(best, l)
                    out.append((t, best - ref))
                return out

            b_steps, m_steps = best_by(b_pts), best_by(m_pts)
            levels = []
            for _, r in b_steps:
                if not levels or r < levels[-1]:
                    levels.append(r)
            expected = []
            for g in levels:
                tb = next((t for t, r in b_steps if r <= g), None)
                tm = next((t for t, r in m_steps if r <= g), None)
                if tb is not None and tm is not None:
                    expected.append(tb / tm)
            got = [s for p in report.pairs for _, s in p.level_speedups]
            assert len(got) == len(expected)
            for a, b in zip(got, expected):
                assert a == pytest.approx(b, abs=1e-9)

    def test_unpaired(self):
        c = curve([(1, 1.0)])
        with pytest.raises(UnpairedRuns):
            summarize([c, c], [c])
        with pytest.raises(UnpairedRuns):
            summarize([], [])

    def test_censored_pair(self):
        baseline = curve([(2, 1.0), (4, 0.0)])
        worse_method = curve([(1, 2.0), (3, 1.5)])
        report = summarize([baseline], [worse_method])
        assert report.pairs[0].final_censored
        assert report.final_gain == pytest.approx(-1.5)

    def test_scale_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(2, 10))
            times = np.cumsum(rng.uniform(0.5, 2, n))
            losses = rng.uniform(0, 5, n)
            m_losses = np.concatenate([losses[1:], [losses.min() * 0.9]])
            b1 = curve(list(zip(times, losses)))
            m1 = curve(list(zip(times * 0.7, m_losses)))
            k = float(rng.uniform(0.1, 10))
            b2 = curve(list(zip(times * k, losses)))
            m2 = curve(list(zip(times * 0.7 * k, m_losses)))
            r1 = summarize([b1], [m1])
            r2 = summarize([b2], [m2])
            assert r1.mean_speedup == pytest.approx(r2.mean_speedup, rel=1e-9)
            assert r1.final_speedup == pytest.approx(r2.final_speedup, rel=1e-9)

    def test_conservative_not_above_aggressive(self):
        rng = np.random.default_rng(13)
        checked = 0
        for _ in range(100):
            n = int(rng.integers(3, 10))
            b_pts = list(
                zip(np.cumsum(rng.uniform(0.5, 2, n)), rng.uniform(1, 5, n))
            )
            m_pts = [(t * 0.5, l * 0.9) for t, l in b_pts]
            b_curve = curve(b_pts, reference=0.0)
            m_curve = curve(m_pts, reference=0.0)
            for level in b_curve.attained_levels():
                if (
                    b_curve.first_crossing(level, strict=True) is None
                    or m_curve.first_crossing(level) is None
                ):
                    continue
                cons = speedup_at(b_curve, m_curve, level)
                aggr = speedup_at(b_curve, m_curve, level, aggressive=True)
                assert cons <= aggr + 1e-12
                checked += 1
        assert checked > 50


class TestSerialization:
    def test_curve_round_trip(self):
        c = curve([(1, 5.0), (2, 3.0), (4, 2.0)])
        assert curve_from_dict(curve_to_dict(c)) == c

    def test_report_round_trip(self):
        b = curve([(2, 1.0), (4, 0.0)])
        m = curve([(1, 1.0), (2, 0.0)])
        report = summarize([b], [m], labels=["seed1"])
        again = report_from_dict(report_to_dict(report))
        assert again == report

    def test_csv(self):
        c = curve([(1, 5.0), (2, 3.0)])
        text = curve_to_csv(c)
        lines = text.strip().split("\n")
        assert lines[0] == "time,best,regret"
        assert len(lines) == 3
        assert lines[1].split(",") == ["1.0", "5.0", "2.0"]
