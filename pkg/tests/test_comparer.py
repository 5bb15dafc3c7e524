"""Tests du comparateur d'algorithmes"""

import pytest

from src.comparer import AlgorithmComparer


def rows_from(table, scenario=None):
    rows = []
    for trace, scores in table.items():
        for algo, value in scores.items():
            rows.append({"trace": trace, "scenario": scenario, "algorithm": algo,
                         "qoe_per_chunk": value, "status": "ok"})
    return rows


def test_strict_wins_and_ties():
    rows = rows_from({
        "t1": {"qudash": 10.0, "mpc": 8.0},
        "t2": {"qudash": 7.0, "mpc": 9.0},
        "t3": {"qudash": 5.0, "mpc": 5.0},
    })
    summary = AlgorithmComparer(rows).compare()
    assert summary["num_traces"] == 3
    assert summary["tied_traces"] == 1
    assert summary["algorithms"]["qudash"]["wins"] == 1
    assert summary["algorithms"]["mpc"]["wins"] == 1
    assert summary["algorithms"]["qudash"]["ties"] == 1
    assert summary["algorithms"]["qudash"]["win_fraction"] == pytest.approx(1 / 3)


def test_identical_algorithms_never_win():
    rows = rows_from({f"t{i}": {"a": float(i), "b": float(i)} for i in range(4)})
    summary = AlgorithmComparer(rows).compare()
    assert all(entry["wins"] == 0 for entry in summary["algorithms"].values())
    assert summary["tied_traces"] == 4


def test_ranking_gap_and_ratios():
    rows = rows_from({
        "t1": {"rb": 4.0, "bb": 2.0, "mpc": 3.0},
        "t2": {"rb": 6.0, "bb": 2.0, "mpc": 5.0},
    })
    summary = AlgorithmComparer(rows).compare()
    assert summary["ranking"]["order"] == ["rb", "mpc", "bb"]
    assert summary["ranking"]["gap"] == pytest.approx(0.25)
    assert summary["ratios"]["rb"]["bb"] == pytest.approx(2.5)
    assert "rb" not in summary["ratios"]["rb"]


def test_failed_rows_are_ignored():
    rows = rows_from({"t1": {"a": 1.0, "b": 2.0}})
    rows.append({"trace": "t2", "algorithm": "a", "qoe_per_chunk": None, "status": "failed"})
    summary = AlgorithmComparer(rows).compare()
    assert summary["num_traces"] == 1
    assert summary["algorithms"]["b"]["wins"] == 1


def test_per_scenario_groups():
    rows = rows_from({"s1": {"a": 1.0, "b": 0.0}}, scenario="static")
    rows += rows_from({"b1": {"a": 0.0, "b": 1.0}, "b2": {"a": 0.0, "b": 3.0}}, scenario="bus")
    summary = AlgorithmComparer(rows).compare()
    assert set(summary["per_scenario"]) == {"static", "bus"}
    assert summary["per_scenario"]["bus"]["algorithms"]["b"]["wins"] == 2
    assert summary["per_scenario"]["static"]["algorithms"]["a"]["wins"] == 1


def test_cdf_points():
    rows = rows_from({"t1": {"a": 3.0}, "t2": {"a": 1.0}, "t3": {"a": 2.0}})
    points = AlgorithmComparer(rows).cdf_points()
    assert [p["qoe_per_chunk"] for p in points] == [1.0, 2.0, 3.0]
    assert points[-1]["cdf"] == 1.0
    assert points[0]["rank"] == 1


def test_highlights_mention_leader_and_ties():
    rows = rows_from({"t1": {"a": 2.0, "b": 1.0}, "t2": {"a": 1.0, "b": 1.0}})
    highlights = AlgorithmComparer(rows).get_highlights()
    types = [h["type"] for h in highlights]
    assert types[0] == "success"
    assert "warning" in types
