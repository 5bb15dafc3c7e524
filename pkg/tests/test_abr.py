"""Tests des algorithmes de référence RB, BB, MPC et du prédicteur"""

import itertools
import logging
import random

import pytest

from src.abr import (
    BitrateLadder,
    BufferBasedAbr,
    HarmonicMeanPredictor,
    Manifest,
    MpcAbr,
    RateBasedAbr,
    ReplayAbr,
    bb_decide,
    bb_rate_map,
    create_algorithm,
    harmonic_mean_predict,
    mpc_decide,
    mpc_plan,
    rb_decide,
)
from src.errors import ConfigError
from tests.conftest import context


# --- échelle et manifeste ---

def test_default_ladder(ladder):
    assert ladder.bitrates == (1.0, 2.5, 5.0, 8.0, 16.0, 40.0)
    assert ladder.labels[0] == "360p" and ladder.labels[-1] == "2160p"
    assert ladder.segment_duration == 2.0
    assert ladder.qualities == ladder.bitrates


@pytest.mark.parametrize("bitrates", [(), (1.0, 1.0), (2.0, 1.0), (0.0, 1.0)])
def test_invalid_ladder(bitrates):
    with pytest.raises(ConfigError):
        BitrateLadder(bitrates, ())


def test_cbr_sizes(ladder):
    manifest = Manifest.cbr(ladder, 3)
    assert manifest.num_segments == 3
    assert manifest.size(2, 3) == 16.0


def test_vbr_sizes_are_seeded_and_increasing(ladder):
    first = Manifest.vbr(ladder, 20, jitter=0.2, seed=4)
    second = Manifest.vbr(ladder, 20, jitter=0.2, seed=4)
    assert (first.sizes == second.sizes).all()
    for n in range(20):
        sizes = [first.size(n, l) for l in range(ladder.num_levels)]
        assert sizes == sorted(sizes) and len(set(sizes)) == len(sizes)


# --- prédicteur ---

def test_harmonic_mean_examples():
    assert harmonic_mean_predict([5, 5, 5, 5, 5], 5) == pytest.approx(5)
    assert harmonic_mean_predict([10, 20], 5) == pytest.approx(40 / 3)
    assert harmonic_mean_predict([], 5) is None


def test_harmonic_mean_uses_last_window():
    assert harmonic_mean_predict([1, 1, 1, 10, 10], 2) == pytest.approx(10)


def test_non_positive_samples_are_excluded(caplog):
    predictor = HarmonicMeanPredictor(5)
    with caplog.at_level(logging.WARNING):
        assert predictor.predict([0.0, -2.0, 4.0]) == pytest.approx(4)
    assert predictor.excluded == 2
    assert "exclu" in caplog.text
    assert predictor.predict([0.0]) is None


@pytest.mark.parametrize("cls", [RateBasedAbr, MpcAbr])
def test_excluded_samples_are_counted_across_decisions(manifest, cls):
    algorithm = cls()
    first = algorithm.decide(context(buffer=10, history=[0.0, 6.0, 6.0]), manifest)
    second = algorithm.decide(context(buffer=10, history=[0.0, 6.0, -1.0, 6.0]), manifest)
    third = algorithm.decide(context(buffer=10, history=[6.0, 6.0]), manifest)
    assert [first.excluded_samples, second.excluded_samples, third.excluded_samples] == [1, 2, 0]
    assert algorithm.predictor.excluded == 3
    assert first.to_dict()["excluded_samples"] == 1


def test_window_must_be_positive():
    with pytest.raises(ConfigError):
        harmonic_mean_predict([1.0], 0)


# --- RB ---

@pytest.mark.parametrize("history, expected", [([9.0] * 5, 3), ([0.5] * 5, 0), ([100.0] * 5, 5), ([], 0)])
def test_rb_decide(manifest, history, expected):
    assert rb_decide(context(history=history, buffer=10), manifest) == expected


# --- BB ---

@pytest.mark.parametrize("buffer, expected", [(3, 0), (5, 0), (60, 5), (32.5, 4), (80, 5)])
def test_bb_decide(manifest, buffer, expected):
    assert bb_decide(context(buffer=buffer), manifest) == expected


def test_bb_rate_map_linear(ladder):
    assert bb_rate_map(32.5, ladder, 5, 55) == pytest.approx(20.5)


# --- MPC ---

def test_mpc_high_throughput_picks_top(manifest):
    ctx = context(n=0, buffer=30, last_level=5, history=[100.0] * 5, remaining=10)
    plan, _, _ = mpc_plan(ctx, manifest)
    assert plan == [5] * 5


def test_mpc_low_throughput_picks_bottom(manifest):
    ctx = context(buffer=4, last_level=0, history=[0.9] * 5)
    assert mpc_decide(ctx, manifest) == 0


def test_mpc_horizon_truncated(manifest):
    ctx = context(n=8, buffer=10, last_level=2, history=[10.0] * 5, remaining=2)
    plan, _, _ = mpc_plan(ctx, manifest)
    assert len(plan) == 2


def test_mpc_without_history_picks_lowest(manifest):
    assert mpc_decide(context(), manifest) == 0


def test_mpc_without_rebuffer_weight_maximises_quality(small_ladder):
    """Avec w = 0 et un seul segment, seule la qualité compte"""
    manifest = Manifest.cbr(small_ladder, 1)
    ctx = context(buffer=10, history=[1.0], remaining=1)
    assert mpc_decide(ctx, manifest, horizon=1, qoe_w=0.0) == 2


def _oracle_mpc(ctx, manifest, horizon, w, max_buffer):
    """Évaluation directe de chaque plan, sans vectorisation"""
    ladder = manifest.ladder
    history = [s for s in ctx.throughput_history if s > 0][-5:]
    c_pred = len(history) / sum(1 / s for s in history)
    h = min(horizon, ctx.remaining_segments)
    best_score, best_first = None, None
    for plan in itertools.product(range(ladder.num_levels), repeat=h):
        buffer, score, previous = ctx.buffer, 0.0, ctx.last_level
        for i, level in enumerate(plan):
            dt = manifest.size(ctx.next_segment_index + i, level) / c_pred
            score -= w * max(0.0, dt - buffer)
            buffer = min(max(buffer - dt, 0.0) + ladder.segment_duration, max_buffer)
            score += ladder.quality(level)
            if previous is not None:
                score -= abs(ladder.quality(level) - ladder.quality(previous))
            previous = level
        if best_score is None or score > best_score + 1e-9 or (abs(score - best_score) <= 1e-9 and plan[0] > best_first):
            best_score, best_first = score, plan[0]
    return best_first


def test_mpc_matches_exhaustive_scorer(small_ladder):
    rnd = random.Random(11)
    manifest = Manifest.vbr(small_ladder, 6, jitter=0.3, seed=2)
    for _ in range(100):
        ctx = context(
            n=rnd.randint(0, 4),
            buffer=rnd.uniform(0, 12),
            last_level=rnd.choice([None, 0, 1, 2]),
            history=[rnd.uniform(0.3, 8) for _ in range(rnd.randint(1, 6))],
            remaining=2,
        )
        assert mpc_decide(ctx, manifest, horizon=2) == _oracle_mpc(ctx, manifest, 2, 40.0, 60.0)


def test_baselines_are_pure(manifest):
    ctx = context(n=3, buffer=12.5, last_level=2, history=[3.0, 7.0, 6.5], remaining=7)
    for algorithm in (RateBasedAbr(), BufferBasedAbr(), MpcAbr()):
        first = algorithm.decide(ctx, manifest)
        second = algorithm.decide(ctx, manifest)
        assert first.level == second.level


# --- interface ---

def test_decision_report_hides_timing(manifest):
    decision = MpcAbr().decide(context(buffer=5, history=[10.0] * 3), manifest)
    assert "wall_time" not in decision.to_dict()
    assert "wall_time" in decision.to_dict(include_timing=True)
    assert decision.plan and decision.plan[0] == decision.level


def test_replay_returns_recorded_levels(manifest):
    replay = ReplayAbr([4, 1, 3])
    assert [replay.decide(context(n=n), manifest).level for n in range(3)] == [4, 1, 3]


@pytest.mark.parametrize("kind, cls", [("rb", RateBasedAbr), ("bb", BufferBasedAbr), ("mpc", MpcAbr)])
def test_factory(kind, cls):
    algorithm = create_algorithm(kind, "x")
    assert isinstance(algorithm, cls)
    assert algorithm.name == "x"


def test_factory_qudash():
    algorithm = create_algorithm("qudash", params={"horizon": 2})
    assert algorithm.kind == "qudash"
    assert algorithm.params.horizon == 2


def test_factory_rejects_unknown():
    with pytest.raises(ConfigError):
        create_algorithm("pensieve")
    with pytest.raises(ConfigError):
        create_algorithm("rb", params={"windw": 3})
