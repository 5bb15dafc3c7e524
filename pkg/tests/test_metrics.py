"""Tests du score QoE et des métriques de session"""

import random

import pytest

from src.errors import EmptyRecordsError
from src.metrics import SessionMetricsCalculator, qoe
from src.simulator import SegmentRecord


def record(n, level, bitrate, rebuffer=0.0, wait=0.0):
    return SegmentRecord(
        segment=n, level=level, bitrate=bitrate, quality=bitrate, size=2 * bitrate,
        start_time=float(n), download_time=1.0, rebuffer_time=rebuffer, wait_time=wait,
        buffer_before=0.0, buffer_after=2.0, throughput_observed=2 * bitrate,
    )


@pytest.fixture
def records():
    return [record(0, 3, 8.0), record(1, 3, 8.0), record(2, 4, 16.0, rebuffer=1.0)]


def test_qoe_example(records):
    report = qoe(records)
    assert report.total_quality == 32
    assert report.total_rebuffer == 1
    assert report.total_smoothness == 8
    assert report.qoe_total == pytest.approx(-16)
    assert report.qoe_per_chunk == pytest.approx(-16 / 3)
    assert report.num_chunks == 3


def test_constant_level_has_no_smoothness_penalty():
    report = qoe([record(n, 2, 5.0) for n in range(4)])
    assert report.total_smoothness == 0
    assert report.qoe_per_chunk == 5


def test_single_chunk():
    report = qoe([record(0, 5, 40.0, rebuffer=0.5)])
    assert report.qoe_total == pytest.approx(40 - 20)


def test_seeded_first_smoothness_term(records):
    assert qoe(records, last_level_seed=16.0).total_smoothness == 16


def test_rebuffer_weight(records):
    assert qoe(records, w=0).qoe_total == 24
    assert qoe(records, w=0).w == 0


def test_qoe_matches_independent_scorer():
    rnd = random.Random(13)
    bitrates = (1.0, 2.5, 5.0, 8.0, 16.0, 40.0)
    for _ in range(100):
        levels = [rnd.randrange(6) for _ in range(rnd.randint(1, 30))]
        stalls = [rnd.choice([0.0, rnd.uniform(0, 3)]) for _ in levels]
        seed = rnd.choice([None, rnd.choice(bitrates)])
        w = rnd.uniform(0, 100)
        records = [record(n, l, bitrates[l], rebuffer=s) for n, (l, s) in enumerate(zip(levels, stalls))]

        expected, previous = 0.0, seed
        for l, s in zip(levels, stalls):
            expected += bitrates[l] - w * s
            if previous is not None:
                expected -= abs(bitrates[l] - previous)
            previous = bitrates[l]

        report = qoe(records, last_level_seed=seed, w=w)
        assert report.qoe_total == pytest.approx(expected, rel=1e-9, abs=1e-9)
        assert report.qoe_per_chunk == pytest.approx(expected / len(levels), rel=1e-9, abs=1e-9)


def test_empty_records():
    with pytest.raises(EmptyRecordsError):
        qoe([])
    with pytest.raises(EmptyRecordsError):
        SessionMetricsCalculator([])


def test_calculate_all_metrics():
    records = [
        record(0, 0, 1.0, rebuffer=0.4),
        record(1, 2, 5.0, wait=0.5),
        record(2, 2, 5.0, rebuffer=0.3),
        record(3, 1, 2.5, rebuffer=0.2, wait=1.0),
    ]
    metrics = SessionMetricsCalculator(records).calculate_all_metrics()
    assert metrics["avg_bitrate_mbps"] == pytest.approx(13.5 / 4)
    assert metrics["num_switches"] == 2
    assert metrics["startup_delay_s"] == pytest.approx(0.4)
    assert metrics["total_rebuffer_s"] == pytest.approx(0.9)
    assert metrics["rebuffer_events"] == 2
    assert metrics["total_wait_s"] == pytest.approx(1.5)
