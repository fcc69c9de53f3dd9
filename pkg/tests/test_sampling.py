import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from acml.report import Report, TaskEntry, report_json, summary_table
from acml.sampling import SampleSpec, merge_stats, random_vectors, residual_stats, sample_points, sweep


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 50))
def test_points_are_deterministic_and_inside_the_box(seed, count):
    spec = SampleSpec(box=[(-1.0, 1.0), (0.0, 0.5), (2.0, 3.0)], count=count, seed=seed)
    points = sample_points(spec)
    assert points.shape == (count, 3)
    np.testing.assert_array_equal(points, sample_points(spec))
    assert np.all(points >= [-1.0, 0.0, 2.0]) and np.all(points <= [1.0, 0.5, 3.0])


def test_different_seeds_differ():
    a = sample_points(SampleSpec.cube(3, seed=1))
    b = sample_points(SampleSpec.cube(3, seed=2))
    assert not np.array_equal(a, b)


def test_vectors_use_their_own_stream():
    spec = SampleSpec.cube(3, seed=5)
    vectors = random_vectors(spec, 4, 6)
    assert vectors.shape == (4, 6)
    np.testing.assert_array_equal(vectors, random_vectors(spec, 4, 6))
    assert not np.array_equal(vectors, random_vectors(spec, 4, 6, stream=2))


def test_empty_interval_is_rejected():
    with pytest.raises(ValidationError):
        SampleSpec(box=[(1.0, 0.0)])
    with pytest.raises(ValidationError):
        SampleSpec(box=[])


@pytest.mark.parametrize('workers, chunk', [(1, 7), (3, 7), (4, 64), (2, 1)])
def test_sweep_matches_direct_evaluation(workers, chunk):
    points = sample_points(SampleSpec.cube(2, count=50, seed=9))

    def fn(p):
        return np.sin(p[:, 0]) * p[:, 1]

    np.testing.assert_allclose(sweep(fn, points, workers, chunk), fn(points), rtol=1e-14)


def test_residual_stats_witness():
    points = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    values = np.zeros((3, 2, 2))
    values[1, 1, 0] = -3.0
    values[2, 0, 1] = 1.0
    stats = residual_stats(values, points)
    assert stats.max_residual == 3.0
    assert stats.mean_residual == pytest.approx(4.0 / 3.0)
    assert stats.witness == [1.0, 1.0]
    assert stats.component == [1, 0]
    assert not stats.passes(1.0)


def test_residual_stats_of_nothing():
    stats = residual_stats(np.zeros((0, 3)), np.zeros((0, 3)))
    assert stats.max_residual == 0.0
    assert stats.witness is None


def test_merge_stats():
    points = np.array([[0.0], [1.0]])
    small = residual_stats(np.array([0.1, 0.2]), points)
    large = residual_stats(np.array([0.0, 5.0]), points)
    merged = merge_stats([small, large])
    assert merged.max_residual == 5.0
    assert merged.witness == [1.0]
    assert merged.mean_residual == pytest.approx((0.15 + 2.5) / 2)


def test_report_exit_code_and_rendering():
    ok = TaskEntry(name='validate', verdict='pass', max_residual=0.0, tolerance=1e-10)
    bad = TaskEntry(name='q4', verdict='fail', max_residual=0.5, tolerance=1e-8, notes=['off'])
    report = Report(scenario={'name': 'demo'}, version='0.1.0', tasks=[ok])
    assert report.exit_code == 0
    assert report.model_copy(update={'tasks': [ok, bad]}).exit_code == 1
    assert report_json(report) == report_json(Report(**report.model_dump()))
    table = summary_table(report.model_copy(update={'tasks': [ok, bad], 'classification': {'normal': True}}))
    assert 'scenario demo' in table
    assert 'normal=True' in table


def test_report_json_writes_floats_with_seventeen_digits():
    entry = TaskEntry(name='q4', verdict='info', max_residual=0.1, tolerance=1e-8, witness=[0.5, -2.0])
    report = Report(scenario={'name': 'demo', 'box': [(-1.0, 1.0)]}, version='0.1.0', tasks=[entry])
    text = report_json(report)
    assert '"max_residual": 0.10000000000000001' in text
    assert text.endswith('}\n')
    data = json.loads(text)
    assert data['tasks'][0]['max_residual'] == 0.1
    assert data['tasks'][0]['witness'] == [0.5, -2.0]
    assert data['scenario']['box'] == [[-1.0, 1.0]]
    assert data['elapsed_ms'] is None
    assert data['tasks'][0]['notes'] == []


def test_seed_42_points_match_golden_file():
    with open(os.path.join(os.path.dirname(__file__), 'data', 'sample_seed42.json'), encoding='utf8') as fh:
        golden = json.load(fh)
    spec = SampleSpec(box=[tuple(b) for b in golden['box']], count=golden['count'], seed=golden['seed'])
    assert spec == SampleSpec.cube(3, count=3, seed=42)
    np.testing.assert_allclose(sample_points(spec), golden['points'], rtol=0, atol=1e-12)
