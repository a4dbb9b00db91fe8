import pytest

from voiceind.audit import bench_perturbation, format_bench_table, scaling_ratios
from voiceind.audit.bench import BenchRow


def test_rows_and_cap():
    rows = bench_perturbation([5, 20], dim=8, model_cap=10)
    assert [r.n for r in rows] == [5, 20]
    assert [r.model_records for r in rows] == [5, 10]
    assert all(r.feature_online_s > 0 and r.model_online_s > 0 for r in rows)


def test_rejects_unsorted_sizes():
    with pytest.raises(ValueError):
        bench_perturbation([10, 5])
    assert bench_perturbation([]) == []


def test_table_and_ratios():
    rows = [BenchRow(10, 0.5, 0.1, 10), BenchRow(100, 50.0, 1.0, 100)]
    text = format_bench_table(rows)
    assert "n = 100" in text and "50.0000s" in text and len(text.splitlines()) == 3
    assert scaling_ratios(rows) == [(10, 100, 100.0, 10.0)]
