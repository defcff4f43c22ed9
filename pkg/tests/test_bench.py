"""Tests for bench module."""

import pytest

from temporal_spotting.bench import BenchRecord, bench_pool


class TestBenchPool:
    """Tests for bench_pool function."""

    def test_small_run(self):
        """Test a tiny benchmark fills every field."""
        record = bench_pool(frames=4, clusters=3, dim=5, batch=6, micro_batch=2, repeats=1)
        assert record.naive_s > 0
        assert record.efficient_s > 0
        assert record.naive_peak_bytes > 0
        assert set(record.to_dict()) >= {"speedup", "memory_ratio", "naive_s", "efficient_s"}

    def test_rejects_non_positive_sizes(self):
        """Test a zero batch."""
        with pytest.raises(ValueError):
            bench_pool(batch=0)

    def test_ratios(self):
        """Test speedup and memory ratio arithmetic."""
        record = BenchRecord(30, 64, 512, 256, 16, 1, 2.0, 0.5, 800, 200)
        assert record.speedup == 4.0
        assert record.memory_ratio == 4.0

    @pytest.mark.slow
    def test_efficient_form_is_faster_at_full_scale(self):
        """Test at N=30, K=64, D=512, batch 256: at least 2x faster and 2x less peak memory."""
        record = bench_pool(frames=30, clusters=64, dim=512, batch=256, repeats=2)
        assert record.speedup >= 2.0
        assert record.memory_ratio >= 2.0
