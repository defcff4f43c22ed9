"""Tests for ablation module."""

import numpy as np
import pytest

from temporal_spotting.ablation import (
    AblationReport,
    VariantResult,
    ambiguous_map,
    format_ablation,
    run_ablation,
    variant_section,
)
from temporal_spotting.config import ModelSection, RunConfig
from temporal_spotting.data.synthetic import SyntheticSpec, gen_synthetic_dataset
from temporal_spotting.evaluation import EvalReport


def _small_config(**train):
    return RunConfig.from_dict(
        {
            "seed": 1,
            "threads": 1,
            "model": {"clusters": 4, "reduced_dim": 4},
            "train": {"max_epochs": 2, **train},
        }
    )


class TestAmbiguousMap:
    """Tests for ambiguous_map function."""

    def test_mean_over_pair_classes(self):
        """Test only the classes named in a pair are averaged."""
        ap = np.array([[1.0, 1.0], [0.5, 0.5], [0.0, 0.0]])
        report = EvalReport(["goal", "penalty", "shot"], (5.0, 10.0), ap, ap.mean(axis=0), float(ap.mean()))
        assert ambiguous_map(report, [("goal", "penalty")]) == 0.75

    def test_no_pairs(self):
        """Test a dataset without ambiguous pairs."""
        ap = np.ones((1, 1))
        report = EvalReport(["goal"], (5.0,), ap, ap[0], 1.0)
        assert ambiguous_map(report, []) is None


class TestVariantSection:
    """Tests for variant_section function."""

    def test_pool_label(self):
        """Test a plain pooling label sets kind and temporal awareness."""
        section = variant_section("max++", ModelSection())
        assert (section.kind, section.temporally_aware, section.use_projection) == ("max", True, True)

    def test_without_projection(self):
        """Test the /noproj suffix drops the projection."""
        section = variant_section("netvlad++/noproj", ModelSection())
        assert section.kind == "netvlad"
        assert section.use_projection is False

    def test_unknown_suffix(self):
        """Test a suffix other than /noproj."""
        with pytest.raises(ValueError, match="noproj"):
            variant_section("netvlad/pca", ModelSection())


class TestAblationReport:
    """Tests for AblationReport comparisons."""

    def test_plusplus_paired_with_plain(self):
        """Test each ++ variant is compared with its plain counterpart only."""
        report = AblationReport(
            [
                VariantResult("max++", 10, [0.7, 0.8]),
                VariantResult("max", 5, [0.6]),
                VariantResult("avg++", 10, [0.4]),
            ],
            {},
            [],
        )
        comparisons = report.comparisons()
        assert len(comparisons) == 1
        assert comparisons[0]["variant"] == "max++"
        assert comparisons[0]["passed"]


class TestRunAblation:
    """Tests for run_ablation function."""

    def test_tiny_sweep(self, tiny_dataset):
        """Test the report covers every variant, the NMS sweep and the ambiguous pairs."""
        report = run_ablation(
            tiny_dataset, _small_config(), ("avg++", "avg"), runs=2, nms_windows=(10, 20), progress=False
        )
        assert [v.label for v in report.variants] == ["avg++", "avg"]
        assert all(len(v.average_maps) == 2 for v in report.variants)
        assert set(report.nms_sweep["avg"]) == {10.0, 20.0}
        assert report.ambiguous_pairs == [("goal", "penalty"), ("corner", "throw-in")]
        assert report.result("avg++").head_params > report.result("avg").head_params
        payload = report.to_dict()
        assert payload["comparisons"][0]["baseline"] == "avg"
        assert "NMS window" in format_ablation(report)

    def test_threshold_arm(self, tiny_dataset):
        """Test every variant is also scored with spots below 0.5 dropped."""
        report = run_ablation(tiny_dataset, _small_config(), ("avg",), nms_windows=(10,), progress=False)
        assert set(report.thresholded) == {"avg"}
        assert 0.0 <= report.thresholded["avg"] <= 1.0
        assert report.to_dict()["thresholded"]["threshold"] == 0.5
        assert "thr 0.5" in format_ablation(report)

    def test_no_projection_arm(self, tiny_dataset):
        """Test a /noproj variant pools the raw features."""
        report = run_ablation(
            tiny_dataset, _small_config(), ("netvlad++", "netvlad++/noproj"), nms_windows=(10,), progress=False
        )
        with_projection = report.result("netvlad++").head_params
        assert report.result("netvlad++/noproj").head_params != with_projection
        assert [c["variant"] for c in report.comparisons()] == []

    def test_window_and_cluster_sweeps(self, tiny_dataset):
        """Test the sweeps retrain the sweep variant once per value."""
        report = run_ablation(
            tiny_dataset,
            _small_config(),
            ("netvlad++", "avg"),
            nms_windows=(10,),
            progress=False,
            windows=(10.0, 20.0),
            cluster_counts=(2, 6),
        )
        assert report.sweep_variant == "netvlad++"
        assert list(report.window_sweep) == [10.0, 20.0]
        assert list(report.cluster_sweep) == [2, 6]
        assert all(0.0 <= v <= 1.0 for v in [*report.window_sweep.values(), *report.cluster_sweep.values()])
        payload = report.to_dict()
        assert set(payload["window_sweep"]) == {"10", "20"}
        assert set(payload["cluster_sweep"]) == {"2", "6"}
        text = format_ablation(report)
        assert "window T" in text
        assert "K=6" in text

    def test_cluster_sweep_needs_clusters(self, tiny_dataset):
        """Test a cluster sweep over a max/avg variant."""
        with pytest.raises(ValueError, match="cluster"):
            run_ablation(tiny_dataset, _small_config(), ("avg",), progress=False, cluster_counts=(4,))

    def test_runs_must_be_positive(self, tiny_dataset):
        """Test zero runs."""
        with pytest.raises(ValueError):
            run_ablation(tiny_dataset, _small_config(), ("avg",), runs=0, progress=False)


@pytest.mark.slow
class TestTemporalAwarenessOnSyntheticData:
    """Full-size synthetic sweep; classes in a pair differ only by temporal order."""

    @pytest.fixture(scope="class")
    def report(self, tmp_path_factory):
        root = gen_synthetic_dataset(SyntheticSpec(seed=0, test_games=16), tmp_path_factory.mktemp("synthetic"))
        config = RunConfig.from_dict(
            {
                "seed": 0,
                "threads": 1,
                "model": {"clusters": 8, "reduced_dim": 32},
                "train": {"initial_lr": 5e-3, "max_epochs": 400},
            }
        )
        variants = ("netvlad++", "netvlad", "max++", "max", "avg++", "avg")
        return run_ablation(root, config, variants, runs=1, nms_windows=(30.0,), progress=False)

    def test_netvlad_plusplus_separates_ambiguous_pairs(self, report):
        """Test NetVLAD++ resolves the swapped-pattern classes and NetVLAD does not."""
        assert report.result("netvlad++").ambiguous_mean >= 0.85
        assert report.result("netvlad").ambiguous_mean <= 0.60

    @pytest.mark.parametrize("label", ["max", "avg"])
    def test_temporal_split_helps_simple_pooling(self, report, label):
        """Test MaxPool++ and AvgPool++ beat their plain versions."""
        assert report.result(f"{label}++").mean > report.result(label).mean
