import itertools
import json

import numpy as np
import pytest

from tempoproj.autoencoder import CnnGruConfig, DenseDaeConfig
from tempoproj.errors import ConfigError, ParameterError, ShapeError
from tempoproj.evaluation import (
    BenchmarkResult,
    PipelineConfig,
    benchmark,
    clustering_accuracy,
    hungarian,
    improvement,
    improvement_rows,
    run_pipeline,
    write_benchmark_json,
    write_table_csv,
    write_timing_json,
)
from tempoproj.metrics import SBD

from conftest import univariate_dataset


def hungarian_brute(cost):
    n = len(cost)
    best_cost, best_perm = np.inf, None
    for perm in itertools.permutations(range(n)):
        total = sum(cost[i][perm[i]] for i in range(n))
        if total < best_cost:
            best_cost, best_perm = total, perm
    return best_cost, best_perm


class TestHungarian:
    def test_identity_favoring(self):
        cost = np.ones((4, 4)) - np.eye(4)
        cols = hungarian(cost)
        assert np.array_equal(cols, np.arange(4))
        assert cost[np.arange(4), cols].sum() == 0.0

    def test_two_by_two(self):
        cols = hungarian([[4.0, 1.0], [2.0, 0.0]])
        assert list(cols) == [1, 0]  # brute force: cost 3 beats cost 4

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for n in range(1, 7):
            for _ in range(30):
                cost = rng.uniform(-10, 10, size=(n, n))
                cols = hungarian(cost)
                got = cost[np.arange(n), cols].sum()
                want, _ = hungarian_brute(cost.tolist())
                assert abs(got - want) < 1e-9
                assert sorted(cols) == list(range(n))

    def test_non_square_rejected(self):
        with pytest.raises(ShapeError):
            hungarian(np.zeros((2, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(ShapeError):
            hungarian(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestClusteringAccuracy:
    def test_relabeling_gives_one(self):
        assert clustering_accuracy([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0

    def test_half(self):
        assert clustering_accuracy([0, 1, 0, 1], [0, 0, 1, 1]) == 0.5

    def test_identity(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 4, size=40)
        assert clustering_accuracy(labels, labels) == 1.0

    def test_invariant_under_permutations(self):
        rng = np.random.default_rng(2)
        pred = rng.integers(0, 3, size=30)
        truth = rng.integers(0, 4, size=30)
        base = clustering_accuracy(pred, truth)
        perm_p = np.array([2, 0, 1])
        perm_t = np.array([3, 2, 0, 1])
        assert clustering_accuracy(perm_p[pred], truth) == base
        assert clustering_accuracy(pred, perm_t[truth]) == base

    def test_noise_counts_as_singletons(self):
        # two noise points can each match at most one truth sample
        acc = clustering_accuracy([0, 0, -1, -1], [0, 0, 1, 1])
        assert acc == 0.75

    def test_more_pred_clusters_than_truth(self):
        acc = clustering_accuracy([0, 1, 2, 3], [0, 0, 1, 1])
        assert acc == 0.5

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            clustering_accuracy([0, 1], [0, 1, 2])


class TestImprovement:
    def test_table_formula(self):
        assert abs(improvement(66.7, 55.2, 55.0) - 11.5) < 1e-12

    def test_negative_not_clipped(self):
        assert improvement(50.0, 55.2, 52.0) == 50.0 - 55.2


class TestPipelineConfig:
    def test_dtw_variants_only_in_original_space(self):
        for algo in ("kmeans_dtw", "kshape"):
            PipelineConfig(pipeline="os", algorithm=algo)
            for pipeline in ("ls", "pr", "prls"):
                with pytest.raises(ConfigError):
                    PipelineConfig(pipeline=pipeline, algorithm=algo)

    def test_unknown_names(self):
        with pytest.raises(ConfigError):
            PipelineConfig(pipeline="xyz", algorithm="kmeans")
        with pytest.raises(ConfigError):
            PipelineConfig(pipeline="os", algorithm="birch")

    def test_snapshot_is_jsonable(self):
        cfg = PipelineConfig(pipeline="prls", algorithm="kmeans",
                             cnn_gru=CnnGruConfig(seed=3))
        json.dumps(cfg.snapshot())


class TestRunPipeline:
    def test_os_kmeans_k1_majority_bound(self, small_dataset):
        cfg = PipelineConfig(pipeline="os", algorithm="kmeans", k=1, seed=0)
        report = run_pipeline(small_dataset, cfg)
        counts = np.bincount(small_dataset.labels)
        assert report.accuracy == counts.max() / small_dataset.n

    def test_pr_kmeans_separates_small_benchmark(self, small_dataset):
        cfg = PipelineConfig(pipeline="pr", algorithm="kmeans", p=8, seed=3)
        report = run_pipeline(small_dataset, cfg)
        assert report.accuracy >= 0.9
        assert set(report.stage_times) == {"project", "cluster"}

    def test_pr_dbscan_report_complete(self, small_dataset):
        cfg = PipelineConfig(pipeline="pr", algorithm="dbscan", p=8, seed=3)
        report = run_pipeline(small_dataset, cfg)
        assert report.accuracy is not None
        assert report.stage_times["project"] > 0.0
        assert "cluster" in report.stage_times
        json.dumps(report.to_dict())

    def test_prls_short_training(self, small_dataset):
        cfg = PipelineConfig(
            pipeline="prls", algorithm="kmeans", p=8, seed=3,
            cnn_gru=CnnGruConfig(seed=3, epochs=25),
        )
        report = run_pipeline(small_dataset, cfg)
        assert report.accuracy >= 0.9
        assert len(report.loss_history) == 25
        assert set(report.stage_times) == {"project", "train", "cluster"}

    def test_ls_dense_dae(self, small_dataset):
        cfg = PipelineConfig(
            pipeline="ls", algorithm="kmeans", seed=1,
            dense_dae=DenseDaeConfig(seed=1, epochs=10, hidden_dims=(16, 16, 24)),
        )
        report = run_pipeline(small_dataset, cfg)
        assert report.accuracy is not None
        assert len(report.loss_history) == 10

    def test_k_required_without_hint(self):
        ds = univariate_dataset([[0.0, 1.0], [1.0, 2.0]])
        with pytest.raises(ConfigError):
            run_pipeline(ds, PipelineConfig(pipeline="os", algorithm="kmeans", seed=0))

    def test_stage_annotated_errors(self):
        # unequal lengths cannot feed matrix algorithms; the error names the stage
        ds = univariate_dataset([[0.0, 1.0], [1.0, 2.0, 3.0]], labels=[0, 1], k_hint=2)
        with pytest.raises(ShapeError, match="stage: cluster"):
            run_pipeline(ds, PipelineConfig(pipeline="os", algorithm="kmeans", seed=0))

    def test_prls_raw_series_ablation(self, small_dataset):
        cfg = PipelineConfig(
            pipeline="prls", algorithm="kmeans", seed=2, prls_raw_series=True,
            cnn_gru=CnnGruConfig(seed=2, epochs=5, filters=(4, 6, 8), latent_dim=4),
        )
        report = run_pipeline(small_dataset, cfg)
        assert report.accuracy is not None
        assert "project" in report.stage_times  # stage exists, just not timed as FFT work

    def test_projection_cache_reused_across_runs(self, small_dataset, tmp_path):
        cfg = PipelineConfig(pipeline="pr", algorithm="kmeans", p=5, seed=4,
                             cache_dir=str(tmp_path))
        a = run_pipeline(small_dataset, cfg)
        files = list(tmp_path.glob("proj_*.tpj"))
        assert len(files) == 1
        stamp = files[0].stat().st_mtime_ns
        b = run_pipeline(small_dataset, cfg)
        assert files[0].stat().st_mtime_ns == stamp  # loaded, not recomputed
        assert np.array_equal(a.assignment.labels, b.assignment.labels)


class TestBenchmark:
    def test_runs_validated(self, small_dataset):
        cfg = PipelineConfig(pipeline="pr", algorithm="kmeans", p=4, seed=0)
        with pytest.raises(ParameterError):
            benchmark(small_dataset, cfg, runs=0)

    def test_single_run_std_zero(self, small_dataset):
        cfg = PipelineConfig(pipeline="pr", algorithm="kmeans", p=4, seed=0)
        res = benchmark(small_dataset, cfg, runs=1)
        assert res.std == 0.0 and len(res.reports) == 1

    def test_ten_reports_and_sample_std(self, small_dataset):
        cfg = PipelineConfig(pipeline="os", algorithm="kmeans", seed=5)
        res = benchmark(small_dataset, cfg, runs=10)
        assert len(res.reports) == 10
        accs = [r.accuracy for r in res.reports]
        assert abs(res.std - np.std(accs, ddof=1)) < 1e-12
        assert abs(res.mean - np.mean(accs)) < 1e-12
        assert [r.seed for r in res.reports] == [5 + i for i in range(10)]

    def test_exactly_reproducible(self, small_dataset):
        cfg = PipelineConfig(pipeline="pr", algorithm="kmeans", p=6, seed=2)
        a = benchmark(small_dataset, cfg, runs=4)
        b = benchmark(small_dataset, cfg, runs=4)
        assert a.mean == b.mean and a.std == b.std
        for ra, rb in zip(a.reports, b.reports):
            assert np.array_equal(ra.assignment.labels, rb.assignment.labels)

    def test_parallel_workers_match_serial(self, small_dataset, monkeypatch):
        cfg = PipelineConfig(pipeline="pr", algorithm="kmeans", p=4, seed=1)
        serial = benchmark(small_dataset, cfg, runs=3)
        monkeypatch.setenv("TEMPOPROJ_THREADS", "2")
        parallel = benchmark(small_dataset, cfg, runs=3, workers=2)
        assert serial.mean == parallel.mean
        for ra, rb in zip(serial.reports, parallel.reports):
            assert np.array_equal(ra.assignment.labels, rb.assignment.labels)


class TestReports:
    def _cells(self, means):
        cells = {}
        for (pipeline, algorithm), mean in means.items():
            cells[(pipeline, algorithm)] = BenchmarkResult(
                config={"pipeline": pipeline, "algorithm": algorithm},
                base_seed=0, runs=10, mean=mean, std=0.01, reports=[],
            )
        return cells

    def test_improvement_rows_use_best_baseline(self):
        cells = self._cells({
            ("os", "kmeans"): 0.552, ("os", "kmeans_dtw"): 0.550,
            ("ls", "kmeans"): 0.550, ("pr", "kmeans"): 0.606,
            ("prls", "kmeans"): 0.667,
        })
        rows = {(r["pipeline"], r["algorithm"]): r["improvement"]
                for r in improvement_rows(cells)}
        assert abs(rows[("pr", "kmeans")] - (0.606 - 0.552)) < 1e-12
        assert abs(rows[("prls", "kmeans")] - (0.667 - 0.552)) < 1e-12

    def test_dtw_baseline_included_in_kmeans_family(self):
        cells = self._cells({
            ("os", "kmeans"): 0.833, ("os", "kmeans_dtw"): 0.838,
            ("ls", "kmeans"): 0.833, ("pr", "kmeans"): 0.870,
        })
        rows = improvement_rows(cells)
        assert abs(rows[0]["improvement"] - (0.870 - 0.838)) < 1e-12

    def test_csv_and_json_outputs(self, tmp_path, small_dataset):
        cfg = PipelineConfig(pipeline="pr", algorithm="kmeans", p=4, seed=0)
        cells = {("pr", "kmeans"): benchmark(small_dataset, cfg, runs=2)}
        write_table_csv(cells, tmp_path / "table.csv")
        write_benchmark_json(cells, tmp_path / "report.json")
        write_timing_json(cells, tmp_path / "timing.json")
        table = (tmp_path / "table.csv").read_text().splitlines()
        assert table[0] == "pipeline,algorithm,mean_accuracy,std_accuracy"
        assert table[1].startswith("pr,kmeans,")
        doc = json.loads((tmp_path / "report.json").read_text())
        assert "pr/kmeans" in doc
        # deterministic bytes when times are excluded
        write_benchmark_json(cells, tmp_path / "report2.json")
        assert (tmp_path / "report.json").read_bytes() == (tmp_path / "report2.json").read_bytes()
